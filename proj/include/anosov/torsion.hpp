#pragma once

#include "anosov/sections.hpp"

#include <vector>

namespace anosov {

struct TorsionOptions {
  SectionOptions sections;
  int nodes = 129;           // nodes on (-delta, delta)
  double fit_fraction = 0.8; // slope fitted on the middle part of the interval
  double min_delta = 1.0 / 64;
};

// psi^dagger on (-delta, delta): representation of the pulled-back straight section of f^t q
// relative to the restricted straight section of q.
struct DaggerProfile {
  double t = 0.0;
  std::vector<double> tau, psi;
  double slope = 0.0, intercept = 0.0;
  double affine_residual = 0.0;  // max deviation from the affine fit on the fit window
};

DaggerProfile dagger_profile(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& opts = {});

struct TorsionReport {
  Point3 point;
  double delta_scale = 0.0;
  double tor_s = 0.0, tor_u = 0.0, delta_value = 0.0;
  double affine_residual = 0.0;  // worst of the stable and unstable fits
};

double torsion_s(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& opts = {},
                 double* affine_residual = nullptr);
double torsion_u(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& opts = {},
                 double* affine_residual = nullptr);
TorsionReport torsions_and_delta(const FlowModel& m, const Point3& q, double delta, const TorsionOptions& opts = {});

}  // namespace anosov
