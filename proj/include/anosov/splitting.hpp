#pragma once

#include "anosov/manifold.hpp"

namespace anosov {

struct SplitOptions {
  double tol = 1e-12;         // target angle error
  double horizon = 0.0;       // 0: chosen from the hyperbolicity rate
  double max_horizon = 400.0;
  double step = 1.0;          // checkpoint spacing in time
};

struct Frame {
  Point3 point;
  Vec3 v, e_s, e_u;                // e_s, e_u unit in the ambient metric
  Covector dual_0, dual_s, dual_u; // rows of [v e_s e_u]^{-1}
  double residual = 0.0;           // angle change under horizon extension
  double condition = 0.0;          // condition number of [v e_s e_u]
  double horizon = 0.0;
};

// Unit (ambient metric) unstable direction at p plus log-growth over the last n_tail steps.
struct Sweep {
  Vec3 e;
  double log_growth = 0.0;
};

// n_conv steps to converge, then n_tail steps during which growth is accumulated.
Sweep unstable_sweep(const FlowModel& m, const Point3& p, int n_conv, int n_tail, double step);
Sweep stable_sweep(const FlowModel& m, const Point3& p, int n_conv, int n_tail, double step);

// number of checkpoint steps needed for an angle error below tol
int default_steps(const FlowModel& m, double tol, double step);

Vec3 unstable_direction(const FlowModel& m, const Point3& p, const SplitOptions& opts = {}, double* residual = nullptr);
Vec3 stable_direction(const FlowModel& m, const Point3& p, const SplitOptions& opts = {}, double* residual = nullptr);

Frame splitting_at(const FlowModel& m, const Point3& p, const SplitOptions& opts = {});

// |Df^t_p e_u(p)| in the ambient metric, e_u unit at p
double expansion_factor(const FlowModel& m, const Point3& p, double t, const SplitOptions& opts = {});
double expansion_factor(const FlowModel& m, const Point3& p, const Vec3& e_u, double t);

// e_u with positive first nonzero coordinate
Vec3 orient(const Vec3& v);

}  // namespace anosov
