#pragma once

#include "anosov/geometry.hpp"
#include "anosov/splitting.hpp"

#include <vector>

namespace anosov {

enum class Reference {
  min_norm,    // smallest dual-metric norm in the admissible affine plane
  transverse,  // annihilates a fixed smooth field transverse to the unstable-flow plane
};

struct SectionOptions {
  Reference reference = Reference::min_norm;
  int grid = 513;               // uniform template grid on [-1, 1]
  int max_terms = 0;            // series truncation; 0: run until |A_i| < cutoff
  double cutoff = 1e-10;
  double a_lo = 0.25, a_hi = 0.5;
  int cheb_degree = 32;
  double min_window = 1.0 / 16;
  CurveOptions curve;
  SplitOptions split;
};

// sections on a curve node, tangent = derivative of the intrinsic parametrization
Covector perp_covector(const FlowModel& m, const Vec3& tangent);
Covector reference_covector(const FlowModel& m, const Point3& q, const Vec3& tangent, Reference ref);
// element of E_0^*: kills e_s and e_u, pairs to 1 with v
Covector stable_covector(const FlowModel& m, const Point3& q, const Vec3& e_u, const Vec3& e_s);

// coefficient c with gamma = c * perp for gamma proportional to perp
double perp_coefficient(const FlowModel& m, const Point3& q, const Covector& gamma, const Covector& perp);

struct SectionSamples {
  InvariantCurve curve;
  std::vector<Vec3> e_s;
  std::vector<Covector> perp, ref, stable, straight;  // perp carries the base-point sign convention
  std::vector<double> psi_stable;    // representation of gamma^s w.r.t. (ref, perp)
  std::vector<double> psi_straight;  // representation of gamma^0 w.r.t. (ref, perp)
};

// Straight-section representation along the curve through p, up to an affine function.
struct StraightSeries {
  std::vector<double> psi;    // at curve.tau, relative to the raw perp frame
  std::vector<double> steps;  // backward times t(i+1) - t(i)
  std::vector<double> scale;  // cumulative A_i, signed
  int terms = 0;
  double tail_bound = 0.0;
};
StraightSeries straight_series(const FlowModel& m, const InvariantCurve& base, const SectionOptions& opts = {});

// Endpoint-specified straight section gamma^0 = ref + psi * perp on nodes that include -1, 0, 1.
struct StraightSection {
  InvariantCurve curve;
  std::vector<Covector> ref, perp;  // perp with the base-point sign convention
  std::vector<double> psi;          // representation relative to (ref, perp)
  double sign = 1.0;
  int terms = 0;
  double tail_bound = 0.0;
};
StraightSection straight_section(const FlowModel& m, const Point3& p, const std::vector<double>& tau,
                                 const SectionOptions& opts = {});

struct Template {
  Point3 basepoint;
  std::vector<double> tau, values;
  bool endpoint_normalized = true;
  int terms = 0;
  double tail_bound = 0.0;
  double lipschitz = 0.0;  // max |dpsi| / dtau over the grid
  double sign = 1.0;       // orientation of perp making <perp(0), e_s(p)> > 0
  SectionSamples samples;
};

Template s_template(const FlowModel& m, const Point3& p, const SectionOptions& opts = {});

struct Miniature {
  double t = 0.0;         // flow time with a(t) = 1/delta
  double residual = 0.0;  // relative L2 after removing the best affine fit
  double alpha = 0.0, beta = 0.0;
  double alpha_over_log = 0.0;  // alpha / <log delta>
};

Miniature miniature_residual(const FlowModel& m, const Point3& q, double delta, const SectionOptions& opts = {});

// flow time t > 0 with expansion_factor(m, q, t) = target (> 1) or t < 0 for target < 1
double time_for_expansion(const FlowModel& m, const Point3& q, const Vec3& e_u, double target);

struct Straightness {
  double kappa0 = 0.0;
  std::vector<double> t, kappa;          // pullbacks of gamma^0 under f^{-t}
  std::vector<double> kappa_reference;   // same for the reference section (not straight)
};

Straightness straightness_test(const FlowModel& m, const Point3& p, const std::vector<double>& times,
                               const SectionOptions& opts = {});

}  // namespace anosov
