#pragma once

#include "anosov/core.hpp"
#include "anosov/trig.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace anosov {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// One additive piece of the time change phi on M, in fundamental-domain coordinates.
class TimeChangeTerm {
public:
  virtual ~TimeChangeTerm() = default;
  virtual double value(const Point3& p) const = 0;
  virtual Vec3 gradient(const Point3& p) const = 0;
  // Appends z-intervals of [0, roof) on the fiber over w outside of which the term vanishes.
  virtual void fiber_windows(const Vec2& w, double roof, std::vector<Interval>& out) const = 0;
  virtual double sup_bound() const = 0;
  // Lower/upper z-extent for terms with a fixed vertical support; empty when the term lives on M directly.
  virtual bool fixed_support(double& lo, double& hi) const {
    (void)lo;
    (void)hi;
    return false;
  }
  virtual std::string describe() const = 0;
  // Adds values (and w-gradients when dw is non-null) at n heights on the fiber over w.
  virtual void fiber_values(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw) const;
};

// T(x,y) * bump profile in z supported in (z_lo, z_hi).
class TrigProfileTerm final : public TimeChangeTerm {
public:
  TrigProfileTerm(TrigPoly modes, double z_lo, double z_hi);
  double value(const Point3& p) const override;
  Vec3 gradient(const Point3& p) const override;
  void fiber_windows(const Vec2& w, double roof, std::vector<Interval>& out) const override;
  double sup_bound() const override;
  bool fixed_support(double& lo, double& hi) const override;
  std::string describe() const override;
  void fiber_values(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw) const override;
  const TrigPoly& modes() const { return modes_; }
  double z_lo() const { return z_lo_; }
  double z_hi() const { return z_hi_; }

private:
  TrigPoly modes_;
  double z_lo_, z_hi_;
};

using TermPtr = std::shared_ptr<const TimeChangeTerm>;

struct ModelOptions {
  int fiber_panels = 16;       // GK15 panels per support window
  double support_margin = 1e-3; // epsilon in the admissibility check of time-change supports
  int roof_check_grid = 512;
};

struct FlowModel {
  Mat2i base;
  Mat2 A, A_inv;
  TrigPoly roof;
  std::vector<TermPtr> timechange;
  int time_sign = 1;

  double lambda_u = 0.0, lambda_s = 0.0;  // eigenvalues with |lambda_u| > 1
  Vec2 e_unstable, e_stable;              // unit eigenvectors, positive first nonzero coordinate
  double r_min = 0.0, r_max = 0.0;
  double phi_sup = 0.0;
  double rate = 0.0;  // lower bound for the expansion rate per unit time
  int fiber_panels = 16;

  double r(const Vec2& w) const { return roof.value(w); }
  Vec2 dr(const Vec2& w) const { return roof.gradient(w); }
  bool has_timechange() const { return !timechange.empty(); }
  double phi(const Point3& p) const;
  Vec3 dphi(const Point3& p) const;
};

FlowModel make_suspension(const Mat2i& base, const TrigPoly& roof, std::vector<TermPtr> timechange = {},
                          const ModelOptions& opts = {});
FlowModel time_reversed(const FlowModel& m);
FlowModel with_extra_timechange(const FlowModel& m, const std::vector<TermPtr>& extra);

Vec2 wrap(const Vec2& w);

// Reduce a lifted point (any w, any z on the extended fiber) to the fundamental domain.
// D, if given, receives the derivative of the reduction (lifted chart -> canonical chart).
Point3 canonical(const FlowModel& m, const Vec3& lifted, Mat3* D = nullptr);

// Derivative of the gluing (w, r(w)) ~ (Aw, 0) taken at the top-chart base point w.
Mat3 glue_jacobian(const FlowModel& m, const Vec2& w);
// Inverse gluing derivative; wb is the bottom-chart base point.
Mat3 unglue_jacobian(const FlowModel& m, const Vec2& wb);

Point3 flow_map(const FlowModel& m, const Point3& p, double t);
Mat3 flow_jacobian(const FlowModel& m, const Point3& p, double t);
Point3 flow_with_jacobian(const FlowModel& m, const Point3& p, double t, Mat3& jac);

Vec3 generator(const FlowModel& m, const Point3& p);

// Smooth ambient metric: Euclidean near the bottom, pulled back by the gluing near the top.
Mat3 metric(const FlowModel& m, const Point3& p);
double metric_norm(const FlowModel& m, const Point3& p, const Vec3& v);

// mu(a, b, c) for the invariant volume mu = dx dy dz / (1 + phi)
double volume_form(const FlowModel& m, const Point3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// time along the fiber over w from z0 to z1 (either order, signed)
double fiber_time(const FlowModel& m, const Vec2& w, double z0, double z1);

// Rejection sampler for the normalized invariant volume; sample i depends only on (seed, i).
Point3 sample_volume(const FlowModel& m, std::uint64_t seed, std::uint64_t index);
std::vector<Point3> volume_sampler(const FlowModel& m, std::uint64_t seed, std::size_t n);

// Distance on M that respects lattice wrap and the gluing.
double point_distance(const FlowModel& m, const Point3& p, const Point3& q);

}  // namespace anosov
