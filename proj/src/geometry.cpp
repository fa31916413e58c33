#include "anosov/geometry.hpp"

#include "anosov/splitting.hpp"

#include <algorithm>
#include <cmath>

namespace anosov {

namespace {

// Backward orbits of two points on one leaf merge like exp(-T ln lambda / r), while round-off
// separates them along E_s at the same rate; T balances the two near 1e-8.
int growth_steps(const FlowModel& m, const CurveOptions& o) {
  if (o.growth_steps > 0) return o.growth_steps;
  const double T = std::log(1e8) / std::log(std::abs(m.lambda_u)) * m.roof.constant;
  return int(std::ceil(T / o.step));
}

// Integrates dq/dtau = e_u(q) G_q / G_p in lifted charts.
class Tracer {
public:
  Tracer(const FlowModel& m, const Point3& p, const CurveOptions& o) : m_(m), o_(o) {
    const LocalUnstable lu = local_unstable(m_, p, o_);
    log_gp_ = lu.log_growth;
  }

  struct Sample {
    Vec3 dir;       // oriented unit tangent in the canonical chart
    double factor;  // G_p / G_q
  };

  Sample sample(const Point3& c, const Vec3& ref) const {
    const LocalUnstable lu = local_unstable(m_, c, o_);
    Vec3 e = lu.e;
    if (e.dot(ref) < 0) e = -e;
    return {e, std::exp(log_gp_ - lu.log_growth)};
  }

  // velocity in the lifted chart around y0
  Vec3 velocity(const Vec3& lifted, const Vec3& ref_lifted) const {
    Mat3 D;
    const Point3 c = canonical(m_, lifted, &D);
    const Sample s = sample(c, D * ref_lifted);
    return D.lu().solve(s.dir / s.factor);
  }

  // one RK4 step from canonical y0 with oriented field value k1 already known
  Point3 step(const Point3& y0, const Vec3& k1, double h, Mat3& D) const {
    const Vec3 k2 = velocity(y0 + 0.5 * h * k1, k1);
    const Vec3 k3 = velocity(y0 + 0.5 * h * k2, k1);
    const Vec3 k4 = velocity(y0 + h * k3, k1);
    return canonical(m_, y0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), &D);
  }

  const FlowModel& model() const { return m_; }

private:
  const FlowModel& m_;
  CurveOptions o_;
  double log_gp_ = 0.0;
};

}  // namespace

LocalUnstable local_unstable(const FlowModel& m, const Point3& q, const CurveOptions& opts) {
  const int K = growth_steps(m, opts);
  const Sweep s = unstable_sweep(m, q, K, K, opts.step);
  return {s.e, s.log_growth};
}

IntrinsicNorm intrinsic_norm(const FlowModel& m, const Point3& p, const Point3& q, const Vec3& v,
                             const CurveOptions& opts) {
  const LocalUnstable lp = local_unstable(m, p, opts);
  const LocalUnstable lq = local_unstable(m, q, opts);
  if (line_angle(v, lq.e) > 1e-6) throw validation_error("not_tangent", "vector is not tangent to the unstable direction at q");
  // backward orbits of points on one unstable leaf merge; flow or stable offsets do not
  const double d0 = point_distance(m, p, q);
  if (d0 > 1e-12) {
    const double back = point_distance(m, flow_map(m, p, -8.0), flow_map(m, q, -8.0));
    if (back > 0.05 * d0) throw validation_error("not_on_curve", "q does not lie on the unstable manifold of p");
  }
  const int K = growth_steps(m, opts);
  IntrinsicNorm r;
  r.value = metric_norm(m, q, v) * std::exp(lp.log_growth - lq.log_growth);
  r.tail_bound = r.value * std::exp(-m.rate * K * opts.step) * (1.0 + d0);
  return r;
}

InvariantCurve curve_at_params(const FlowModel& model, const Point3& p, CurveKind kind, const std::vector<double>& tau,
                               const CurveOptions& opts) {
  const FlowModel rev = kind == CurveKind::stable ? time_reversed(model) : FlowModel{};
  const FlowModel& m = kind == CurveKind::stable ? rev : model;
  const Tracer tr(m, p, opts);

  InvariantCurve c;
  c.basepoint = p;
  c.kind = kind;
  const std::size_t n = tau.size();
  c.tau = tau;
  c.points.resize(n);
  c.tangents.resize(n);
  c.factor.resize(n);

  const Tracer::Sample s0 = tr.sample(p, orient(local_unstable(m, p, opts).e));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tau[a] < tau[b]; });

  for (int side : {1, -1}) {
    Point3 y = p;
    Tracer::Sample s = s0;  // s.dir points toward +tau in the chart of y
    double t = 0.0;
    auto visit = [&](std::size_t i) {
      const double target = tau[i];
      const int nsub = int(std::ceil(std::abs(target - t) / opts.max_rk_step - 1e-12));
      for (int k = 0; k < nsub; ++k) {
        const double h = (target - t) / (nsub - k);
        Mat3 D;
        y = tr.step(y, s.dir / s.factor, h, D);
        s = tr.sample(y, D * s.dir);
        t += h;
      }
      t = target;
      c.points[i] = y;
      c.tangents[i] = s.dir;
      c.factor[i] = s.factor;
    };
    if (side > 0) {
      for (std::size_t i : order)
        if (tau[i] >= 0.0) visit(i);
    } else {
      for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (tau[*it] < 0.0) visit(*it);
    }
  }
  return c;
}

InvariantCurve invariant_curve(const FlowModel& m, const Point3& p, CurveKind kind, double L, double step,
                               const CurveOptions& opts) {
  if (!(L > 0.0) || !(step > 0.0)) throw validation_error("curve_grid", "L and step must be positive");
  const int half = int(std::llround(L / step));
  if (std::abs(half * step - L) > 1e-9 * L) throw validation_error("curve_grid", "L must be a multiple of step");
  std::vector<double> tau(2 * half + 1);
  for (int i = -half; i <= half; ++i) tau[i + half] = i * step;
  return curve_at_params(m, p, kind, tau, opts);
}

}  // namespace anosov
