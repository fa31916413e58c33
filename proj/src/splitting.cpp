#include "anosov/splitting.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace anosov {

Vec3 orient(const Vec3& v) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v(i)) > 1e-14 * v.norm()) return v(i) < 0 ? Vec3(-v) : v;
  }
  return v;
}

Sweep unstable_sweep(const FlowModel& m, const Point3& p, int n_conv, int n_tail, double step) {
  const int N = n_conv + n_tail;
  thread_local std::vector<Point3> x;
  x.resize(N + 1);
  x[0] = p;
  for (int k = 0; k < N; ++k) x[k + 1] = flow_map(m, x[k], -step);

  // w-part of E_u is the expanding eigenvector of the base map (of its inverse when time runs backwards)
  const Vec2 seed = m.time_sign > 0 ? m.e_unstable : m.e_stable;
  Vec3 u(seed.x(), seed.y(), 0.0);
  u /= metric_norm(m, x[N], u);
  Sweep s;
  for (int k = N; k >= 1; --k) {
    u = flow_jacobian(m, x[k], step) * u;
    const double n = metric_norm(m, x[k - 1], u);
    if (k <= n_tail) s.log_growth += std::log(n);
    u /= n;
  }
  s.e = orient(u);
  return s;
}

Sweep stable_sweep(const FlowModel& m, const Point3& p, int n_conv, int n_tail, double step) {
  return unstable_sweep(time_reversed(m), p, n_conv, n_tail, step);
}

int default_steps(const FlowModel& m, double tol, double step) {
  return int(std::ceil(std::log(1.0 / tol) / m.rate / step)) + 2;
}

namespace {

Vec3 converged_direction(const FlowModel& m, const Point3& p, const SplitOptions& opts, double* residual) {
  const double h = opts.step;
  int n = opts.horizon > 0 ? int(std::ceil(opts.horizon / h)) : default_steps(m, opts.tol, h);
  const double accept = std::max(10.0 * opts.tol, 1e-13);
  double angle = 0.0;
  while (true) {
    const Vec3 a = unstable_sweep(m, p, n, 0, h).e;
    const Vec3 b = unstable_sweep(m, p, n + n / 2, 0, h).e;
    angle = line_angle(a, b);
    if (angle <= accept) {
      if (residual) *residual = angle;
      return b;
    }
    n *= 2;
    if (n * h > opts.max_horizon) {
      std::ostringstream os;
      os << "power iteration did not converge within horizon " << opts.max_horizon << " (residual " << angle << ")";
      throw numerical_error("non_convergence", os.str());
    }
  }
}

}  // namespace

Vec3 unstable_direction(const FlowModel& m, const Point3& p, const SplitOptions& opts, double* residual) {
  return converged_direction(m, p, opts, residual);
}

Vec3 stable_direction(const FlowModel& m, const Point3& p, const SplitOptions& opts, double* residual) {
  return converged_direction(time_reversed(m), p, opts, residual);
}

Frame splitting_at(const FlowModel& m, const Point3& p, const SplitOptions& opts) {
  Frame f;
  f.point = p;
  double ru = 0.0, rs = 0.0;
  f.e_u = unstable_direction(m, p, opts, &ru);
  f.e_s = stable_direction(m, p, opts, &rs);
  f.v = generator(m, p);
  f.residual = std::max(ru, rs);
  f.horizon = (opts.horizon > 0 ? opts.horizon : default_steps(m, opts.tol, opts.step) * opts.step);
  Mat3 M;
  M << f.v, f.e_s, f.e_u;
  const Vec3 sv = Eigen::JacobiSVD<Mat3>(M).singularValues();
  f.condition = sv(0) / sv(2);
  const Mat3 Minv = M.inverse();
  f.dual_0 = Minv.row(0).transpose();
  f.dual_s = Minv.row(1).transpose();
  f.dual_u = Minv.row(2).transpose();
  return f;
}

double expansion_factor(const FlowModel& m, const Point3& p, const Vec3& e_u, double t) {
  Mat3 J;
  const Point3 q = flow_with_jacobian(m, p, t, J);
  return metric_norm(m, q, J * e_u) / metric_norm(m, p, e_u);
}

double expansion_factor(const FlowModel& m, const Point3& p, double t, const SplitOptions& opts) {
  return expansion_factor(m, p, unstable_direction(m, p, opts), t);
}

}  // namespace anosov
