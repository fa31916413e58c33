#include "anosov/sections.hpp"

#include "anosov/cheb.hpp"
#include "anosov/smooth.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace anosov {

Covector perp_covector(const FlowModel& m, const Vec3& tangent) {
  // mu(v, w', .) with v = sign (0, 0, 1 + phi) and mu = dx dy dz / (1 + phi)
  return double(m.time_sign) * Covector(-tangent.y(), tangent.x(), 0.0);
}

Covector reference_covector(const FlowModel& m, const Point3& q, const Vec3& tangent, Reference ref) {
  const Vec3 v = generator(m, q);
  if (ref == Reference::min_norm) {
    const Mat3 g = metric(m, q);
    Eigen::Matrix<double, 2, 3> C;
    C.row(0) = tangent.transpose();
    C.row(1) = v.transpose();
    const Eigen::Matrix2d G = C * g * C.transpose();
    return g * C.transpose() * G.lu().solve(Eigen::Vector2d(0.0, 1.0));
  }
  // field interpolating the base direction transverse to the curve, continuous across the gluing
  const Vec2 w = q.head<2>();
  const Vec2 eb = m.time_sign > 0 ? m.e_stable : m.e_unstable;
  const double beta = smooth::step(3.0 * (q.z() / m.r(w) - 1.0 / 3.0));
  const Vec3 e0(eb.x(), eb.y(), 0.0);
  const Vec3 X = (1.0 - beta) * e0 + beta * glue_jacobian(m, w).inverse() * e0;
  Mat3 S;
  S.row(0) = tangent.transpose();
  S.row(1) = v.transpose();
  S.row(2) = X.transpose();
  return S.lu().solve(Vec3(0.0, 1.0, 0.0));
}

Covector stable_covector(const FlowModel& m, const Point3& q, const Vec3& e_u, const Vec3& e_s) {
  Mat3 S;
  S.row(0) = e_u.transpose();
  S.row(1) = e_s.transpose();
  S.row(2) = generator(m, q).transpose();
  return S.lu().solve(Vec3(0.0, 0.0, 1.0));
}

double perp_coefficient(const FlowModel& m, const Point3& q, const Covector& gamma, const Covector& perp) {
  const Vec3 Y = metric(m, q).lu().solve(perp);
  return gamma.dot(Y) / perp.dot(Y);
}

namespace {

// ambient-unit direction -> derivative of the intrinsic parametrization
Vec3 param_tangent(const InvariantCurve& c, std::size_t i) { return c.tangents[i] / c.factor[i]; }

std::size_t zero_index(const InvariantCurve& c) {
  for (std::size_t i = 0; i < c.tau.size(); ++i)
    if (c.tau[i] == 0.0) return i;
  throw validation_error("curve_grid", "curve has no node at tau = 0");
}

struct BackStep {
  double dt = 0.0;
  double a = 0.0;  // signed contraction of the intrinsic parameter
  Point3 next;
};

// backward time with contraction in [a_lo, a_hi]; e is ambient-unit and oriented at p
BackStep choose_step(const FlowModel& m, const Point3& p, const Vec3& e, const SectionOptions& o) {
  double t_hi = 0.0, t = 0.0, a = 1.0;
  while (true) {
    t -= 0.25;
    a = expansion_factor(m, p, e, t);
    if (a <= o.a_hi) break;
    t_hi = t;
    if (t < -60.0) throw numerical_error("step_search", "no backward contraction found");
  }
  double t_lo = t;
  for (int it = 0; it < 60 && a < o.a_lo; ++it) {
    t = 0.5 * (t_lo + t_hi);
    a = expansion_factor(m, p, e, t);
    if (a > o.a_hi) t_hi = t;
    else if (a < o.a_lo) t_lo = t;
  }
  if (a < o.a_lo || a > o.a_hi) throw numerical_error("step_search", "contraction band not reached");
  BackStep s;
  s.dt = t;
  Mat3 J;
  s.next = flow_with_jacobian(m, p, t, J);
  const Vec3 e_next = orient(local_unstable(m, s.next, o.curve).e);
  s.a = ((J * e).dot(e_next) >= 0 ? 1.0 : -1.0) * a;
  return s;
}

// transition coefficient chi at each node for the map f^dt
std::vector<double> transition(const FlowModel& m, const InvariantCurve& c, double dt, Reference ref) {
  std::vector<double> chi(c.tau.size());
  for (std::size_t k = 0; k < c.tau.size(); ++k) {
    const Point3& q = c.points[k];
    const Vec3 wq = param_tangent(c, k);
    Mat3 J;
    const Point3 y = flow_with_jacobian(m, q, dt, J);
    const Covector pulled = J.transpose() * reference_covector(m, y, J * wq, ref);
    chi[k] = perp_coefficient(m, q, pulled - reference_covector(m, q, wq, ref), perp_covector(m, wq));
  }
  return chi;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

StraightSeries straight_series(const FlowModel& m, const InvariantCurve& base, const SectionOptions& o) {
  StraightSeries s;
  const std::size_t n = base.tau.size();
  const std::size_t i0 = zero_index(base);

  BackStep st = choose_step(m, base.basepoint, base.tangents[i0], o);
  s.psi = transition(m, base, st.dt, o.reference);
  s.steps.push_back(st.dt);
  double A = st.a;
  s.scale.push_back(A);
  Point3 p = st.next;
  s.terms = 1;

  const std::vector<double> x = cheb::lobatto(o.cheb_degree);
  double last = 0.0;
  while (true) {
    if (o.max_terms > 0 ? s.terms >= o.max_terms : std::abs(A) < o.cutoff) break;
    if (s.terms > 400) throw numerical_error("series", "straight-section series did not reach the cutoff");
    const double W = std::max(std::abs(A), o.min_window);
    std::vector<double> nodes(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) nodes[k] = W * x[k];
    const InvariantCurve c = curve_at_params(m, p, CurveKind::unstable, nodes, o.curve);
    st = choose_step(m, p, c.tangents[o.cheb_degree / 2], o);
    const std::vector<double> coef = cheb::coefficients(transition(m, c, st.dt, o.reference));

    // derivatives at 0 of f(x) = chi(W x)
    std::vector<double> d0(7);
    std::vector<double> dc = coef;
    for (int k = 0; k <= 6; ++k) {
      d0[k] = cheb::evaluate(dc, 0.0);
      dc = cheb::derivative(dc);
    }
    const double rho = A / W;
    last = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = rho * base.tau[j];
      double v;
      if (std::abs(rho) >= 1e-3) {
        v = (cheb::evaluate(coef, u) - d0[0] - d0[1] * u) / A;
      } else {
        v = 0.0;
        double uk = u;
        for (int k = 2; k <= 6; ++k) {
          uk *= u;
          v += d0[k] * uk / factorial(k);
        }
        v /= A;
      }
      s.psi[j] += v;
      last = std::max(last, std::abs(v));
    }
    A *= st.a;
    s.steps.push_back(st.dt);
    s.scale.push_back(A);
    p = st.next;
    ++s.terms;
  }
  s.tail_bound = last * o.a_hi / (1.0 - o.a_hi);
  return s;
}

namespace {

std::size_t node_index(const std::vector<double>& tau, double x) {
  for (std::size_t i = 0; i < tau.size(); ++i)
    if (tau[i] == x) return i;
  throw validation_error("curve_grid", "straight section nodes must contain -1, 0 and 1");
}

std::vector<double> uniform_grid(int N) {
  if (N < 3 || N % 2 == 0) throw validation_error("grid", "template grid size must be odd and >= 3");
  std::vector<double> tau(N);
  for (int j = 0; j < N; ++j) tau[j] = -1.0 + 2.0 * j / (N - 1);
  tau[(N - 1) / 2] = 0.0;
  tau.front() = -1.0;
  tau.back() = 1.0;
  return tau;
}

}  // namespace

StraightSection straight_section(const FlowModel& m, const Point3& p, const std::vector<double>& tau,
                                 const SectionOptions& o) {
  const std::size_t ilo = node_index(tau, -1.0), imid = node_index(tau, 0.0), ihi = node_index(tau, 1.0);
  StraightSection S;
  S.curve = curve_at_params(m, p, CurveKind::unstable, tau, o.curve);
  const InvariantCurve& c = S.curve;
  const std::size_t N = tau.size();
  S.ref.resize(N);
  S.perp.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    const Vec3 w = param_tangent(c, j);
    S.perp[j] = perp_covector(m, w);
    S.ref[j] = reference_covector(m, c.points[j], w, o.reference);
  }
  const StraightSeries ser = straight_series(m, c, o);
  S.terms = ser.terms;
  S.tail_bound = ser.tail_bound;

  // E_0^* membership at the endpoints fixes the affine part
  auto psi_tilde = [&](std::size_t j) {
    const Vec3 es = stable_direction(m, c.points[j], o.split);
    return std::make_pair(-S.ref[j].dot(es) / S.perp[j].dot(es), es);
  };
  const double d_lo = psi_tilde(ilo).first - ser.psi[ilo];
  const double d_hi = psi_tilde(ihi).first - ser.psi[ihi];
  const Vec3 es0 = stable_direction(m, c.points[imid], o.split);
  S.sign = S.perp[imid].dot(es0) >= 0 ? 1.0 : -1.0;
  S.psi.resize(N);
  for (std::size_t j = 0; j < N; ++j) {
    const double L = 0.5 * (d_lo * (1.0 - tau[j]) + d_hi * (1.0 + tau[j]));
    S.psi[j] = S.sign * (ser.psi[j] + L);
    S.perp[j] *= S.sign;
  }
  return S;
}

Template s_template(const FlowModel& m, const Point3& p, const SectionOptions& o) {
  const std::vector<double> tau = uniform_grid(o.grid);
  const int N = o.grid;
  StraightSection st = straight_section(m, p, tau, o);

  Template T;
  T.basepoint = p;
  T.tau = tau;
  T.terms = st.terms;
  T.tail_bound = st.tail_bound;
  T.sign = st.sign;
  SectionSamples& S = T.samples;
  S.curve = std::move(st.curve);
  S.ref = std::move(st.ref);
  S.perp = std::move(st.perp);
  S.psi_straight = std::move(st.psi);
  const InvariantCurve& c = S.curve;
  S.e_s.resize(N);
  S.stable.resize(N);
  S.straight.resize(N);
  S.psi_stable.resize(N);
  T.values.resize(N);
  for (int j = 0; j < N; ++j) {
    S.e_s[j] = stable_direction(m, c.points[j], o.split);
    S.stable[j] = stable_covector(m, c.points[j], c.tangents[j], S.e_s[j]);
    // gamma^s - gamma^ref is a multiple of perp and gamma^s kills e_s
    S.psi_stable[j] = -S.ref[j].dot(S.e_s[j]) / S.perp[j].dot(S.e_s[j]);
    S.straight[j] = S.ref[j] + S.psi_straight[j] * S.perp[j];
    T.values[j] = S.psi_stable[j] - S.psi_straight[j];
  }
  T.values.front() = 0.0;
  T.values.back() = 0.0;
  for (int j = 0; j + 1 < N; ++j)
    T.lipschitz = std::max(T.lipschitz, std::abs(T.values[j + 1] - T.values[j]) / (tau[j + 1] - tau[j]));
  return T;
}

double time_for_expansion(const FlowModel& m, const Point3& q, const Vec3& e_u, double target) {
  if (!(target > 0.0)) throw validation_error("expansion_target", "target factor must be positive");
  if (target == 1.0) return 0.0;
  const double dir = target > 1.0 ? 1.0 : -1.0;
  const double lt = std::log(target);
  auto F = [&](double t) { return std::log(expansion_factor(m, q, e_u, t)) - lt; };
  double t0 = 0.0, t1 = 0.0, f1 = F(0.0);
  while (dir * f1 < 0.0) {
    t0 = t1;
    t1 += dir * 0.5;
    f1 = F(t1);
    if (std::abs(t1) > 200.0) throw numerical_error("root_find", "expansion target not reached");
  }
  if (f1 == 0.0) return t1;
  std::uintmax_t it = 100;
  const auto r = boost::math::tools::toms748_solve(F, std::min(t0, t1), std::max(t0, t1),
                                                   boost::math::tools::eps_tolerance<double>(50), it);
  if (it >= 100) throw numerical_error("root_find", "expansion root did not converge");
  return 0.5 * (r.first + r.second);
}

namespace {

// linear interpolation on a uniform grid over [-1, 1]
double grid_value(const std::vector<double>& tau, const std::vector<double>& v, double s) {
  const int N = int(tau.size());
  const double h = 2.0 / (N - 1);
  double u = (s + 1.0) / h;
  int k = std::clamp(int(std::floor(u)), 0, N - 2);
  const double f = u - k;
  if (std::abs(f) < 1e-9) return v[k];
  if (std::abs(f - 1.0) < 1e-9) return v[k + 1];
  return (1.0 - f) * v[k] + f * v[k + 1];
}

// least-squares affine fit y ~ a x + b
void affine_fit(const std::vector<double>& x, const std::vector<double>& y, double& a, double& b) {
  Eigen::MatrixXd M(x.size(), 2);
  Eigen::VectorXd Y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    M(i, 0) = x[i];
    M(i, 1) = 1.0;
    Y(i) = y[i];
  }
  const Eigen::Vector2d c = M.colPivHouseholderQr().solve(Y);
  a = c(0);
  b = c(1);
}

double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / v.size());
}

}  // namespace

Miniature miniature_residual(const FlowModel& m, const Point3& q, double delta, const SectionOptions& o) {
  if (!(delta > 0.0 && delta <= 1.0)) throw validation_error("delta", "delta must lie in (0, 1]");
  Miniature r;
  const Template tq = s_template(m, q, o);
  const Template tp = delta == 1.0 ? tq : [&] {
    const Vec3 e = tq.samples.curve.tangents[(o.grid - 1) / 2];
    r.t = time_for_expansion(m, q, e, 1.0 / delta);
    return s_template(m, flow_map(m, q, r.t), o);
  }();

  // orientation of the flowed curve and of the two perp frames
  double eps = 1.0;
  if (delta != 1.0) {
    const int mid = (o.grid - 1) / 2;
    Mat3 J;
    flow_with_jacobian(m, q, r.t, J);
    eps = (J * tq.samples.curve.tangents[mid]).dot(tp.samples.curve.tangents[mid]) >= 0 ? 1.0 : -1.0;
  }
  const double sg = tq.sign * tp.sign * eps;

  std::vector<double> x, lhs, rhs, diff;
  for (std::size_t j = 0; j < tq.tau.size(); ++j) {
    const double s = tq.tau[j];
    if (std::abs(s) > delta * (1.0 + 1e-12)) continue;
    x.push_back(s);
    lhs.push_back(tq.values[j]);
    rhs.push_back(sg * delta * grid_value(tp.tau, tp.values, std::clamp(eps * s / delta, -1.0, 1.0)));
    diff.push_back(lhs.back() - rhs.back());
  }
  affine_fit(x, diff, r.alpha, r.beta);
  double ra, rb;
  affine_fit(x, rhs, ra, rb);
  std::vector<double> res(x.size()), rhs_na(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    res[i] = diff[i] - r.alpha * x[i] - r.beta;
    rhs_na[i] = rhs[i] - ra * x[i] - rb;
  }
  r.residual = rms(res) / std::max(rms(rhs_na), 1e-6);
  r.alpha_over_log = r.alpha / std::sqrt(1.0 + std::pow(std::log(delta), 2));
  return r;
}

Straightness straightness_test(const FlowModel& m, const Point3& p, const std::vector<double>& times,
                               const SectionOptions& o) {
  const Template T = s_template(m, p, o);
  const SectionSamples& S = T.samples;
  const int N = int(T.tau.size());
  const double h = T.tau[1] - T.tau[0];
  auto curvature = [&](const std::vector<double>& F, double A) {
    double k = 0.0;
    for (int j = 1; j + 1 < N; ++j) k = std::max(k, std::abs(F[j + 1] - 2.0 * F[j] + F[j - 1]) / (h * h));
    return k / (A * A);
  };

  Straightness r;
  r.kappa0 = curvature(S.psi_straight, 1.0);
  const int mid = (N - 1) / 2;
  for (double t : times) {
    const double A = expansion_factor(m, p, S.curve.tangents[mid], -t);
    std::vector<double> F(N), G(N);
    for (int j = 0; j < N; ++j) {
      Mat3 J;
      const Point3 x = flow_with_jacobian(m, S.curve.points[j], -t, J);
      const Vec3 wx = J * param_tangent(S.curve, j) / A;
      const Mat3 JinvT = J.inverse().transpose();
      const Covector rx = reference_covector(m, x, wx, o.reference);
      const Covector px = perp_covector(m, wx);
      F[j] = perp_coefficient(m, x, JinvT * S.straight[j] - rx, px);
      G[j] = perp_coefficient(m, x, JinvT * S.ref[j] - rx, px);
    }
    r.t.push_back(t);
    r.kappa.push_back(curvature(F, A));
    r.kappa_reference.push_back(curvature(G, A));
  }
  return r;
}

}  // namespace anosov
