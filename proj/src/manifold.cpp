#include "anosov/manifold.hpp"

#include "anosov/rng.hpp"
#include "anosov/smooth.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace anosov {

namespace {

using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;

double wrap1(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;
  return r;
}

void collect_windows(const FlowModel& m, const Vec2& w, double roof, std::vector<Interval>& out) {
  out.clear();
  for (const auto& t : m.timechange) t->fiber_windows(w, roof, out);
  for (auto& iv : out) {
    iv.lo = std::max(iv.lo, 0.0);
    iv.hi = std::min(iv.hi, roof);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const Interval& i) { return !(i.hi > i.lo); }), out.end());
  std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::size_t k = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (k > 0 && out[i].lo <= out[k - 1].hi) {
      out[k - 1].hi = std::max(out[k - 1].hi, out[i].hi);
    } else {
      out[k++] = out[i];
    }
  }
  out.resize(k);
}

struct FiberIntegrals {
  double d = 0.0;           // int phi/(1+phi)
  Vec2 dw = Vec2::Zero();   // int d_w phi/(1+phi)^2
};

// Signed integrals from a to b on the fiber over w; fixed GK15 panels on each support window.
FiberIntegrals fiber_integrals(const FlowModel& m, const Vec2& w, double a, double b, bool want_dw) {
  FiberIntegrals res;
  if (!m.has_timechange() || a == b) return res;
  thread_local std::vector<Interval> wins;
  thread_local std::vector<double> zs, wts, val;
  thread_local std::vector<Vec2> grad;
  const double roof = m.r(w);
  collect_windows(m, w, roof, wins);
  const double lo = std::min(a, b), hi = std::max(a, b);
  const auto& xs = GK15::abscissa();
  const auto& ws = GK15::weights();
  const int P = m.fiber_panels;
  zs.clear();
  wts.clear();
  for (const auto& win : wins) {
    if (win.hi <= lo || win.lo >= hi) continue;
    const double hp = (win.hi - win.lo) / P;
    for (int k = 0; k < P; ++k) {
      const double pl = win.lo + k * hp;
      const double ph = (k == P - 1) ? win.hi : pl + hp;
      const double sl = std::max(lo, pl), sh = std::min(hi, ph);
      if (!(sh > sl)) continue;
      const double mid = 0.5 * (sl + sh), half = 0.5 * (sh - sl);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        zs.push_back(mid + half * xs[i]);
        wts.push_back(ws[i] * half);
        if (i == 0) continue;
        zs.push_back(mid - half * xs[i]);
        wts.push_back(ws[i] * half);
      }
    }
  }
  const std::size_t n = zs.size();
  val.assign(n, 0.0);
  if (want_dw) grad.assign(n, Vec2::Zero());
  for (const auto& t : m.timechange) t->fiber_values(w, zs.data(), n, val.data(), want_dw ? grad.data() : nullptr);
  for (std::size_t k = 0; k < n; ++k) {
    const double inv = 1.0 / (1.0 + val[k]);
    res.d += wts[k] * val[k] * inv;
    if (want_dw) res.dw += wts[k] * grad[k] * (inv * inv);
  }
  if (b < a) {
    res.d = -res.d;
    res.dw = -res.dw;
  }
  return res;
}

// z-displacement Z - z after time t >= 0 upward (no crossing), or after time t downward.
double solve_fiber(const FlowModel& m, const Vec2& w, double z, double t, bool up, double roof) {
  if (!m.has_timechange()) return up ? z + t : z - t;
  const double zmin = up ? z : 0.0;
  const double zmax = up ? roof : z;
  auto fun = [&](double Z) {
    // signed elapsed time from z to Z minus the target
    const double tau = (Z - z) - fiber_integrals(m, w, z, Z, false).d;
    const double target = up ? t : -t;
    const double ph = m.phi(Point3(w.x(), w.y(), Z));
    return std::make_pair(tau - target, 1.0 / (1.0 + ph));
  };
  double guess = up ? z + t : z - t;
  guess = std::clamp(guess, zmin, zmax);
  std::uintmax_t iters = 60;
  const double Z = boost::math::tools::newton_raphson_iterate(fun, guess, zmin, zmax,
                                                              std::numeric_limits<double>::digits - 3, iters);
  if (iters >= 60) {
    std::ostringstream os;
    os << "fiber root find did not converge at w=(" << w.x() << "," << w.y() << "), z=" << z << ", t=" << t;
    throw numerical_error("root_find", os.str());
  }
  return Z;
}

Mat3 fiber_jacobian(const FlowModel& m, const Vec2& w, double za, double zb) {
  Mat3 J = Mat3::Identity();
  if (!m.has_timechange()) return J;
  const double pa = m.phi(Point3(w.x(), w.y(), za));
  const double pb = m.phi(Point3(w.x(), w.y(), zb));
  const FiberIntegrals fi = fiber_integrals(m, w, za, zb, true);
  J(2, 0) = (1.0 + pb) * fi.dw.x();
  J(2, 1) = (1.0 + pb) * fi.dw.y();
  J(2, 2) = (1.0 + pb) / (1.0 + pa);
  return J;
}

Point3 advance(const FlowModel& m, const Point3& p, double t, Mat3* jac) {
  const double s = m.time_sign * t;
  Vec2 w = p.head<2>();
  double z = p.z();
  Mat3 J = Mat3::Identity();
  constexpr int max_crossings = 1 << 20;
  if (s >= 0.0) {
    double rem = s;
    for (int guard = 0;; ++guard) {
      if (guard > max_crossings) throw numerical_error("flow", "too many roof crossings");
      const double roof = m.r(w);
      const double ttop = fiber_time(m, w, z, roof);
      if (rem < ttop) {
        const double Z = solve_fiber(m, w, z, rem, true, roof);
        if (jac) J = fiber_jacobian(m, w, z, Z) * J;
        z = Z;
        break;
      }
      rem -= ttop;
      if (jac) J = glue_jacobian(m, w) * fiber_jacobian(m, w, z, roof) * J;
      w = wrap(m.A * w);
      z = 0.0;
    }
  } else {
    double rem = -s;
    for (int guard = 0;; ++guard) {
      if (guard > max_crossings) throw numerical_error("flow", "too many roof crossings");
      const double tbot = fiber_time(m, w, 0.0, z);
      if (rem <= tbot) {
        const double Z = solve_fiber(m, w, z, rem, false, m.r(w));
        if (jac) J = fiber_jacobian(m, w, z, Z) * J;
        z = Z;
        break;
      }
      rem -= tbot;
      const Vec2 wb = wrap(m.A_inv * w);
      if (jac) J = unglue_jacobian(m, w) * fiber_jacobian(m, w, z, 0.0) * J;
      (void)wb;
      w = wb;
      z = m.r(w);
    }
  }
  Mat3 D;
  const Point3 q = canonical(m, Vec3(w.x(), w.y(), z), jac ? &D : nullptr);
  if (jac) *jac = D * J;
  return q;
}

}  // namespace

TrigProfileTerm::TrigProfileTerm(TrigPoly modes, double z_lo, double z_hi)
    : modes_(std::move(modes)), z_lo_(z_lo), z_hi_(z_hi) {
  if (!(z_hi > z_lo)) throw validation_error("timechange_support", "empty z-profile support");
}

double TrigProfileTerm::value(const Point3& p) const {
  if (p.z() <= z_lo_ || p.z() >= z_hi_) return 0.0;
  const double u = (2.0 * p.z() - z_lo_ - z_hi_) / (z_hi_ - z_lo_);
  return modes_.value(p.x(), p.y()) * smooth::bump(u);
}

Vec3 TrigProfileTerm::gradient(const Point3& p) const {
  if (p.z() <= z_lo_ || p.z() >= z_hi_) return Vec3::Zero();
  const double u = (2.0 * p.z() - z_lo_ - z_hi_) / (z_hi_ - z_lo_);
  const double prof = smooth::bump(u);
  const Vec2 g = modes_.gradient(p.head<2>());
  Vec3 out;
  out << g * prof, modes_.value(p.x(), p.y()) * smooth::bump_d1(u) * 2.0 / (z_hi_ - z_lo_);
  return out;
}

void TrigProfileTerm::fiber_values(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw) const {
  const double T = modes_.value(w.x(), w.y());
  const Vec2 G = dw ? modes_.gradient(w) : Vec2::Zero();
  const double c = 2.0 / (z_hi_ - z_lo_);
  for (std::size_t k = 0; k < n; ++k) {
    if (z[k] <= z_lo_ || z[k] >= z_hi_) continue;
    const double prof = smooth::bump(c * z[k] - 0.5 * c * (z_lo_ + z_hi_));
    val[k] += T * prof;
    if (dw) dw[k] += G * prof;
  }
}

void TrigProfileTerm::fiber_windows(const Vec2&, double, std::vector<Interval>& out) const {
  out.push_back({z_lo_, z_hi_});
}

double TrigProfileTerm::sup_bound() const { return std::abs(modes_.constant) + modes_.oscillation_bound(); }

bool TrigProfileTerm::fixed_support(double& lo, double& hi) const {
  lo = z_lo_;
  hi = z_hi_;
  return true;
}

std::string TrigProfileTerm::describe() const {
  std::ostringstream os;
  os << "trig_profile(z in [" << z_lo_ << "," << z_hi_ << "], " << modes_.terms.size() << " modes)";
  return os.str();
}

void TimeChangeTerm::fiber_values(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw) const {
  for (std::size_t k = 0; k < n; ++k) {
    const Point3 p(w.x(), w.y(), z[k]);
    val[k] += value(p);
    if (dw) dw[k] += gradient(p).head<2>();
  }
}

double FlowModel::phi(const Point3& p) const {
  double v = 0.0;
  for (const auto& t : timechange) v += t->value(p);
  return v;
}

Vec3 FlowModel::dphi(const Point3& p) const {
  Vec3 g = Vec3::Zero();
  for (const auto& t : timechange) g += t->gradient(p);
  return g;
}

Vec2 wrap(const Vec2& w) { return Vec2(wrap1(w.x()), wrap1(w.y())); }

namespace {

Vec2 positive_first(Vec2 v) {
  v.normalize();
  const double lead = std::abs(v.x()) > 1e-14 ? v.x() : v.y();
  return lead < 0 ? Vec2(-v) : v;
}

Vec2 eigenvector(const Mat2& A, double lam) {
  Vec2 a(A(0, 1), lam - A(0, 0));
  Vec2 b(lam - A(1, 1), A(1, 0));
  return positive_first(a.norm() > b.norm() ? a : b);
}

}  // namespace

FlowModel make_suspension(const Mat2i& base, const TrigPoly& roof, std::vector<TermPtr> timechange,
                          const ModelOptions& opts) {
  const int det = base(0, 0) * base(1, 1) - base(0, 1) * base(1, 0);
  const int tr = base(0, 0) + base(1, 1);
  if (det != 1) throw validation_error("determinant", "base matrix must have determinant 1");
  if (std::abs(tr) <= 2) throw validation_error("non_hyperbolic", "base matrix needs |trace| > 2");

  FlowModel m;
  m.base = base;
  m.A = base.cast<double>();
  m.A_inv << m.A(1, 1), -m.A(0, 1), -m.A(1, 0), m.A(0, 0);
  m.roof = roof;
  m.fiber_panels = opts.fiber_panels;

  const double disc = std::sqrt(double(tr) * tr - 4.0);
  const double l1 = (tr + disc) / 2, l2 = (tr - disc) / 2;
  m.lambda_u = std::abs(l1) > 1 ? l1 : l2;
  m.lambda_s = std::abs(l1) > 1 ? l2 : l1;
  m.e_unstable = eigenvector(m.A, m.lambda_u);
  m.e_stable = eigenvector(m.A, m.lambda_s);

  // roof extrema on a grid, with a Lipschitz margin for positivity
  const int N = opts.roof_check_grid;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double v = roof.value(double(i) / N, double(j) / N);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double margin = roof.gradient_bound() / N;
  if (lo - margin <= 0.0) throw validation_error("nonpositive_roof", "roof must be bounded below by a positive constant");
  m.r_min = lo;
  m.r_max = hi;

  double sup = 0.0;
  for (const auto& t : timechange) {
    sup += t->sup_bound();
    double zl, zh;
    if (t->fixed_support(zl, zh)) {
      if (zl < opts.support_margin || zh > m.r_min - opts.support_margin) {
        std::ostringstream os;
        os << "time-change support [" << zl << "," << zh << "] must lie inside (" << opts.support_margin << ", "
           << m.r_min - opts.support_margin << ")";
        throw validation_error("timechange_support", os.str());
      }
    }
  }
  if (sup >= 1.0) throw validation_error("timechange_bound", "sup|phi| must be < 1");
  m.phi_sup = sup;
  m.timechange = std::move(timechange);
  m.rate = std::log(std::abs(m.lambda_u)) * (1.0 - sup) / m.r_max;
  return m;
}

FlowModel time_reversed(const FlowModel& m) {
  FlowModel r = m;
  r.time_sign = -m.time_sign;
  return r;
}

FlowModel with_extra_timechange(const FlowModel& m, const std::vector<TermPtr>& extra) {
  FlowModel r = m;
  double sup = m.phi_sup;
  for (const auto& t : extra) {
    r.timechange.push_back(t);
    sup += t->sup_bound();
  }
  if (sup >= 1.0) throw validation_error("timechange_bound", "sup|phi| must be < 1");
  r.phi_sup = sup;
  r.rate = std::log(std::abs(r.lambda_u)) * (1.0 - sup) / r.r_max;
  return r;
}

Mat3 glue_jacobian(const FlowModel& m, const Vec2& w) {
  Mat3 D = Mat3::Zero();
  D.topLeftCorner<2, 2>() = m.A;
  D.block<1, 2>(2, 0) = -m.dr(w).transpose();
  D(2, 2) = 1.0;
  return D;
}

Mat3 unglue_jacobian(const FlowModel& m, const Vec2& wb) {
  const Vec2 wt = wrap(m.A_inv * wb);
  Mat3 D = Mat3::Zero();
  D.topLeftCorner<2, 2>() = m.A_inv;
  D.block<1, 2>(2, 0) = m.dr(wt).transpose() * m.A_inv;
  D(2, 2) = 1.0;
  return D;
}

Point3 canonical(const FlowModel& m, const Vec3& lifted, Mat3* D) {
  Vec2 w = wrap(lifted.head<2>());
  double z = lifted.z();
  if (D) D->setIdentity();
  for (int guard = 0; guard < 64; ++guard) {
    const double roof = m.r(w);
    if (z >= roof) {
      if (D) *D = glue_jacobian(m, w) * *D;
      z -= roof;
      w = wrap(m.A * w);
    } else if (z < 0.0) {
      if (D) *D = unglue_jacobian(m, w) * *D;
      w = wrap(m.A_inv * w);
      z += m.r(w);
    } else {
      return Point3(w.x(), w.y(), z);
    }
  }
  throw numerical_error("canonical", "lifted point too far from the fundamental domain");
}

double fiber_time(const FlowModel& m, const Vec2& w, double z0, double z1) {
  return (z1 - z0) - fiber_integrals(m, w, z0, z1, false).d;
}

Point3 flow_map(const FlowModel& m, const Point3& p, double t) { return advance(m, p, t, nullptr); }

Point3 flow_with_jacobian(const FlowModel& m, const Point3& p, double t, Mat3& jac) {
  return advance(m, p, t, &jac);
}

Mat3 flow_jacobian(const FlowModel& m, const Point3& p, double t) {
  Mat3 J;
  advance(m, p, t, &J);
  return J;
}

Vec3 generator(const FlowModel& m, const Point3& p) {
  return Vec3(0.0, 0.0, m.time_sign * (1.0 + m.phi(p)));
}

Mat3 metric(const FlowModel& m, const Point3& p) {
  const Vec2 w = p.head<2>();
  const double s = p.z() / m.r(w);
  const double beta = smooth::step(3.0 * (s - 1.0 / 3.0));
  if (beta == 0.0) return Mat3::Identity();
  const Mat3 D = glue_jacobian(m, w);
  return (1.0 - beta) * Mat3::Identity() + beta * D.transpose() * D;
}

double metric_norm(const FlowModel& m, const Point3& p, const Vec3& v) {
  return std::sqrt(v.dot(metric(m, p) * v));
}

double volume_form(const FlowModel& m, const Point3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  Mat3 M;
  M << a, b, c;
  return M.determinant() / (1.0 + m.phi(p));
}

Point3 sample_volume(const FlowModel& m, std::uint64_t seed, std::uint64_t index) {
  const double accept_scale = 1.0 - m.phi_sup;
  for (std::uint64_t k = 0;; ++k) {
    const double x = rng::uniform(seed, index, k, 0);
    const double y = rng::uniform(seed, index, k, 1);
    const double z = m.r_max * rng::uniform(seed, index, k, 2);
    if (z >= m.roof.value(x, y)) continue;
    const Point3 p(x, y, z);
    if (m.has_timechange()) {
      const double u = rng::uniform(seed, index, k, 3);
      if (u * (1.0 + m.phi(p)) >= accept_scale) continue;
    }
    return p;
  }
}

std::vector<Point3> volume_sampler(const FlowModel& m, std::uint64_t seed, std::size_t n) {
  std::vector<Point3> out(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(n); ++i) out[i] = sample_volume(m, seed, std::uint64_t(i));
  return out;
}

double point_distance(const FlowModel& m, const Point3& p, const Point3& q) {
  auto plain = [](const Vec3& a, const Vec3& b) {
    Vec3 d = a - b;
    d.x() -= std::round(d.x());
    d.y() -= std::round(d.y());
    return d.norm();
  };
  // lift of a bottom-chart point into the top chart of the previous sheet
  auto lift_up = [&](const Vec3& a) {
    const Vec2 wt = wrap(m.A_inv * a.head<2>());
    return Vec3(wt.x(), wt.y(), a.z() + m.r(wt));
  };
  double d = plain(p, q);
  d = std::min(d, plain(p, lift_up(q)));
  d = std::min(d, plain(lift_up(p), q));
  return d;
}

}  // namespace anosov
