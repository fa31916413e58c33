#include "anosov/oscint.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace anosov {

namespace {

using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

constexpr int kNodes = 7;  // per-panel interpolation degree + 1

struct PanelRule {
  std::array<double, kNodes> s;
  Eigen::Matrix<double, kNodes, kNodes> vinv;  // monomial coefficients from node values
};

const PanelRule& panel_rule() {
  static const PanelRule rule = [] {
    PanelRule r;
    Eigen::Matrix<double, kNodes, kNodes> V;
    for (int k = 0; k < kNodes; ++k) {
      r.s[k] = std::cos((2 * k + 1) * M_PI / (2 * kNodes));
      for (int j = 0; j < kNodes; ++j) V(k, j) = std::pow(r.s[k], j);
    }
    r.vinv = V.inverse();
    return r;
  }();
  return rule;
}

// M_k = int_{-1}^{1} s^k exp(i kappa s) ds, k < kNodes, by upward recurrence (|kappa| not small)
void moments(double kappa, std::array<cplx, kNodes>& M) {
  const cplx I(0.0, 1.0);
  const cplx ep = std::polar(1.0, kappa), em = std::conj(ep);
  const cplx inv = 1.0 / (I * kappa);
  M[0] = 2.0 * std::sin(kappa) / kappa;
  for (int k = 1; k < kNodes; ++k) {
    const cplx edge = (k % 2 == 0) ? ep - em : ep + em;
    M[k] = (edge - double(k) * M[k - 1]) * inv;
  }
}

// Per-b precomputation: alpha only enters through kappa and the linear phase.
// For |kappa| <= kSeriesMax the moment sum is a fixed polynomial in kappa per panel.
constexpr double kSeriesMax = 1.0;
constexpr int kSeriesTerms = 20;

struct Plan {
  struct Panel {
    double hh, mean, half_diff;
    std::array<cplx, kNodes> coef;
    std::array<cplx, kSeriesTerms> poly;  // sum_k coef_k M_k(kappa) = sum_n poly_n kappa^n
    // coef and poly carry the factor hh * exp(i b mean)
  };
  double b = 0.0;
  double c0 = 0.0, dc = 0.0;  // panel centers c0 + j dc
  std::vector<Panel> panels;

  cplx eval(double alpha) const {
    std::array<cplx, kNodes> M;
    cplx sum = 0.0;
    const cplx step = std::polar(1.0, b * alpha * dc);
    cplx lin = std::polar(1.0, b * alpha * c0);
    for (std::size_t j = 0; j < panels.size(); ++j) {
      const Panel& p = panels[j];
      if (j % 256 == 0) lin = std::polar(1.0, b * alpha * (c0 + double(j) * dc));
      const double kappa = b * (p.half_diff + alpha * p.hh);
      cplx acc = 0.0;
      if (std::abs(kappa) <= kSeriesMax) {
        for (int n = kSeriesTerms - 1; n >= 0; --n) acc = acc * kappa + p.poly[n];
      } else {
        moments(kappa, M);
        for (int k = 0; k < kNodes; ++k) acc += p.coef[k] * M[k];
      }
      sum += lin * acc;
      lin *= step;
    }
    return sum;
  }
};

Plan make_plan(const Profile& psi, double b, const OscOptions& opts) {
  const auto& tau = psi.tau();
  const auto& v = psi.values();
  const int n = int(tau.size()) - 1;
  const double nyq = std::abs(b) * psi.max_step();
  int m = 1;
  if (nyq >= 1.0) {
    m = int(std::floor(nyq)) + 1;
    if (!opts.refine || m > opts.max_refine) {
      std::ostringstream os;
      os << "grid too coarse for b = " << b << ": b*max|dpsi| = " << nyq << ", needs " << m
         << "x refinement (cap " << (opts.refine ? opts.max_refine : 1) << ")";
      throw numerical_error("refinement_needed", os.str());
    }
  }
  const PanelRule& rule = panel_rule();
  Plan plan;
  plan.b = b;
  plan.panels.resize(std::size_t(n) * m);
  plan.dc = (tau[n] - tau[0]) / (double(n) * m);
  plan.c0 = tau[0] + 0.5 * plan.dc;
  // i^n / n! * int s^(k+n) ds
  static const auto mu = [] {
    std::array<std::array<cplx, kSeriesTerms>, kNodes> t{};
    for (int k = 0; k < kNodes; ++k) {
      cplx f = 1.0;
      for (int q = 0; q < kSeriesTerms; ++q) {
        t[k][q] = ((k + q) % 2 == 0) ? f * (2.0 / (k + q + 1)) : cplx(0.0);
        f *= cplx(0.0, 1.0) / double(q + 1);
      }
    }
    return t;
  }();
  for (int j = 0; j < n; ++j) {
    const double h = (tau[j + 1] - tau[j]) / m;
    double left = v[j];
    for (int k = 0; k < m; ++k) {
      const double a = tau[j] + k * h;
      const double right = (k == m - 1) ? v[j + 1] : psi(a + h);
      Plan::Panel& p = plan.panels[std::size_t(j) * m + k];
      p.hh = 0.5 * h;
      const double c = a + p.hh;
      p.mean = 0.5 * (left + right);
      p.half_diff = 0.5 * (right - left);
      Eigen::Matrix<cplx, kNodes, 1> vals;
      for (int q = 0; q < kNodes; ++q) {
        const double s = rule.s[q];
        const double resid = psi(c + p.hh * s) - p.mean - p.half_diff * s;
        vals(q) = std::polar(1.0, b * resid);
      }
      const Eigen::Matrix<cplx, kNodes, 1> coef = (p.hh * std::polar(1.0, b * p.mean)) * (rule.vinv.cast<cplx>() * vals);
      for (int q = 0; q < kNodes; ++q) p.coef[q] = coef(q);
      p.poly.fill(0.0);
      for (int k = 0; k < kNodes; ++k)
        for (int q = 0; q < kSeriesTerms; ++q) p.poly[q] += p.coef[k] * mu[k][q];
      left = right;
    }
  }
  return plan;
}

bool is_uniform(const std::vector<double>& tau) {
  const int n = int(tau.size()) - 1;
  for (int j = 0; j <= n; ++j) {
    if (std::abs(tau[j] - (-1.0 + 2.0 * j / n)) > 1e-12) return false;
  }
  return true;
}

}  // namespace

Profile::Profile(std::vector<double> tau, std::vector<double> values) : tau_(std::move(tau)), values_(std::move(values)) {
  if (tau_.size() != values_.size() || tau_.size() < 5)
    throw validation_error("profile", "need at least 5 (tau, psi) samples of equal length");
  if (!is_uniform(tau_)) throw validation_error("profile", "tau must be a uniform grid on [-1, 1]");
  for (double x : values_) {
    if (!std::isfinite(x)) throw validation_error("profile", "non-finite template value");
  }
  const int n = int(tau_.size()) - 1;
  const double h = 2.0 / n;
  const auto& f = values_;
  // fourth order one-sided end slopes
  const double d0 = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
  const double d1 = (25 * f[n] - 48 * f[n - 1] + 36 * f[n - 2] - 16 * f[n - 3] + 3 * f[n - 4]) / (12 * h);
  spline_ = std::make_shared<const Spline>(values_.begin(), values_.end(), -1.0, h, d0, d1);
  finish();
}

Profile::Profile(std::function<double(double)> f, int grid) : f_(std::move(f)) {
  if (grid < 5) throw validation_error("profile", "grid must have at least 5 nodes");
  tau_.resize(grid);
  values_.resize(grid);
  for (int j = 0; j < grid; ++j) {
    tau_[j] = -1.0 + 2.0 * j / (grid - 1);
    values_[j] = f_(tau_[j]);
  }
  finish();
}

void Profile::finish() {
  const int n = int(tau_.size()) - 1;
  dmin_ = std::numeric_limits<double>::infinity();
  dmax_ = -dmin_;
  dvar_ = 0.0;
  double prev = 0.0;
  for (int j = 0; j < n; ++j) {
    const double s = (values_[j + 1] - values_[j]) / (tau_[j + 1] - tau_[j]);
    dmin_ = std::min(dmin_, s);
    dmax_ = std::max(dmax_, s);
    if (j > 0) dvar_ += std::abs(s - prev);
    prev = s;
  }
}

double Profile::operator()(double t) const {
  if (f_) return f_(t);
  return static_cast<const Spline*>(spline_.get())->operator()(t);
}

double Profile::max_step() const {
  double m = 0.0;
  for (std::size_t j = 0; j + 1 < values_.size(); ++j) m = std::max(m, std::abs(values_[j + 1] - values_[j]));
  return m;
}

Profile Profile::shifted(double c, double s) const {
  if (f_) {
    auto g = f_;
    return Profile([g, c, s](double t) { return g(t) + c + s * t; }, int(tau_.size()));
  }
  std::vector<double> v(values_);
  for (std::size_t j = 0; j < v.size(); ++j) v[j] += c + s * tau_[j];
  return Profile(tau_, v);
}

cplx osc_integral(const Profile& psi, double b, double alpha, const OscOptions& opts) {
  return make_plan(psi, b, opts).eval(alpha);
}

cplx osc_integral_reference(const std::function<double(double)>& psi, double b, double alpha, int panels) {
  using boost::math::quadrature::gauss;
  const double h = 2.0 / panels;
  cplx sum = 0.0;
  for (int j = 0; j < panels; ++j) {
    const double a = -1.0 + j * h;
    sum += gauss<double, 20>::integrate([&](double t) { return std::polar(1.0, b * (psi(t) + alpha * t)); }, a, a + h);
  }
  return sum;
}

OscIntegralReport ni_margin(const Profile& psi, double b, const MarginOptions& opts) {
  const double B = std::abs(b);
  if (!(B > 0.0)) throw validation_error("ni_margin", "b must be nonzero");
  if (!(opts.rho > 0.0)) throw validation_error("ni_margin", "rho must be positive");
  double lo = opts.alpha_lo, hi = opts.alpha_hi;
  if (lo == 0.0 && hi == 0.0) {
    lo = -B;
    hi = B;
  }
  if (!(lo < hi)) throw validation_error("ni_margin", "empty alpha range");

  const Plan plan = make_plan(psi, b, opts.osc);
  OscIntegralReport rep;
  rep.b = b;
  rep.rho = opts.rho;
  rep.threshold = std::pow(B, -opts.rho);

  // Stationary alphas: alpha + psi'(tau) = 0 somewhere. Outside that band integrate by parts once:
  // |I| <= (2/d + V/d^2) / |b| at distance d, V the total variation of psi'.
  const double s_lo = -psi.slope_max(), s_hi = -psi.slope_min();
  const double V = psi.slope_variation();
  auto ibp_bound = [&](double d) { return (2.0 / d + V / (d * d)) / B; };

  const double h = opts.grid_spacing / B;
  double mu = std::max(4.0 / B, 0.05 * (s_hi - s_lo));
  double best = -1.0, best_alpha = 0.0;
  std::vector<double> grid, vals;
  while (true) {
    const double wlo = std::max(lo, s_lo - mu), whi = std::min(hi, s_hi + mu);
    grid.clear();
    if (wlo <= whi) {
      const int n = std::max(2, int(std::ceil((whi - wlo) / h)) + 1);
      for (int k = 0; k < n; ++k) grid.push_back(wlo + (whi - wlo) * k / (n - 1));
    }
    vals.assign(grid.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (long k = 0; k < long(grid.size()); ++k) vals[k] = std::abs(plan.eval(grid[k]));
    rep.evaluations += int(grid.size());

    best = -1.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (vals[k] > best) {
        best = vals[k];
        best_alpha = grid[k];
      }
    }
    // local maxima, largest first, refined by Brent
    std::vector<std::size_t> peaks;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const bool l = k == 0 || vals[k] >= vals[k - 1];
      const bool r = k + 1 == grid.size() || vals[k] >= vals[k + 1];
      if (l && r) peaks.push_back(k);
    }
    std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t c) { return vals[a] > vals[c]; });
    if (int(peaks.size()) > opts.refine_peaks) peaks.resize(opts.refine_peaks);
    for (std::size_t k : peaks) {
      const double a = k == 0 ? grid[k] : grid[k - 1];
      const double c = k + 1 == grid.size() ? grid[k] : grid[k + 1];
      if (c <= a) continue;
      const auto r = boost::math::tools::brent_find_minima([&](double x) { return -std::abs(plan.eval(x)); }, a, c, 40);
      rep.evaluations += 40;
      if (-r.second > best) {
        best = -r.second;
        best_alpha = r.first;
      }
    }
    rep.alpha_lo = wlo;
    rep.alpha_hi = whi;
    const bool full = wlo <= lo && whi >= hi;
    double d = std::numeric_limits<double>::infinity();
    if (wlo > lo) d = std::min(d, s_lo - wlo + mu);
    if (whi < hi) d = std::min(d, whi - s_hi + mu);
    rep.outside_bound = full ? 0.0 : ibp_bound(d);
    if (full || rep.outside_bound < best) break;
    mu *= 2.0;
  }
  rep.value = std::min(best, 2.0);
  rep.alpha_star = best_alpha;
  rep.passes_ni = rep.value < rep.threshold;
  return rep;
}

double mollifier(double s) {
  static const double norm = [] {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([](double x) { return std::exp(-1.0 / (1.0 - x * x)); }, -1.0, 1.0);
  }();
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s)) / norm;
}

double mollifier_d1(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double w = 1.0 - s * s;
  return mollifier(s) * (-2.0 * s / (w * w));
}

IbpSides reg_ibp(const Phase& theta, const Amplitude& amp, double eps, const IbpOptions& opts) {
  using boost::math::quadrature::gauss;
  if (!(amp.lo < amp.hi)) throw validation_error("reg_ibp", "amplitude support must be a nonempty interval");
  if (!(eps > 0.0)) throw validation_error("reg_ibp", "epsilon must be positive");

  // zeros of theta' near supp g
  const double R = std::max(opts.scan_range, 2.0 * eps);
  const double slo = amp.lo - R, shi = amp.hi + R;
  const int ns = 8192;
  double dist = std::numeric_limits<double>::infinity(), dmax = 0.0;
  double prev_s = slo, prev = theta.d1(slo);
  for (int k = 0; k <= ns; ++k) {
    const double s = slo + (shi - slo) * k / ns;
    const double d = theta.d1(s);
    dmax = std::max(dmax, std::abs(d));
    if (d == 0.0 || (k > 0 && (d > 0) != (prev > 0))) {
      const double z = d == 0.0 ? s : 0.5 * (s + prev_s);
      if (z >= amp.lo && z <= amp.hi) throw validation_error("phase_stationary", "theta' vanishes on supp g");
      dist = std::min(dist, z < amp.lo ? amp.lo - z : z - amp.hi);
    }
    prev = d;
    prev_s = s;
  }
  if (eps >= dist) {
    std::ostringstream os;
    os << "epsilon " << eps << " not below the distance " << dist << " from supp g to the zeros of theta'";
    throw validation_error("epsilon_too_large", os.str());
  }

  const auto& g = amp.g;
  auto g_in = [&](double u) { return (u < amp.lo || u > amp.hi) ? 0.0 : g(u); };
  // g_eps and g_eps' at s, by quadrature over u in [s - eps, s + eps] cut at the support ends
  auto mollified = [&](double s, double& val, double& der) {
    val = der = 0.0;
    const double a = std::max(amp.lo, s - eps), c = std::min(amp.hi, s + eps);
    if (a >= c) return;
    const int np = opts.inner_panels;
    const double w = (c - a) / np;
    for (int k = 0; k < np; ++k) {
      const double u0 = a + k * w;
      val += gauss<double, 20>::integrate([&](double u) { return mollifier((s - u) / eps) * g(u); }, u0, u0 + w);
      der += gauss<double, 20>::integrate([&](double u) { return mollifier_d1((s - u) / eps) * g(u); }, u0, u0 + w);
    }
    val /= eps;
    der /= eps * eps;
  };

  // panels: eps-resolved and short enough for the phase
  auto integrate = [&](double a, double c, auto&& f) {
    const double len = c - a;
    const int np = std::max({1, int(std::ceil(len / eps * opts.panels_per_eps)), int(std::ceil(len * dmax / 3.0))});
    const double w = len / np;
    cplx sum = 0.0;
    for (int k = 0; k < np; ++k) sum += gauss<double, 20>::integrate(f, a + k * w, a + (k + 1) * w);
    return sum;
  };

  IbpSides out;
  out.stationary_distance = dist;
  const cplx I(0.0, 1.0);
  out.lhs = integrate(amp.lo, amp.hi, [&](double s) { return std::polar(1.0, theta.f(s)) * g(s); });

  auto smooth_integrand = [&](double s) {
    double ge, gd;
    mollified(s, ge, gd);
    const double t1 = theta.d1(s), t2 = theta.d2(s);
    return std::polar(1.0, theta.f(s)) * (gd / t1 - ge * t2 / (t1 * t1));
  };
  auto error_integrand = [&](double s) {
    double ge, gd;
    mollified(s, ge, gd);
    return std::polar(1.0, theta.f(s)) * (g_in(s) - ge);
  };
  // break points at the support ends, where g may have a kink
  const double pts[4] = {amp.lo - eps, amp.lo, amp.hi, amp.hi + eps};
  for (int k = 0; k < 3; ++k) {
    out.smooth_part += integrate(pts[k], pts[k + 1], smooth_integrand);
    out.error_part += integrate(pts[k], pts[k + 1], error_integrand);
  }
  out.rhs = I * out.smooth_part + out.error_part;
  return out;
}

}  // namespace anosov
