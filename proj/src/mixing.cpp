#include "anosov/mixing.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace anosov {

namespace {

cplx profile_value(const ObsTerm& t, double s) {
  switch (t.profile) {
    case FiberProfile::one: return 1.0;
    case FiberProfile::fourier: return std::polar(1.0, two_pi * t.n * s);
    case FiberProfile::bump: {
      const double v = std::sin(M_PI * s);
      return v * v;
    }
  }
  return 0.0;
}

// int_0^1 h(s) ds
cplx profile_integral(const ObsTerm& t) {
  switch (t.profile) {
    case FiberProfile::one: return 1.0;
    case FiberProfile::fourier: return t.n == 0 ? 1.0 : 0.0;
    case FiberProfile::bump: return 0.5;
  }
  return 0.0;
}

const char* profile_name(FiberProfile p) {
  switch (p) {
    case FiberProfile::one: return "1";
    case FiberProfile::fourier: return "fourier";
    case FiberProfile::bump: return "bump";
  }
  return "?";
}

int max_frequency(const TrigPoly& p) {
  int k = 0;
  for (const auto& t : p.terms) k = std::max({k, std::abs(t.kx), std::abs(t.ky)});
  return k;
}

}  // namespace

std::string Observable::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const ObsTerm& t = terms[i];
    if (i) os << " + ";
    os << "(" << t.coef.real() << (t.coef.imag() < 0 ? "-" : "+") << std::abs(t.coef.imag()) << "i)"
       << "*e(" << t.kx << "x+" << t.ky << "y)*" << profile_name(t.profile);
    if (t.profile == FiberProfile::fourier) os << "[" << t.n << "]";
  }
  if (mean != 0.0) os << " - mean";
  return os.str();
}

cplx Observable::raw(const FlowModel& m, const Point3& p) const {
  const double s = p.z() / m.r(p.head<2>());
  cplx v = 0.0;
  for (const ObsTerm& t : terms) v += t.coef * std::polar(1.0, two_pi * (t.kx * p.x() + t.ky * p.y())) * profile_value(t, s);
  return v;
}

cplx observable_mean(const FlowModel& m, const std::vector<ObsTerm>& terms) {
  // Torus integrals by the trapezoid rule: exact for trig polynomials once N exceeds the total frequency.
  int kmax = max_frequency(m.roof);
  for (const ObsTerm& t : terms) kmax = std::max({kmax, std::abs(t.kx), std::abs(t.ky)});
  int N = 2 * (2 * kmax + 1) + 2;
  if (m.has_timechange()) N = std::max(N, 96);
  cplx num = 0.0;
  double den = 0.0;
  using GL = boost::math::quadrature::gauss<double, 30>;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const Vec2 w(double(i) / N, double(j) / N);
      const double r = m.r(w);
      if (!m.has_timechange()) {
        den += r;
        for (const ObsTerm& t : terms)
          num += t.coef * std::polar(1.0, two_pi * (t.kx * w.x() + t.ky * w.y())) * r * profile_integral(t);
        continue;
      }
      const int panels = 8;
      for (int k = 0; k < panels; ++k) {
        const double z0 = r * k / panels, z1 = r * (k + 1) / panels;
        den += GL::integrate([&](double z) { return 1.0 / (1.0 + m.phi(Point3(w.x(), w.y(), z))); }, z0, z1);
        for (const ObsTerm& t : terms) {
          const cplx e = t.coef * std::polar(1.0, two_pi * (t.kx * w.x() + t.ky * w.y()));
          const double re = GL::integrate(
              [&](double z) { return (e * profile_value(t, z / r)).real() / (1.0 + m.phi(Point3(w.x(), w.y(), z))); }, z0, z1);
          const double im = GL::integrate(
              [&](double z) { return (e * profile_value(t, z / r)).imag() / (1.0 + m.phi(Point3(w.x(), w.y(), z))); }, z0, z1);
          num += cplx(re, im);
        }
      }
    }
  }
  return num / den;
}

Observable make_observable(const FlowModel& m, std::vector<ObsTerm> terms, bool center) {
  for (const ObsTerm& t : terms) {
    if (t.profile == FiberProfile::one && (t.kx != 0 || t.ky != 0))
      throw validation_error("observable", "x,y modes need a fiber profile that vanishes at the gluing (bump) "
                                           "or the observable is discontinuous");
  }
  Observable o;
  o.terms = std::move(terms);
  if (center) o.mean = observable_mean(m, o.terms);
  return o;
}

namespace {

double sup_norm(const Observable& o) {
  double s = std::abs(o.mean);
  for (const ObsTerm& t : o.terms) s += std::abs(t.coef);
  return s;
}

}  // namespace

CorrelationSeries correlation_series(const FlowModel& m, const Observable& a, const Observable& b,
                                     const std::vector<double>& t_grid, std::size_t n, std::uint64_t seed,
                                     const CorrelationOptions& opts) {
  if (t_grid.empty()) throw validation_error("t_grid", "empty time grid");
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] >= 0.0) || (k && t_grid[k] <= t_grid[k - 1]))
      throw validation_error("t_grid", "time grid must be nonnegative and strictly increasing");
  }
  if (n < 2) throw validation_error("samples", "need at least 2 samples");
  const std::size_t T = t_grid.size();
  const std::size_t B = opts.block;
  const std::size_t nb = (n + B - 1) / B;
  std::vector<cplx> sum(nb * T, 0.0);
  std::vector<double> sq(nb * T, 0.0);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t blk = 0; blk < std::ptrdiff_t(nb); ++blk) {
    const std::size_t i0 = std::size_t(blk) * B, i1 = std::min(n, i0 + B);
    for (std::size_t i = i0; i < i1; ++i) {
      Point3 p = sample_volume(m, seed, i);
      if (opts.start_time != 0.0) p = flow_map(m, p, opts.start_time);
      const cplx av = std::conj(a.value(m, p));
      double t = 0.0;
      for (std::size_t k = 0; k < T; ++k) {
        if (t_grid[k] != t) p = flow_map(m, p, t_grid[k] - t);
        t = t_grid[k];
        const cplx x = av * b.value(m, p);
        sum[blk * T + k] += x;
        sq[blk * T + k] += std::norm(x);
      }
    }
  }

  CorrelationSeries s;
  s.t = t_grid;
  s.samples = n;
  s.seed = seed;
  s.obs_a = a.describe();
  s.obs_b = b.describe();
  s.a_sup = sup_norm(a);
  s.b_sup = sup_norm(b);
  s.value.resize(T);
  s.stderr_.resize(T);
  for (std::size_t k = 0; k < T; ++k) {
    cplx S = 0.0;
    double Q = 0.0;
    for (std::size_t blk = 0; blk < nb; ++blk) {
      S += sum[blk * T + k];
      Q += sq[blk * T + k];
    }
    const cplx mean = S / double(n);
    const double var = std::max(0.0, (Q - double(n) * std::norm(mean)) / double(n - 1));
    s.value[k] = mean;
    s.stderr_[k] = std::sqrt(var / double(n));
  }
  return s;
}

std::vector<double> default_time_grid() {
  std::vector<double> t;
  for (int k = 0; k <= 40; ++k) t.push_back(0.5 * k);
  return t;
}

DecayFit fit_decay(const CorrelationSeries& s, const FitOptions& opts) {
  DecayFit f;
  // reliable range: leading run of points above the noise floor
  std::vector<double> t, y, rel;
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const double a = std::abs(s.value[k]);
    const double se = s.stderr_[k];
    if (!(a > opts.snr * se) || a == 0.0) break;
    t.push_back(s.t[k]);
    y.push_back(std::log(a));
    rel.push_back(se / a);
  }
  // Points with zero stderr (e.g. C(0) for |obs| constant) get the weight of the best noisy point,
  // otherwise a single exact point would pin the fit.
  double floor_rel = 0.0;
  for (double r : rel)
    if (r > 0 && (floor_rel == 0 || r < floor_rel)) floor_rel = r;
  if (floor_rel == 0) floor_rel = 1.0;
  std::vector<double> w;
  for (double r : rel) {
    const double e = std::max(r, floor_rel);
    w.push_back(1.0 / (e * e));
  }
  f.points = int(t.size());
  if (f.points < opts.min_points) {
    f.verdict = "no detectable decay";
    return f;
  }
  f.t_end = t.back();
  double W = 0, Wt = 0, Wy = 0;
  for (int i = 0; i < f.points; ++i) {
    W += w[i];
    Wt += w[i] * t[i];
    Wy += w[i] * y[i];
  }
  const double tb = Wt / W, yb = Wy / W;
  double Stt = 0, Sty = 0, Syy = 0;
  for (int i = 0; i < f.points; ++i) {
    Stt += w[i] * (t[i] - tb) * (t[i] - tb);
    Sty += w[i] * (t[i] - tb) * (y[i] - yb);
    Syy += w[i] * (y[i] - yb) * (y[i] - yb);
  }
  const double slope = Sty / Stt;
  const double icept = yb - slope * tb;
  double ss_res = 0;
  for (int i = 0; i < f.points; ++i) {
    const double r = y[i] - icept - slope * t[i];
    ss_res += w[i] * r * r;
  }
  f.rate = -slope;
  f.amplitude = std::exp(icept);
  f.r2 = Syy > 0 ? 1.0 - ss_res / Syy : 1.0;
  // residual-scaled standard error
  const double s2 = ss_res / (f.points - 2);
  f.rate_stderr = std::sqrt(s2 / Stt);
  f.rate_lo = f.rate - 1.96 * f.rate_stderr;
  f.rate_hi = f.rate + 1.96 * f.rate_stderr;
  f.detected = f.rate >= opts.min_rate && f.rate_lo > 0.0;
  f.verdict = f.detected ? "exponential decay" : "no detectable decay";
  return f;
}

}  // namespace anosov
