#include "anosov/perturb.hpp"

#include "anosov/cheb.hpp"
#include "anosov/smooth.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

namespace anosov {

namespace {

std::atomic<std::uint64_t> next_family_id{1};

double chi(double s) { return smooth::plateau(s); }
double chi_d1(double s) { return smooth::plateau_d1(s); }

// h0(X, Y) = Y chi(|(X, Y)|)
double h0(double X, double Y, double* hX, double* hY) {
  const double rho = std::hypot(X, Y);
  const double c = chi(rho);
  if (hX) {
    const double cd = rho > 1.0 ? chi_d1(rho) / rho : 0.0;
    *hX = Y * cd * X;
    *hY = c + Y * cd * Y;
  }
  return Y * c;
}

}  // namespace

BumpFamily::BumpFamily(const FlowModel& m, const Point3& p, const BumpOptions& o)
    : model_(m), p_(p), id_(next_family_id++), b_(o.b), R_(o.R), tau_star_(o.tau_star) {
  if (!(o.b > 1.0)) throw validation_error("b", "scale parameter b must exceed 1");
  if (o.R < 1) throw validation_error("R", "smoothness budget R must be >= 1");
  if (!(o.tau_star > 0.0)) throw validation_error("tau_star", "tau* must be positive");
  if (o.cheb_degree < 8 || o.cheb_degree % 2) throw validation_error("cheb_degree", "need an even degree >= 8");
  beta_ = std::pow(b_, 1.0 / R_);
  beta_y_ = std::max(beta_, o.min_transverse);
  count_ = int(std::ceil(beta_ - 1e-12));
  // int chi = 2 + 2 int_0^{1/2} (1 - step(2u)) du = 5/2, since step(v) + step(1 - v) = 1
  a0_ = 2.5 * tau_star_;

  x_lo_ = s(1) - 1.5 / beta_;
  x_hi_ = s(count_) + 1.5 / beta_;
  L_ = 1.02 * std::max(std::abs(x_lo_), std::abs(x_hi_)) + 0.05;

  // chart functions from the unstable curve, lifted continuously into the sheet of p
  const int n = o.cheb_degree;
  std::vector<double> nodes = cheb::lobatto(n);
  for (double& x : nodes) x *= L_;
  const InvariantCurve c = curve_at_params(m, p, CurveKind::unstable, nodes, o.curve);
  const int mid = n / 2;
  wp_ = p.head<2>();
  const Vec3 t0 = c.tangents[mid];
  if (t0.head<2>().norm() < 1e-12) throw numerical_error("chart", "unstable tangent has no base component");
  eu_ = t0.head<2>().normalized();
  es_ = m.e_stable;
  Mat2 E;
  E.col(0) = eu_;
  E.col(1) = es_;
  det_ = E.determinant();
  const Mat2 Ei = E.inverse();
  ustar_ = Ei.row(0).transpose();
  sstar_ = Ei.row(1).transpose();

  std::vector<double> fa(n + 1), fg(n + 1);
  auto lift = [&](int i, double a_prev) {
    const Vec2 w = c.points[i].head<2>();
    const double zeta = c.points[i].z();
    double best_c = 1e300, best_a = 0.0, best_h = 0.0;
    for (int k = -3; k <= 3; ++k) {
      Vec2 wk = w;
      double off = 0.0;
      if (k > 0) {
        for (int s = 1; s <= k; ++s) {
          wk = wrap(m.A_inv * wk);
          off += m.r(wk);
        }
      } else {
        for (int s = 1; s <= -k; ++s) {
          off -= m.r(wk);
          wk = wrap(m.A * wk);
        }
      }
      const Vec2 d0 = wk - wp_;
      for (int nx = -4; nx <= 4; ++nx)
        for (int ny = -4; ny <= 4; ++ny) {
          const Vec2 d = d0 + Vec2(nx, ny);
          const double a = d.dot(ustar_), cc = std::abs(d.dot(sstar_));
          if (std::abs(a - a_prev) > 1.0) continue;
          if (cc < best_c) {
            best_c = cc;
            best_a = a;
            best_h = zeta + off;
          }
        }
    }
    if (best_c > 1e-6) throw numerical_error("chart", "unstable curve left the unstable line of its sheet; refine the curve");
    residual_ = std::max(residual_, best_c);
    fa[i] = best_a;
    fg[i] = best_h;
  };
  lift(mid, 0.0);
  for (int i = mid - 1; i >= 0; --i) lift(i, fa[i + 1]);
  for (int i = mid + 1; i <= n; ++i) lift(i, fa[i - 1]);

  cS_ = cheb::coefficients(fa);
  cdS_ = cheb::derivative(cS_);
  cddS_ = cheb::derivative(cdS_);
  cG_ = cheb::coefficients(fg);
  cdG_ = cheb::derivative(cG_);

  // y oriented against the signed perp so that raising t_j raises the template
  const Covector perp = perp_covector(m, c.tangents[mid] / c.factor[mid]);
  const Vec3 es = stable_direction(m, p);
  const double sigma = perp.dot(es) >= 0 ? 1.0 : -1.0;
  sy_ = -sigma * double(m.time_sign);

  const int T = 512;
  table_a_.resize(T + 1);
  ds_min_ = 1e300;
  g_min_ = 1e300;
  g_max_ = -1e300;
  for (int i = 0; i <= T; ++i) {
    const double x = x_lo_ + (x_hi_ - x_lo_) * i / T;
    table_a_[i] = S(x);
    ds_min_ = std::min(ds_min_, dS(x));
    g_min_ = std::min(g_min_, G(x));
    g_max_ = std::max(g_max_, G(x));
  }
  if (!(ds_min_ > 0.0)) throw numerical_error("chart", "S is not monotone on the bump range");
  // Chebyshev values between table nodes: widen the extremes a little
  const double gpad = 1e-3 * (1.0 + g_max_ - g_min_);
  g_min_ -= gpad;
  g_max_ += gpad;
  a_lo_ = table_a_.front();
  a_hi_ = table_a_.back();

  for (int i = 0; i <= 4000; ++i) h0_sup_ = std::max(h0_sup_, std::abs(h0(0.0, 1.5 * i / 4000, nullptr, nullptr)));
  mult_ = sampled_multiplicity();
}

double BumpFamily::S(double x) const { return cheb::evaluate(cS_, x / L_); }
double BumpFamily::dS(double x) const { return cheb::evaluate(cdS_, x / L_) / L_; }
double BumpFamily::ddS(double x) const { return cheb::evaluate(cddS_, x / L_) / (L_ * L_); }
double BumpFamily::G(double x) const { return cheb::evaluate(cG_, x / L_); }
double BumpFamily::dG(double x) const { return cheb::evaluate(cdG_, x / L_) / L_; }

double BumpFamily::inverse_S(double a) const {
  const int T = int(table_a_.size()) - 1;
  const auto it = std::upper_bound(table_a_.begin(), table_a_.end(), a);
  const int i = std::clamp(int(it - table_a_.begin()) - 1, 0, T - 1);
  const double h = (x_hi_ - x_lo_) / T;
  double x = x_lo_ + h * (i + (a - table_a_[i]) / (table_a_[i + 1] - table_a_[i]));
  for (int it2 = 0; it2 < 8; ++it2) {
    const double dx = (S(x) - a) / dS(x);
    x -= dx;
    if (std::abs(dx) < 1e-15 * (1.0 + std::abs(x))) break;
  }
  return x;
}

double BumpFamily::profile(double x, double y, int j, double* dx, double* dy) const {
  double hX = 0.0, hY = 0.0;
  const double v = h0(beta_ * (x - s(j)), beta_y_ * y, dx ? &hX : nullptr, &hY);
  if (dx) {
    *dx = beta_ * hX;
    *dy = beta_y_ * hY;
  }
  return v;
}

void BumpFamily::enumerate(const Vec2& w, double zlo, double zhi, std::vector<Preimage>& out) const {
  out.clear();
  const FlowModel& m = model_;
  const double roof = m.r(w);
  const double cmax = y_max() / (std::abs(det_) * ds_min_);
  // bounding box of the (a, c) parallelogram in displacement space
  Vec2 dmin(1e300, 1e300), dmax(-1e300, -1e300);
  for (double a : {a_lo_, a_hi_})
    for (double cc : {-cmax, cmax}) {
      const Vec2 d = a * eu_ + cc * es_;
      dmin = dmin.cwiseMin(d);
      dmax = dmax.cwiseMax(d);
    }

  auto sheet = [&](const Vec2& wk, double off, const Mat2& P, const Vec2& doff) {
    // P = d w_k / d w
    if (off - g_max_ >= zhi || roof + off - g_min_ <= zlo) return;
    const Vec2 d0 = wk - wp_;
    const int nx0 = int(std::ceil(dmin.x() - d0.x())), nx1 = int(std::floor(dmax.x() - d0.x()));
    const int ny0 = int(std::ceil(dmin.y() - d0.y())), ny1 = int(std::floor(dmax.y() - d0.y()));
    for (int nx = nx0; nx <= nx1; ++nx)
      for (int ny = ny0; ny <= ny1; ++ny) {
        const Vec2 d = d0 + Vec2(nx, ny);
        const double a = d.dot(ustar_), cc = d.dot(sstar_);
        if (a <= a_lo_ || a >= a_hi_ || std::abs(cc) >= cmax) continue;
        const double x = inverse_S(a);
        const double s1 = dS(x);
        const double y = sy_ * det_ * s1 * cc;
        if (std::abs(y) >= y_max()) continue;
        const double g = G(x);
        if (off - g >= zhi || roof + off - g <= zlo) continue;
        Preimage q;
        q.x = x;
        q.y = y;
        q.offset = off;
        q.g = g;
        q.dg = dG(x);
        const Vec2 da = P.transpose() * ustar_, dc = P.transpose() * sstar_;
        q.dx = da / s1;
        q.dy = sy_ * det_ * (s1 * dc + cc * ddS(x) * q.dx);
        q.doffset = doff;
        out.push_back(q);
      }
  };

  // k >= 0: base A^{-k} w, lifted height zeta + sum_{i=1..k} r(A^{-i} w)
  {
    Vec2 wk = w, doff = Vec2::Zero();
    Mat2 P = Mat2::Identity();
    double off = 0.0;
    for (int k = 0; k < 64; ++k) {
      if (k > 0) {
        wk = wrap(m.A_inv * wk);
        P = m.A_inv * P;
        off += m.r(wk);
        doff += P.transpose() * m.dr(wk);
      }
      if (off - g_max_ >= zhi) break;
      sheet(wk, off, P, doff);
    }
  }
  // k < 0: base A^{|k|} w, lifted height zeta - sum_{i=0..|k|-1} r(A^i w)
  {
    Vec2 wk = w, doff = Vec2::Zero();
    Mat2 P = Mat2::Identity();
    double off = 0.0;
    for (int k = 1; k < 64; ++k) {
      off -= m.r(wk);
      doff -= P.transpose() * m.dr(wk);
      wk = wrap(m.A * wk);
      P = m.A * P;
      if (roof + off - g_min_ <= zlo) break;
      sheet(wk, off, P, doff);
    }
  }
}

int BumpFamily::sampled_multiplicity() const {
  const int N = 96;
  int best = 1;
  std::vector<Preimage> pre;
  std::vector<std::pair<double, int>> ev;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < N; ++k) {
      const Vec2 w((i + 0.5) / N, (k + 0.5) / N);
      enumerate(w, z_lo(), z_hi(), pre);
      for (int j = 1; j <= count_; ++j) {
        ev.clear();
        for (const Preimage& q : pre) {
          if (std::abs(q.x - s(j)) >= 1.5 / beta_) continue;
          ev.push_back({z_lo() + q.g - q.offset, 1});
          ev.push_back({z_hi() + q.g - q.offset, -1});
        }
        std::sort(ev.begin(), ev.end());
        int cur = 0;
        for (const auto& e : ev) best = std::max(best, cur += e.second);
      }
    }
  return best;
}

double BumpFamily::bump_value(int j, const Point3& q) const {
  std::vector<double> t(count_, 0.0);
  t.at(j - 1) = 1.0;
  return BumpTerm(std::shared_ptr<const BumpFamily>(std::shared_ptr<const BumpFamily>{}, this), t).value(q);
}

Vec3 BumpFamily::bump_gradient(int j, const Point3& q) const {
  std::vector<double> t(count_, 0.0);
  t.at(j - 1) = 1.0;
  return BumpTerm(std::shared_ptr<const BumpFamily>(std::shared_ptr<const BumpFamily>{}, this), t).gradient(q);
}

bool BumpFamily::chart_coordinates(const Point3& q, Vec3& xyz) const {
  std::vector<Preimage> pre;
  enumerate(q.head<2>(), -tau_star_, 6 * tau_star_, pre);
  double best = 1e300;
  for (const Preimage& c : pre) {
    const double z = q.z() + c.offset - c.g;
    if (z < -tau_star_ || z > 6 * tau_star_) continue;
    if (std::abs(z - 4 * tau_star_) < best) {
      best = std::abs(z - 4 * tau_star_);
      xyz = Vec3(c.x, c.y, z);
    }
  }
  return best < 1e300;
}

Point3 BumpFamily::chart_point(double x, double y, double z) const {
  const double cc = y / (sy_ * det_ * dS(x));
  const Vec2 w = wp_ + S(x) * eu_ + cc * es_;
  return canonical(model_, Vec3(w.x(), w.y(), G(x) + z));
}

bool BumpFamily::admissible(int j) const {
  if (j < 1 || j > count_) return false;
  const double lo = s(j) - 3.0 / beta_, hi = s(j) + 3.0 / beta_;
  return lo > -1.0 && hi < 1.0;
}

std::vector<int> BumpFamily::admissible_indices(bool even) const {
  std::vector<int> r;
  for (int j = 1; j <= count_; ++j)
    if ((j % 2 == 0) == even && admissible(j)) r.push_back(j);
  return r;
}

double BumpFamily::analytic_coefficient(int j) const {
  if (j < 1 || j > count_) throw validation_error("index", "bump index out of range");
  if (!model_.has_timechange()) return 1.0;
  const InvariantCurve c = curve_at_params(model_, p_, CurveKind::unstable, {s(j)});
  const Point3 q = flow_map(model_, c.points[0], 4 * tau_star_);
  using GL = boost::math::quadrature::gauss<double, 20>;
  const int panels = 6;
  double sum = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double t0 = -1.5 * tau_star_ + 3.0 * tau_star_ * k / panels, t1 = t0 + 3.0 * tau_star_ / panels;
    sum += GL::integrate(
        [&](double t) {
          const double ph = model_.phi(flow_map(model_, q, t));
          return chi(t / tau_star_) / ((1.0 + ph) * (1.0 + ph));
        },
        t0, t1);
  }
  return sum / a0_;
}

FamilyPtr make_bump_family(const FlowModel& m, const Point3& p, const BumpOptions& opts) {
  return std::make_shared<const BumpFamily>(m, p, opts);
}

BumpTerm::BumpTerm(FamilyPtr family, std::vector<double> t) : fam_(std::move(family)), t_(std::move(t)) {
  if (!fam_) throw validation_error("family", "missing bump family");
  if (int(t_.size()) != fam_->count())
    throw validation_error("t_params", "need one parameter per bump (" + std::to_string(fam_->count()) + ")");
  for (double v : t_)
    if (!(std::abs(v) <= 4.0)) throw validation_error("t_params", "t_j must lie in [-4, 4]");
}

void BumpTerm::eval(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw, double* dz) const {
  struct Cache {
    std::uint64_t id = 0;
    Vec2 w;
    std::vector<BumpFamily::Preimage> pre;
  };
  thread_local Cache cache;
  if (cache.id != fam_->id() || cache.w != w) {
    fam_->preimages(w, cache.pre);
    cache.id = fam_->id();
    cache.w = w;
  }
  const BumpFamily& F = *fam_;
  const double amp = F.amplitude(), ts = F.tau_star();
  const double reach = 1.5 / F.beta();
  for (const BumpFamily::Preimage& q : cache.pre) {
    double H = 0.0;
    Vec2 dH = Vec2::Zero();
    for (int j = 1; j <= F.count(); ++j) {
      const double tj = t_[j - 1];
      if (tj == 0.0 || std::abs(q.x - F.s(j)) >= reach) continue;
      double hx, hy;
      H += tj * F.profile(q.x, q.y, j, &hx, &hy);
      dH += tj * (hx * q.dx + hy * q.dy);
    }
    if (H == 0.0 && dH.isZero()) continue;
    for (std::size_t k = 0; k < n; ++k) {
      const double u = (z[k] + q.offset - q.g) / ts - 4.0;
      if (std::abs(u) >= 1.5) continue;
      const double c = chi(u);
      val[k] -= amp * c * H;
      if (dw || dz) {
        const double cd = chi_d1(u) / ts;
        if (dw) dw[k] -= amp * (cd * H * (q.doffset - q.dg * q.dx) + c * dH);
        if (dz) dz[k] -= amp * cd * H;
      }
    }
  }
}

void BumpTerm::fiber_values(const Vec2& w, const double* z, std::size_t n, double* val, Vec2* dw) const {
  eval(w, z, n, val, dw, nullptr);
}

double BumpTerm::value(const Point3& p) const {
  double v = 0.0;
  const double z = p.z();
  eval(p.head<2>(), &z, 1, &v, nullptr, nullptr);
  return v;
}

Vec3 BumpTerm::gradient(const Point3& p) const {
  double v = 0.0, dz = 0.0;
  Vec2 dw = Vec2::Zero();
  const double z = p.z();
  eval(p.head<2>(), &z, 1, &v, &dw, &dz);
  return Vec3(dw.x(), dw.y(), dz);
}

void BumpTerm::fiber_windows(const Vec2& w, double, std::vector<Interval>& out) const {
  thread_local std::vector<BumpFamily::Preimage> pre;
  fam_->preimages(w, pre);
  const double reach = 1.5 / fam_->beta();
  for (const auto& q : pre) {
    bool active = false;
    for (int j = 1; j <= fam_->count() && !active; ++j) active = t_[j - 1] != 0.0 && std::abs(q.x - fam_->s(j)) < reach;
    if (active) out.push_back({fam_->z_lo() + q.g - q.offset, fam_->z_hi() + q.g - q.offset});
  }
}

double BumpTerm::sup_bound() const {
  double s = 0.0;
  for (double v : t_) s += std::abs(v);
  return s * fam_->amplitude() * fam_->h0_sup() * fam_->multiplicity();
}

std::string BumpTerm::describe() const {
  std::ostringstream os;
  os << "bumps(b=" << fam_->b() << ", R=" << fam_->R() << ", t=[";
  for (std::size_t i = 0; i < t_.size(); ++i) os << (i ? "," : "") << t_[i];
  os << "])";
  return os.str();
}

FlowModel bump_timechange(const FamilyPtr& family, const std::vector<double>& t) {
  BumpTerm check(family, t);
  // phi_t = phi_0: same vector field, same model
  if (std::all_of(t.begin(), t.end(), [](double v) { return v == 0.0; })) return family->model();
  return with_extra_timechange(family->model(), {std::make_shared<BumpTerm>(family, t)});
}

namespace {

// L1 mass of |f| on [lo, hi] for piecewise-linear f on the grid x
double l1_mass(const std::vector<double>& x, const std::vector<double>& f, double lo, double hi) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = std::max(lo, x[i]), b = std::min(hi, x[i + 1]);
    if (!(b > a)) continue;
    auto at = [&](double s) { return f[i] + (f[i + 1] - f[i]) * (s - x[i]) / (x[i + 1] - x[i]); };
    // split at a sign change so |f| stays linear on each piece
    const double fa = at(a), fb = at(b);
    if (fa * fb < 0) {
      const double r = a + (b - a) * fa / (fa - fb);
      m += 0.5 * (std::abs(fa) * (r - a) + std::abs(fb) * (b - r));
    } else {
      m += 0.5 * (std::abs(fa) + std::abs(fb)) * (b - a);
    }
  }
  return m;
}

}  // namespace

TemplateResponse template_response(const FamilyPtr& family, int j, const std::vector<double>& t_grid,
                                   const ResponseOptions& o) {
  const BumpFamily& F = *family;
  if (j < 1 || j > F.count()) throw validation_error("index", "bump index out of range");
  if (t_grid.size() < 2) throw validation_error("t_grid", "need at least two t values");
  if (o.grid < 3) throw validation_error("grid", "need at least 3 nodes");
  const FlowModel& m0 = F.model();

  TemplateResponse r;
  r.j = j;
  r.t = t_grid;
  const int N = o.grid;
  r.tau.resize(N);
  for (int k = 0; k < N; ++k) r.tau[k] = -1.0 + 2.0 * k / (N - 1);
  r.tau[(N - 1) / 2] = 0.0;

  const InvariantCurve c = curve_at_params(m0, F.anchor(), CurveKind::unstable, r.tau, o.curve);
  std::vector<Covector> perp(N), g0(N);
  const int mid = (N - 1) / 2;
  const double sigma = perp_covector(m0, c.tangents[mid] / c.factor[mid]).dot(stable_direction(m0, F.anchor(), o.split)) >= 0
                           ? 1.0
                           : -1.0;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < N; ++k) {
    perp[k] = sigma * perp_covector(m0, c.tangents[k] / c.factor[k]);
    g0[k] = stable_covector(m0, c.points[k], c.tangents[k], stable_direction(m0, c.points[k], o.split));
  }

  const std::size_t T = t_grid.size();
  r.delta.assign(T, std::vector<double>(N, 0.0));
  for (std::size_t i = 0; i < T; ++i) {
    std::vector<double> tv(F.count(), 0.0);
    tv[j - 1] = t_grid[i];
    const FlowModel mt = bump_timechange(family, tv);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < N; ++k) {
      const Covector gt = stable_covector(m0, c.points[k], c.tangents[k], stable_direction(mt, c.points[k], o.split));
      r.delta[i][k] = perp_coefficient(m0, c.points[k], gt - g0[k], perp[k]);
    }
  }

  // LS slope of b * delta against t, per node
  double tb = 0.0;
  for (double t : t_grid) tb += t;
  tb /= double(T);
  double stt = 0.0;
  for (double t : t_grid) stt += (t - tb) * (t - tb);
  if (!(stt > 0)) throw validation_error("t_grid", "t values must not all coincide");
  r.slope.assign(N, 0.0);
  int inside = 0;
  for (int k = 0; k < N; ++k) {
    double db = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < T; ++i) db += r.delta[i][k];
    db /= double(T);
    for (std::size_t i = 0; i < T; ++i) sty += (t_grid[i] - tb) * (r.delta[i][k] - db);
    r.slope[k] = F.b() * sty / stt;
    if (r.tau[k] >= F.J_lo(j) && r.tau[k] <= F.J_hi(j)) {
      r.slope_j += r.slope[k];
      ++inside;
      const double icept = db - (sty / stt) * tb;
      double res = 0.0, lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < T; ++i) {
        res = std::max(res, std::abs(r.delta[i][k] - icept - (sty / stt) * t_grid[i]));
        lo = std::min(lo, r.delta[i][k]);
        hi = std::max(hi, r.delta[i][k]);
      }
      if (hi > lo) r.linearity = std::max(r.linearity, res / (hi - lo));
    }
  }
  if (inside == 0) throw validation_error("grid", "no template node inside J(j); refine the grid");
  r.slope_j /= inside;
  r.analytic = F.analytic_coefficient(j);
  r.ratio = r.slope_j / (F.a0() * r.analytic);

  // locality at the largest |t|
  std::size_t imax = 0;
  for (std::size_t i = 1; i < T; ++i)
    if (std::abs(t_grid[i]) > std::abs(t_grid[imax])) imax = i;
  const std::vector<double>& d = r.delta[imax];
  const double ulo = std::max(-1.0, F.s(j - 1) - 1.0 / F.beta()), uhi = std::min(1.0, F.s(j + 1) + 1.0 / F.beta());
  const double len = uhi - ulo;
  r.near_mass = l1_mass(r.tau, d, ulo, uhi);
  r.far_mass = 0.0;
  bool any = false;
  const int slides = 200;
  for (int side : {-1, 1}) {
    const double a = side < 0 ? -1.0 : uhi, bnd = side < 0 ? ulo : 1.0;
    if (bnd - a < len) continue;
    for (int s = 0; s <= slides; ++s) {
      const double lo = a + (bnd - a - len) * s / slides;
      r.far_mass = std::max(r.far_mass, l1_mass(r.tau, d, lo, lo + len));
      any = true;
    }
  }
  // no room for a full window: compare with everything outside
  if (!any) r.far_mass = l1_mass(r.tau, d, -1.0, ulo) + l1_mass(r.tau, d, uhi, 1.0);
  r.locality = r.far_mass > 0 ? r.near_mass / r.far_mass : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace anosov
