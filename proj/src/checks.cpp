#include "anosov/checks.hpp"

#include "anosov/bargmann.hpp"
#include "anosov/mixing.hpp"
#include "anosov/oscint.hpp"
#include "anosov/perturb.hpp"
#include "anosov/rng.hpp"
#include "anosov/sections.hpp"
#include "anosov/splitting.hpp"
#include "anosov/torsion.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace anosov::checks {

bool Criterion::pass() const {
  if (checks.empty() || seconds > budget_seconds) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

Check upper(std::string name, double measured, double limit, std::string detail = {}) {
  return {std::move(name), measured, limit, std::isfinite(measured) && measured < limit, std::move(detail)};
}

Check lower(std::string name, double measured, double limit, std::string detail = {}) {
  return {std::move(name), measured, limit, std::isfinite(measured) && measured >= limit, std::move(detail)};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// models

Mat2i cat() {
  Mat2i A;
  A << 2, 1, 1, 1;
  return A;
}

TrigPoly cos_roof() { return TrigPoly{1.0, {{1, 0, 0.1, 0.0}}}; }

TermPtr sample_timechange() {
  TrigPoly modes{0.0, {{1, 0, 0.2, 0.0}, {1, 1, 0.0, 0.1}}};
  return std::make_shared<TrigProfileTerm>(modes, 0.15, 0.75);
}

FlowModel cat_const() { return make_suspension(cat(), TrigPoly{1.0, {}}); }
FlowModel cat_cos() { return make_suspension(cat(), cos_roof()); }

std::vector<std::pair<std::string, FlowModel>> all_models() {
  return {{"const", cat_const()},
          {"cos", cat_cos()},
          {"const+tc", make_suspension(cat(), TrigPoly{1.0, {}}, {sample_timechange()})},
          {"cos+tc", make_suspension(cat(), cos_roof(), {sample_timechange()})}};
}

std::vector<Point3> random_points(const FlowModel& m, int n, std::uint64_t seed) {
  std::vector<Point3> pts;
  for (int i = 0; i < n; ++i) {
    const double x = rng::uniform(seed, i, 0), y = rng::uniform(seed, i, 1);
    pts.emplace_back(x, y, rng::uniform(seed, i, 2) * m.r(Vec2(x, y)));
  }
  return pts;
}

double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

// 1. constant roof

void constant_roof(std::vector<Check>& out) {
  const FlowModel m = cat_const();
  // cat-map eigenvectors (1, g) and (1, -1/g), g the golden-ratio conjugate
  const double g = (std::sqrt(5.0) - 1) / 2;
  const Vec3 eu = Vec3(1, g, 0).normalized(), es = Vec3(1, -1 / g, 0).normalized();
  double angle = 0.0;
  for (const Point3& p : random_points(m, 1000, 101)) {
    angle = std::max(angle, line_angle(unstable_direction(m, p), eu));
    angle = std::max(angle, line_angle(stable_direction(m, p), es));
  }
  out.push_back(upper("splitting angle, 1000 points", angle, 1e-10));

  double psi = 0.0;
  Template first;
  for (const Point3& p : {Point3(0.3, 0.6, 0.2), Point3(0.81, 0.05, 0.55), Point3(0.12, 0.9, 0.95)}) {
    const Template T = s_template(m, p);
    if (T.values.size() != 513) throw numerical_error("check", "template grid is not 513");
    psi = std::max(psi, sup_abs(T.values));
    if (first.values.empty()) first = T;
  }
  out.push_back(upper("s-template max|psi|, 513-grid", psi, 1e-6));

  double tor = 0.0;
  for (double d : {0.5, 0.25, 0.125}) {
    const TorsionReport r = torsions_and_delta(m, Point3(0.3, 0.6, 0.2), d);
    tor = std::max({tor, std::abs(r.tor_s), std::abs(r.tor_u), std::abs(r.delta_value)});
  }
  out.push_back(upper("max |Tor^s|, |Tor^u|, |Delta| at delta 1/2, 1/4, 1/8", tor, 1e-6));

  const Profile P(first.tau, first.values);
  double dev = 0.0, alpha = 0.0;
  bool fails_ni = true;
  for (double b : {10.0, 100.0, 1000.0}) {
    const OscIntegralReport r = ni_margin(P, b);
    dev = std::max(dev, std::abs(r.value - 2.0));
    alpha = std::max(alpha, std::abs(r.alpha_star));
    fails_ni = fails_ni && !r.passes_ni;
  }
  out.push_back(upper("|ni_margin - 2|, b = 10, 100, 1000", dev, 1e-3));
  out.push_back(upper("|alpha*|", alpha, 1e-3));
  out.push_back(upper("(NI) verdict is fail", fails_ni ? 0.0 : 1.0, 0.5));
}

// 2. flow identities

void flow_identities(std::vector<Check>& out) {
  for (const auto& [name, model] : all_models()) {
    const auto pts = random_points(model, 100, 17);
    double wg = 0.0, wc = 0.0, wd = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double t = -10.0 + 20.0 * rng::uniform(19, i, 0);
      const double s = -10.0 + 20.0 * rng::uniform(19, i, 1);
      wg = std::max(wg, point_distance(model, flow_map(model, pts[i], t + s),
                                       flow_map(model, flow_map(model, pts[i], t), s)));
      const double t2 = t / 2, s2 = s / 2;
      const Mat3 J = flow_jacobian(model, pts[i], t2 + s2);
      const Mat3 K = flow_jacobian(model, flow_map(model, pts[i], t2), s2) * flow_jacobian(model, pts[i], t2);
      wc = std::max(wc, (J - K).norm() / J.norm());
      // det Df^t against the density ratio of (1 + phi)^{-1} dx dy dz
      const double expect = (1 + model.phi(flow_map(model, pts[i], t2))) / (1 + model.phi(pts[i]));
      wd = std::max(wd, std::abs(flow_jacobian(model, pts[i], t2).determinant() - expect));
    }
    out.push_back(upper("group law [" + name + "]", wg, 1e-9));
    out.push_back(upper("cocycle, relative [" + name + "]", wc, 1e-8));
    out.push_back(upper("volume Jacobian [" + name + "]", wd, 1e-8));

    // central differences with h and h/2: O(h^2) convergence, points away from the gluing
    double fd = 0.0, ratio = 0.0;
    int used = 0;
    for (const Point3& p : random_points(model, 100, 23)) {
      const double r0 = model.r(p.head<2>());
      if (p.z() < 0.05 * r0 || p.z() > 0.95 * r0) continue;
      const double t = 1.0 + 2.0 * p.x();
      const Point3 q = flow_map(model, p, t);
      const double rq = model.r(q.head<2>());
      if (q.z() < 0.05 * rq || q.z() > 0.95 * rq) continue;
      const Mat3 J = flow_jacobian(model, p, t);
      double e[2];
      int k = 0;
      for (double h : {1e-4, 5e-5}) {
        Mat3 F;
        for (int c = 0; c < 3; ++c) {
          Vec3 dv = Vec3::Zero();
          dv(c) = h;
          Vec3 d = flow_map(model, p + dv, t) - flow_map(model, p - dv, t);
          d.x() -= std::round(d.x());
          d.y() -= std::round(d.y());
          F.col(c) = d / (2 * h);
        }
        e[k++] = (F - J).norm() / J.norm();
      }
      fd = std::max(fd, e[0]);
      if (e[0] > 1e-9) ratio = std::max(ratio, e[1] / e[0]);
      ++used;
    }
    out.push_back(upper("finite-difference Jacobian, relative [" + name + "]", fd, 1e-5,
                        std::to_string(used) + " interior points"));
    out.push_back(upper("finite-difference error ratio h/2 : h [" + name + "]", ratio, 1.0 / 3));
  }
}

// 3. templates

void template_machinery(std::vector<Check>& out) {
  const FlowModel m = cat_cos();
  const Point3 pts[] = {Point3(0.3, 0.6, 0.2), Point3(0.71, 0.13, 0.8)};
  double worst_k = 0.0, min_ref = 1e300;
  for (const Point3& p : pts) {
    const Straightness s = straightness_test(m, p, {1.0, 2.0, 4.0});
    for (double k : s.kappa) worst_k = std::max(worst_k, k / s.kappa0);
    min_ref = std::min(min_ref, s.kappa_reference.back() / s.kappa0);
  }
  out.push_back(upper("straight pullback curvature / kappa0, t <= 4", worst_k, 2.0));
  out.push_back(lower("reference-section curvature / kappa0 at t = 4", min_ref, 10.0, "contrast: not straight"));

  double ref = 0.0, trunc = 0.0;
  for (const Point3& p : pts) {
    SectionOptions o;
    const Template a = s_template(m, p, o);
    o.reference = Reference::transverse;
    ref = std::max(ref, sup_diff(a.values, s_template(m, p, o).values));
    SectionOptions t;
    t.max_terms = a.terms + 5;
    trunc = std::max(trunc, sup_diff(a.values, s_template(m, p, t).values));
  }
  out.push_back(upper("reference-choice independence", ref, 1e-7));
  out.push_back(upper("truncation stability N vs N+5", trunc, 1e-8));
  out.push_back(upper("miniature residual at delta = 1/4", miniature_residual(m, pts[0], 0.25).residual, 0.05));
}

// 4. oscillatory integrals

void oscillatory(std::vector<Check>& out) {
  const FlowModel m = cat_cos();
  const Template T = s_template(m, Point3(0.3, 0.6, 0.2));
  struct Case {
    std::string name;
    Profile P;
    std::function<double(double)> f;
  };
  auto zero = [](double) { return 0.0; };
  auto square = [](double t) { return t * t; };
  std::vector<Case> cases;
  cases.push_back({"0", Profile(zero, 513), zero});
  cases.push_back({"tau^2", Profile(square, 513), square});
  const Profile sampled(T.tau, T.values);
  cases.push_back({"sampled template", sampled, [sampled](double t) { return sampled(t); }});
  for (const Case& c : cases) {
    double err = 0.0;
    for (double b : {10.0, 100.0, 1000.0}) {
      // 10x the panel count the Nyquist check asks for
      const int mult = 10 * int(std::ceil(std::max(1.0, b * c.P.max_step() + 1)));
      for (double alpha : {0.0, 0.37, -1.9, 3.0}) {
        const cplx refv = osc_integral_reference(c.f, b, alpha, 512 * mult);
        err = std::max(err, std::abs(osc_integral(c.P, b, alpha) - refv));
      }
    }
    out.push_back(upper("osc_integral vs 10x reference, psi = " + c.name, err, 1e-7));
  }

  const std::uint64_t seed = 77;
  double ibp[2] = {0.0, 0.0};
  for (int i = 0; i < 20; ++i) {
    auto u = [&](int c, double a, double b) { return a + (b - a) * rng::uniform(seed, i, c); };
    const double a1 = u(0, 6, 20), c2 = u(1, -1, 1), d = u(2, -0.1, 0.1), k = u(3, 1, 5);
    const double lo = u(4, -1, -0.2), hi = u(5, 0.2, 1), e = u(6, -0.5, 0.5), mm = u(7, 1, 6);
    const Phase th{[=](double s) { return a1 * s + c2 * s * s + d * std::sin(k * s); },
                   [=](double s) { return a1 + 2 * c2 * s + d * k * std::cos(k * s); },
                   [=](double s) { return 2 * c2 - d * k * k * std::sin(k * s); }};
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    const Amplitude g{[=](double s) {
                        const double x = (s - mid) / half;
                        return std::pow(1 - x * x, 3) * (1 + e * std::cos(mm * s));
                      },
                      lo, hi};
    int slot = 0;
    for (double eps : {0.05, 0.025}) {
      const IbpSides r = reg_ibp(th, g, eps);
      ibp[slot] = std::max(ibp[slot], std::abs(r.lhs - r.rhs));
      ++slot;
    }
  }
  out.push_back(upper("reg_ibp |LHS - RHS|, 20 pairs, eps = 0.05", ibp[0], 1e-8));
  out.push_back(upper("reg_ibp |LHS - RHS|, 20 pairs, eps = 0.025", ibp[1], 1e-8));
}

// 5. mixing

CorrelationSeries synthetic(double rate, double noise, std::uint64_t seed) {
  CorrelationSeries s;
  s.t = default_time_grid();
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const double c = std::exp(-rate * s.t[k]);
    const double u1 = 1.0 - rng::uniform(seed, k, 0), u2 = rng::uniform(seed, k, 1);
    const double gauss = std::sqrt(-2 * std::log(u1)) * std::cos(two_pi * u2);
    s.value.push_back(c * (1 + noise * gauss));
    s.stderr_.push_back(noise > 0 ? noise * c : 0.0);
  }
  return s;
}

void mixing(std::vector<Check>& out, std::size_t n) {
  ObsTerm wave;
  wave.profile = FiberProfile::fourier;
  wave.n = 1;
  const std::string ns = std::to_string(n) + " samples";

  const FlowModel mc = cat_const();
  const Observable oc = make_observable(mc, {wave});
  const DecayFit fc = fit_decay(correlation_series(mc, oc, oc, default_time_grid(), n, 5));
  out.push_back(upper("constant roof: decay detected", fc.detected ? 1.0 : 0.0, 0.5, fc.verdict + ", " + ns));

  const FlowModel mk = cat_cos();
  const Observable ok = make_observable(mk, {wave});
  const DecayFit fk = fit_decay(correlation_series(mk, ok, ok, default_time_grid(), n, 5));
  out.push_back(lower("cosine roof: fitted rate", fk.detected ? fk.rate : 0.0, 1e-300,
                      fk.verdict + ", " + std::to_string(fk.points) + " points to t = " + fmt(fk.t_end)));
  out.push_back(lower("cosine roof: weighted R^2", fk.r2, 0.9));

  out.push_back(upper("synthetic rate 0.7, exact", std::abs(fit_decay(synthetic(0.7, 0.0, 1)).rate - 0.7), 1e-6));
  double noisy = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) noisy = std::max(noisy, std::abs(fit_decay(synthetic(0.7, 0.01, seed)).rate - 0.7));
  out.push_back(upper("synthetic rate 0.7, 1% noise, 3 seeds", noisy, 0.02));
}

// 6. Bargmann

double jp(double s) { return std::sqrt(1 + s * s); }

double rel_l2(const PhaseGridFunction& a, const PhaseGridFunction& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.blocks.size(); ++k) d += (a.blocks[k] - b.blocks[k]).squaredNorm();
  return std::sqrt(d * a.grid.phase_weight()) / b.norm();
}

double rel_l2(const SpaceFunction& a, const SpaceFunction& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.slices.size(); ++k) d += (a.slices[k] - b.slices[k]).squaredNorm();
  return std::sqrt(d * a.grid.space_weight()) / b.norm();
}

// int exp(-i xi (x - w/2) - a (x - w)^2 / 2 - x^2 / 2) dx
cplx gauss_factor(double a, double w, double xi) {
  const cplx b(a * w, -xi);
  return std::sqrt(two_pi / (1 + a)) * std::exp(b * b / (2 * (1 + a)) + cplx(-a * w * w / 2, xi * w / 2));
}

SpaceFunction random_packet(const BargmannGrid& g, std::uint64_t seed, int i) {
  const auto U = [&](int j, double lo, double hi) { return lo + (hi - lo) * rng::uniform(seed, i, j); };
  const Vec2 c(U(0, -1, 1), U(1, -1, 1)), k(U(2, -2, 2), U(3, -2, 2));
  const double s = U(4, 0.8, 1.3), sz = U(5, 0.8, 1.0), kz = U(6, -1, 1);
  return sample_space(g, [=](double x, double y, double z) {
    const double dx = x - c.x(), dy = y - c.y();
    return std::exp(cplx(-(dx * dx + dy * dy) / (2 * s * s) - z * z / (2 * sz * sz), k.x() * x + k.y() * y + kz * z));
  });
}

void bargmann(std::vector<Check>& out) {
  {
    const BargmannGrid g = transform_grid();
    const PhaseGridFunction V =
        bargmann_fwd(sample_space(g, [](double x, double y, double z) { return std::exp(-(x * x + y * y + z * z) / 2); }));
    double worst = 0.0, peak = 0.0;
    for (int k = 0; k < g.eta_count(); ++k) {
      const double eta = g.eta(k);
      if (std::abs(eta) > 0.8) continue;
      const double a = jp(eta);
      const double c = std::pow(2.0, -1.5) / (M_PI * M_PI) * std::sqrt(a) * std::sqrt(two_pi) * std::exp(-eta * eta / 2);
      for (int i1 = 0; i1 < g.w.n; ++i1)
        for (int j1 = 0; j1 < g.xi.n; ++j1)
          for (int i2 = 0; i2 < g.w.n; ++i2)
            for (int j2 = 0; j2 < g.xi.n; ++j2) {
              const double w1 = g.w.at(i1), x1 = g.xi.at(j1), w2 = g.w.at(i2), x2 = g.xi.at(j2);
              if (std::abs(w1) > 4 || std::abs(w2) > 4 || std::abs(x1) > 6 || std::abs(x2) > 6) continue;
              const cplx exact = c * gauss_factor(a, w1, x1) * gauss_factor(a, w2, x2);
              worst = std::max(worst, std::abs(V.at(k, i1, j1, i2, j2) - exact));
              peak = std::max(peak, std::abs(exact));
            }
    }
    out.push_back(upper("transform of a Gaussian vs closed form, relative", worst / peak, 1e-6));
  }

  const BargmannGrid g = projector_grid();
  double iso = 0.0, inv = 0.0;
  for (int i = 0; i < 20; ++i) {
    const SpaceFunction u = random_packet(g, 11, i);
    const PhaseGridFunction V = bargmann_fwd(u);
    iso = std::max(iso, std::abs(V.norm() / u.norm() - 1));
    inv = std::max(inv, rel_l2(bargmann_adj(V), u));
  }
  out.push_back(upper("isometry ||Bu|/|u| - 1|, 20 packets", iso, 1e-3));
  out.push_back(upper("B*B u - u, relative, 20 packets", inv, 1e-3));
  {
    const SpaceFunction u = random_packet(g, 12, 0);
    const PhaseGridFunction V = random_phase(g, 1, 50.0, 50.0);
    const double adj = std::abs(bargmann_fwd(u).inner(V) - u.inner(bargmann_adj(V))) / (u.norm() * V.norm());
    out.push_back(upper("adjointness, relative", adj, 1e-8));
  }
  {
    const PhaseGridFunction v = random_phase(g, 5, 2.0, 3.0);
    const PhaseGridFunction Pv = projector_apply(v);
    out.push_back(upper("projector idempotence", rel_l2(projector_apply(Pv), Pv), 1e-5));
    out.push_back(upper("projector kernel vs composition", rel_l2(projector_apply(v, ProjectorPath::kernel), Pv), 1e-6));
  }

  double q = 0.0;
  for (int i = 0; i <= 20000; ++i) {
    const double eta = -10.0 + i * 1e-3 + 1e-7;
    double s = 0.0;
    for (int w = -12; w <= 12; ++w) s += q_omega(w, eta);
    q = std::max(q, std::abs(s - 1));
  }
  double psi = 0.0, sign = 0.0;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) {
      const double r = std::exp(-2.0 + 8.0 * i / 400), th = two_pi * j / 400 + 1e-3;
      const Vec2 v(r * std::cos(th), r * std::sin(th));
      double s = 0.0;
      for (int m = -12; m <= 12; ++m) s += psi_aniso(m, v);
      psi = std::max(psi, std::abs(s - 1));
      sign = std::max(sign, std::abs(chi_sign(1, v) + chi_sign(-1, v) - 1));
    }
  out.push_back(upper("partition sum q_omega", q, 1e-12));
  out.push_back(upper("partition sum psi_m", psi, 1e-12));
  out.push_back(upper("partition sum chi_+ + chi_-", sign, 1e-12));

  const BargmannGrid lg = linear_grid();
  const NormEstimate id = linear_model_norm(LinearModel{}, std::nullopt, std::nullopt, lg);
  out.push_back(upper("linear-model norm, identity", id.norm, 1 + 1e-6));
  out.push_back(upper("identity norm deficit 1 - |A|", 1 - id.norm, 1e-3));
  PhaseCutoff c;
  c.omega = 2;
  LinearModel A;
  A.lambda = 2.618;
  A.lambda_t = 1 / 2.618;
  A.varpi = Vec2(0.4, -0.3);
  const double n0 = linear_model_norm(A, c, c, lg).norm;
  A.beta = 10;
  const double n10 = linear_model_norm(A, c, c, lg).norm;
  out.push_back(upper("linear-model norm, beta = 0", n0, 1 + 1e-6));
  out.push_back(upper("linear-model norm, beta = 10", n10, 1 + 1e-6));
  out.push_back(upper("norm ratio beta = 10 : beta = 0", n10 / n0, 0.9));
}

// 7. perturbations

FamilyPtr family(const FlowModel& m, double b, int R) {
  BumpOptions o;
  o.b = b;
  o.R = R;
  return make_bump_family(m, Point3(0.3, 0.2, 0.4), o);
}

void perturbation(std::vector<Check>& out) {
  const FlowModel m = cat_cos();
  {
    const FamilyPtr F = family(m, 256, 2);
    const FlowModel m0 = bump_timechange(F, std::vector<double>(F->count(), 0.0));
    double worst = 0.0;
    for (const Point3& p : random_points(m, 50, 17))
      for (double t : {0.5, 3.0, -2.0}) worst = std::max(worst, (flow_map(m0, p, t) - flow_map(m, p, t)).norm());
    out.push_back(upper("zero deformation", worst, 1e-12));
  }

  // max over a transverse line through the centre of phi_j of |d^k phi_j| along e_s, over b^{(k-1)/R-1}
  const int R = 2;
  double ratio[3][2] = {{1e300, 0}, {1e300, 0}, {1e300, 0}};
  for (double b : {256.0, 1024.0, 4096.0}) {
    const FamilyPtr F = family(m, b, R);
    const int j = (F->count() + 1) / 2;
    const Vec2 e = m.e_stable;
    const double h = 0.01 / F->beta_y();
    double mx[3] = {0, 0, 0};
    for (int i = 0; i <= 300; ++i) {
      const Point3 q = F->chart_point(F->s(j), (-1.6 + 3.2 * i / 300) / F->beta_y(), 4 * F->tau_star());
      auto f = [&](double s) { return F->bump_value(j, Point3(q.x() + s * e.x(), q.y() + s * e.y(), q.z())); };
      mx[0] = std::max(mx[0], std::abs(f(0)));
      mx[1] = std::max(mx[1], std::abs((f(h) - f(-h)) / (2 * h)));
      mx[2] = std::max(mx[2], std::abs((f(h) - 2 * f(0) + f(-h)) / (h * h)));
    }
    for (int k = 0; k < 3; ++k) {
      const double r = mx[k] / std::pow(b, (k - 1.0) / R - 1.0);
      ratio[k][0] = std::min(ratio[k][0], r);
      ratio[k][1] = std::max(ratio[k][1], r);
    }
  }
  for (int k = 0; k < 3; ++k)
    out.push_back(upper("C^" + std::to_string(k) + " scaling spread over b = 256..4096", ratio[k][1] / ratio[k][0], 4.0 + 1e-12,
                        "R = 2"));

  {
    const FamilyPtr F = family(m, 256, 2);
    const TemplateResponse r = template_response(F, 8, {-1.0, -0.5, 0.0, 0.5, 1.0});
    out.push_back(lower("locality factor, b = 256, R = 2, j = 8", r.locality, 5.0));
  }
  {
    const FamilyPtr F = family(m, 32, 14);
    ResponseOptions o;
    o.grid = 65;
    double lo = 1e300, hi = 0.0;
    for (int j = 1; j <= F->count(); ++j) {
      const double r = template_response(F, j, {-1.0, 0.0, 1.0}, o).ratio;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double factor = lo > 0 ? std::max(hi, 1.0 / lo) : INFINITY;
    out.push_back(upper("slope / a_j factor, b = 32, R = 14, all j", factor, 2.0,
                        "ratios in [" + fmt(lo) + ", " + fmt(hi) + "]"));
  }
}

template <typename F>
Criterion timed(int id, std::string title, double budget, F&& body) {
  Criterion c;
  c.id = id;
  c.title = std::move(title);
  c.budget_seconds = budget;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c.checks);
  } catch (const std::exception& e) {
    c.checks.push_back({"exception", NAN, 0.0, false, e.what()});
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

}  // namespace

Criterion run_criterion(int id, const Scale& scale) {
  switch (id) {
    case 1: return timed(1, "constant-roof ground truth", 120, constant_roof);
    case 2: return timed(2, "flow correctness", 60, flow_identities);
    case 3: return timed(3, "template machinery", 300, template_machinery);
    case 4: return timed(4, "oscillatory integration", 60, oscillatory);
    case 5: return timed(5, "mixing discrimination", 600, [&](std::vector<Check>& v) { mixing(v, scale.mixing_samples); });
    case 6: return bargmann_suite();
    case 7: return timed(7, "perturbation response", 600, perturbation);
  }
  throw validation_error("criterion", "no criterion " + std::to_string(id));
}

Criterion bargmann_suite() { return timed(6, "Bargmann suite", 300, bargmann); }

nlohmann::json to_json(const Criterion& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["title"] = c.title;
  j["pass"] = c.pass();
  j["seconds"] = c.seconds;
  j["budget_seconds"] = c.budget_seconds;
  j["checks"] = nlohmann::json::array();
  for (const Check& k : c.checks) {
    nlohmann::json e;
    e["name"] = k.name;
    e["measured"] = std::isfinite(k.measured) ? nlohmann::json(k.measured) : nlohmann::json(nullptr);
    e["limit"] = k.limit;
    e["pass"] = k.pass;
    if (!k.detail.empty()) e["detail"] = k.detail;
    j["checks"].push_back(e);
  }
  return j;
}

std::string summary_line(const Criterion& c) {
  std::ostringstream s;
  int failed = 0;
  for (const Check& k : c.checks) failed += !k.pass;
  s << "criterion " << c.id << " " << (c.pass() ? "PASS" : "FAIL") << "  " << c.title << "  (" << c.checks.size()
    << " checks, " << failed << " failed, " << fmt(c.seconds) << " s of " << fmt(c.budget_seconds) << " s)";
  return s.str();
}

}  // namespace anosov::checks
