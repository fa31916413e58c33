#include "fixtures.hpp"

#include "anosov/perturb.hpp"
#include "anosov/smooth.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <doctest.h>

#include <array>
#include <cmath>

using namespace anosov;
using namespace fixtures;

namespace {

const Point3 anchor(0.3, 0.2, 0.4);

FamilyPtr family(const FlowModel& m, double b, int R) {
  BumpOptions o;
  o.b = b;
  o.R = R;
  return make_bump_family(m, anchor, o);
}

std::vector<double> unit_t(const BumpFamily& F, int j, double v) {
  std::vector<double> t(F.count(), 0.0);
  t[j - 1] = v;
  return t;
}

// k-th central difference of phi_j along the base direction e at q
double central_diff(const BumpFamily& F, int j, const Point3& q, const Vec2& e, int k, double h) {
  auto f = [&](double s) { return F.bump_value(j, Point3(q.x() + s * e.x(), q.y() + s * e.y(), q.z())); };
  switch (k) {
    case 0: return f(0);
    case 1: return (f(h) - f(-h)) / (2 * h);
    default: return (f(h) - 2 * f(0) + f(-h)) / (h * h);
  }
}

}  // namespace

TEST_SUITE("perturb") {

TEST_CASE("chart reproduces the unstable curve and inverts") {
  const FlowModel m = cat_cos();
  const FamilyPtr F = family(m, 256, 2);
  CHECK(F->count() == 16);
  CHECK(F->chart_residual() < 1e-9);
  CHECK(F->multiplicity() == 1);
  std::vector<double> xs;
  for (int i = 0; i <= 20; ++i) xs.push_back(-1.0 + 0.1 * i);
  const InvariantCurve c = curve_at_params(m, anchor, CurveKind::unstable, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(point_distance(m, F->chart_point(xs[i], 0, 0), c.points[i]) < 1e-9);
  // flow box: z is flow time without a time change
  const Point3 q = F->chart_point(0.4, 0.02, 0.0);
  CHECK(point_distance(m, flow_map(m, q, 0.37), F->chart_point(0.4, 0.02, 0.37)) < 1e-10);
  for (double x : {-0.9, -0.3, 0.55, 0.97})
    for (double y : {-0.08, 0.0, 0.05})
      for (double z : {0.3, 0.4, 0.5}) {
        Vec3 xyz;
        REQUIRE(F->chart_coordinates(F->chart_point(x, y, z), xyz));
        CHECK((xyz - Vec3(x, y, z)).norm() < 1e-10);
      }
  // dx dy dz is the volume: the chart Jacobian has determinant +-1
  const double h = 1e-6;
  const Vec3 c0(0.4, 0.02, 0.3);
  Mat3 J;
  for (int d = 0; d < 3; ++d) {
    Vec3 a = c0, b = c0;
    a[d] += h;
    b[d] -= h;
    J.col(d) = (F->chart_point(a.x(), a.y(), a.z()) - F->chart_point(b.x(), b.y(), b.z())) / (2 * h);
  }
  CHECK(std::abs(std::abs(J.determinant()) - 1.0) < 1e-7);
}

TEST_CASE("a0 and the bump profile constants") {
  const FamilyPtr F = family(cat_const(), 256, 2);
  const double ts = F->tau_star();
  const double a0 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double z) { return smooth::plateau(z / ts); }, -1.5 * ts, 1.5 * ts, 10, 1e-14);
  CHECK(std::abs(F->a0() - a0) < 1e-12);
  CHECK(F->h0_sup() > 1.0);
  CHECK(F->h0_sup() < 1.5);
  CHECK(F->amplitude() == doctest::Approx(std::pow(256.0, -1.5)).epsilon(1e-14));
  CHECK(F->analytic_coefficient(5) == 1.0);
  // small b: transverse scale capped, amplitude below b^{-1-1/R}
  const FamilyPtr G = family(cat_const(), 32, 14);
  CHECK(G->count() == 2);
  CHECK(G->beta_y() == 16.0);
  CHECK(G->amplitude() <= std::pow(32.0, -1.0 - 1.0 / 14));
}

TEST_CASE("gradient matches finite differences") {
  const FlowModel m = cat_cos();
  const FamilyPtr F = family(m, 256, 2);
  const BumpTerm term(F, unit_t(*F, 7, 1.0));
  int hit = 0;
  for (int i = 0; i < 60; ++i) {
    const double x = F->s(7) + (rng::uniform(3, i, 0) - 0.5) * 2.8 / F->beta();
    const double y = (rng::uniform(3, i, 1) - 0.5) * 2.8 / F->beta_y();
    const double z = 4 * F->tau_star() + (rng::uniform(3, i, 2) - 0.5) * 2.8 * F->tau_star();
    const Point3 q = F->chart_point(x, y, z);
    const Vec3 g = term.gradient(q);
    if (g.norm() == 0) continue;
    ++hit;
    const double h = 1e-7;
    for (int d = 0; d < 3; ++d) {
      Point3 a = q, b = q;
      a[d] += h;
      b[d] -= h;
      const double fd = (term.value(a) - term.value(b)) / (2 * h);
      CHECK(std::abs(fd - g[d]) < 1e-6 * (1.0 + g.norm()));
    }
  }
  CHECK(hit > 20);
}

TEST_CASE("zero deformation leaves the flow unchanged") {
  for (const FlowModel& m : {cat_cos(), cat_cos_tc()}) {
    const FamilyPtr F = family(m, 256, 2);
    const FlowModel m0 = bump_timechange(F, std::vector<double>(F->count(), 0.0));
    double worst = 0;
    for (const Point3& p : random_points(m, 50, 17))
      for (double t : {0.5, 3.0, -2.0}) worst = std::max(worst, (flow_map(m0, p, t) - flow_map(m, p, t)).norm());
    CHECK(worst < 1e-12);
    // tiny deformation through the time-change machinery stays continuous
    const FlowModel me = bump_timechange(F, std::vector<double>(F->count(), 1e-12));
    double eps = 0;
    for (const Point3& p : random_points(m, 20, 18)) eps = std::max(eps, (flow_map(me, p, 2.0) - flow_map(m, p, 2.0)).norm());
    CHECK(eps < 1e-9);
  }
}

TEST_CASE("sup norm of the deformation") {
  const FlowModel m = cat_cos();
  const FamilyPtr F = family(m, 256, 2);
  std::vector<double> t(F->count());
  for (int j = 0; j < F->count(); ++j) t[j] = 4.0 * (rng::uniform(5, j, 0) * 2 - 1);
  const FlowModel mt = bump_timechange(F, t);
  double tsum = 0;
  for (double v : t) tsum += std::abs(v);
  double sup = 0;
  // dense: random points plus points concentrated on the supports
  for (const Point3& p : random_points(m, 20000, 23)) sup = std::max(sup, std::abs(mt.phi(p) - m.phi(p)));
  for (int i = 0; i < 20000; ++i) {
    const int j = 1 + i % F->count();
    const Point3 q = F->chart_point(F->s(j) + (rng::uniform(9, i, 0) - 0.5) * 3 / F->beta(),
                                    (rng::uniform(9, i, 1) - 0.5) * 3 / F->beta_y(),
                                    4 * F->tau_star() + (rng::uniform(9, i, 2) - 0.5) * 3 * F->tau_star());
    sup = std::max(sup, std::abs(mt.phi(q) - m.phi(q)));
  }
  const double C = F->h0_sup() * tsum * F->multiplicity();
  CHECK(sup > 0.2 * C * std::pow(256.0, -1.5) / F->count());
  CHECK(sup <= C * std::pow(256.0, -1.5));
  // a single bump is bounded by the profile constant alone
  double one = 0;
  for (int i = 0; i < 4000; ++i) {
    const Point3 q = F->chart_point(F->s(5) + (rng::uniform(2, i, 0) - 0.5) * 3 / F->beta(),
                                    (rng::uniform(2, i, 1) - 0.5) * 3 / F->beta_y(), 4 * F->tau_star());
    one = std::max(one, std::abs(F->bump_value(5, q)));
  }
  CHECK(one <= F->h0_sup() * std::pow(256.0, -1.5) * (1 + 1e-12));
  CHECK(one >= 0.99 * F->h0_sup() * std::pow(256.0, -1.5));
  CHECK_THROWS_AS(bump_timechange(F, std::vector<double>(F->count(), 4.5)), Error);
}

TEST_CASE("supports two apart are disjoint") {
  const FamilyPtr F = family(cat_cos(), 256, 2);
  for (int i = 0; i < 20000; ++i) {
    const int j = 1 + i % (F->count() - 2);
    const Point3 q = F->chart_point(F->s(j) + (rng::uniform(4, i, 0) - 0.5) * 3 / F->beta(),
                                    (rng::uniform(4, i, 1) - 0.5) * 3 / F->beta_y(),
                                    4 * F->tau_star() + (rng::uniform(4, i, 2) - 0.5) * 3 * F->tau_star());
    if (F->bump_value(j, q) == 0.0) continue;
    for (int k = j + 2; k <= F->count(); ++k) REQUIRE(F->bump_value(k, q) == 0.0);
  }
}

TEST_CASE("orbits are preserved") {
  const FlowModel m = cat_cos();
  const FamilyPtr F = family(m, 256, 2);
  std::vector<double> t(F->count(), 0.0);
  for (int j = 0; j < F->count(); ++j) t[j] = (j % 2 ? 3.0 : -2.5);
  const FlowModel mt = bump_timechange(F, t);
  double worst = 0, shift = 0;
  for (int i = 0; i < 20; ++i) {
    // start just below the supports so the orbit crosses them
    const int j = 1 + i % F->count();
    const Point3 p = F->chart_point(F->s(j) + 0.3 / F->beta(), 0.4 / F->beta_y(), 1.5 * F->tau_star());
    for (double T : {0.6, 2.5}) {
      const Point3 q = flow_map(mt, p, T);
      auto dist = [&](double s) { return point_distance(m, flow_map(m, p, s), q); };
      double sig = boost::math::tools::brent_find_minima(dist, T - 0.05, T + 0.05, 50).first;
      // polish along the fiber: unit speed without phi_0
      for (int it = 0; it < 3; ++it) {
        const Point3 ps = flow_map(m, p, sig);
        if ((ps.head<2>() - q.head<2>()).norm() < 1e-6) sig += q.z() - ps.z();
      }
      worst = std::max(worst, dist(sig));
      shift = std::max(shift, std::abs(sig - T));
    }
  }
  CHECK(worst < 1e-8);
  CHECK(shift > 1e-6);  // the time change really moved points along their orbits
}

TEST_CASE("derivative scaling b^{(k-1)/R - 1}") {
  const FlowModel m = cat_cos();
  const int R = 2;
  std::vector<std::array<double, 3>> ratio;
  for (double b : {256.0, 1024.0, 4096.0}) {
    const FamilyPtr F = family(m, b, R);
    const int j = (F->count() + 1) / 2;
    const Vec2 dir = m.e_stable;
    std::array<double, 3> mx{0, 0, 0};
    for (int i = 0; i <= 300; ++i) {
      const double y = (-1.6 + 3.2 * i / 300) / F->beta_y();
      const Point3 q = F->chart_point(F->s(j), y, 4 * F->tau_star());
      for (int k = 0; k < 3; ++k)
        mx[k] = std::max(mx[k], std::abs(central_diff(*F, j, q, dir, k, 0.01 / F->beta_y())));
    }
    std::array<double, 3> r;
    for (int k = 0; k < 3; ++k) r[k] = mx[k] / std::pow(b, (k - 1.0) / R - 1.0);
    ratio.push_back(r);
  }
  for (int k = 0; k < 3; ++k) {
    double lo = 1e300, hi = 0;
    for (const auto& r : ratio) {
      lo = std::min(lo, r[k]);
      hi = std::max(hi, r[k]);
    }
    INFO("k = " << k << " ratios in [" << lo << ", " << hi << "]");
    CHECK(hi / lo <= 4.0);
    CHECK(lo > 0.0);
  }
}

TEST_CASE("template response: locality, linearity, slope") {
  const FlowModel m = cat_cos();
  const FamilyPtr F = family(m, 256, 2);
  const int j = 8;
  REQUIRE(F->admissible(j));
  const TemplateResponse r = template_response(F, j, {-1.0, -0.5, 0.0, 0.5, 1.0});
  double zero = 0;
  for (double d : r.delta[2]) zero = std::max(zero, std::abs(d));
  CHECK(zero < 1e-10);
  INFO("ratio " << r.ratio << " locality " << r.locality << " linearity " << r.linearity);
  CHECK(r.locality >= 5.0);
  CHECK(r.linearity < 0.2);
  CHECK(r.ratio > 0.5);
  CHECK(r.ratio < 2.0);
}

TEST_CASE("template response slope at b = 32, R = 14") {
  const FlowModel m = cat_cos();
  const FamilyPtr F = family(m, 32, 14);
  ResponseOptions o;
  o.grid = 65;
  for (int j = 1; j <= F->count(); ++j) {
    const TemplateResponse r = template_response(F, j, {-1.0, 0.0, 1.0}, o);
    INFO("j = " << j << " ratio " << r.ratio);
    CHECK(r.analytic == 1.0);
    CHECK(r.ratio > 0.5);
    CHECK(r.ratio < 2.0);
  }
}

TEST_CASE("analytic coefficient under a time change") {
  const FlowModel m = cat_cos_tc();
  const FamilyPtr F = family(m, 256, 2);
  for (int j : {3, 8, 12}) {
    const double a = F->analytic_coefficient(j);
    // (1 + phi0)^{-2} with |phi0| <= sup bound
    const double s = m.phi_sup;
    CHECK(a >= 1.0 / ((1 + s) * (1 + s)) - 1e-12);
    CHECK(a <= 1.0 / ((1 - s) * (1 - s)) + 1e-12);
  }
}

}  // TEST_SUITE
