#include "fixtures.hpp"

#include "anosov/sections.hpp"

#include <doctest.h>

#include <cmath>

using namespace anosov;
using namespace fixtures;

namespace {

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

}  // namespace

TEST_SUITE("sections") {

TEST_CASE("constant roof: flat frame and vanishing template") {
  const FlowModel m = cat_const();
  const Template T = s_template(m, Point3(0.3, 0.6, 0.2));
  REQUIRE(T.values.size() == 513);
  CHECK(sup_abs(T.values) < 1e-6);
  const auto& S = T.samples;
  for (std::size_t j = 0; j < S.perp.size(); ++j) {
    CHECK((S.perp[j] - S.perp[0]).norm() < 1e-12);
    CHECK(std::abs(S.perp[j].dot(generator(m, S.curve.points[j]))) < 1e-14);
    CHECK(std::abs(S.perp[j].dot(S.curve.tangents[j])) < 1e-14);
  }
  // the constant E_0^* section is dz
  for (const auto& g : S.straight) CHECK((g - Covector(0, 0, 1)).norm() < 1e-9);
}

TEST_CASE("node identities along a template curve") {
  for (const auto& m : {cat_cos(), cat_cos_tc()}) {
    SectionOptions o;
    o.grid = 33;
    const Template T = s_template(m, Point3(0.71, 0.13, 0.35), o);
    const auto& S = T.samples;
    for (std::size_t j = 0; j < S.perp.size(); ++j) {
      const Point3& q = S.curve.points[j];
      const Vec3 v = generator(m, q);
      const Vec3 w = S.curve.tangents[j];
      CHECK(std::abs(S.perp[j].dot(v)) < 1e-12);
      CHECK(std::abs(S.perp[j].dot(w)) < 1e-12);
      // determinant oracle for the volume contraction
      const double mu = volume_form(m, q, v, w / S.curve.factor[j], S.e_s[j]);
      CHECK(std::abs(S.perp[j].dot(S.e_s[j]) - T.sign * mu) < 1e-9);
      for (const Covector* g : {&S.ref[j], &S.stable[j], &S.straight[j]}) {
        CHECK(std::abs(g->dot(w)) < 1e-9);
        CHECK(std::abs(g->dot(v) - 1.0) < 1e-9);
      }
      // gamma^s - gamma^ref is parallel to perp
      const Covector d = S.stable[j] - S.ref[j];
      const Covector par = d.dot(S.perp[j]) / S.perp[j].squaredNorm() * S.perp[j];
      CHECK((d - par).norm() < 1e-9 * std::max(1.0, d.norm()));
      CHECK(std::abs(d.dot(S.e_s[j]) + S.ref[j].dot(S.e_s[j])) < 1e-12);
    }
    CHECK(S.perp[16].dot(S.e_s[16]) > 0.0);
  }
}

TEST_CASE("template normalization and amplitude response") {
  const Point3 p(0.3, 0.6, 0.2);
  const Template a = s_template(cat_cos(0.05), p);
  const Template b = s_template(cat_cos(0.1), p);
  CHECK(a.values.front() == 0.0);
  CHECK(a.values.back() == 0.0);
  CHECK(b.values.front() == 0.0);
  CHECK(b.values.back() == 0.0);
  // first-order response in the roof amplitude
  const double ratio = sup_abs(b.values) / sup_abs(a.values);
  CHECK(ratio > 2.0 * 0.85);
  CHECK(ratio < 2.0 * 1.15);
  CHECK(std::isfinite(b.lipschitz));
  CHECK(b.lipschitz > 0.0);
}

TEST_CASE("reference independence and truncation stability") {
  const FlowModel m = cat_cos();
  for (const Point3& p : {Point3(0.3, 0.6, 0.2), Point3(0.71, 0.13, 0.8)}) {
    SectionOptions o;
    const Template a = s_template(m, p, o);
    o.reference = Reference::transverse;
    const Template b = s_template(m, p, o);
    CHECK(sup_diff(a.values, b.values) < 1e-7);

    SectionOptions t;
    t.max_terms = a.terms + 5;
    const Template c = s_template(m, p, t);
    CHECK(sup_diff(a.values, c.values) < 1e-8);
    CHECK(a.tail_bound < 1e-8);
  }
}

TEST_CASE("series partial sums decay geometrically") {
  const FlowModel m = cat_cos();
  const InvariantCurve c = invariant_curve(m, Point3(0.45, 0.2, 0.5), CurveKind::unstable, 1.0, 1.0 / 32);
  std::vector<std::vector<double>> partial;
  for (int N = 1; N <= 13; ++N) {
    SectionOptions o;
    o.max_terms = N;
    partial.push_back(straight_series(m, c, o).psi);
  }
  // blocks of three terms; second differences remove the affine freedom of the first term
  auto block = [&](int k) {
    std::vector<double> d(c.tau.size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = partial[3 * k + 3][j] - partial[3 * k][j];
    double s = 0.0;
    for (std::size_t j = 1; j + 1 < d.size(); ++j) s = std::max(s, std::abs(d[j + 1] - 2 * d[j] + d[j - 1]));
    return s;
  };
  for (int k = 0; k + 1 < 4; ++k) CHECK(block(k + 1) <= 0.5 * block(k));
}

TEST_CASE("straightness survives backward pullback") {
  const FlowModel m = cat_cos();
  for (const Point3& p : {Point3(0.3, 0.6, 0.2), Point3(0.71, 0.13, 0.8)}) {
    const Straightness s = straightness_test(m, p, {1.0, 2.0, 4.0});
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      CHECK(s.kappa[i] <= 2.0 * s.kappa0);
    }
    // a generic section bends without bound
    CHECK(s.kappa_reference.back() > 10.0 * s.kappa0);
  }
}

TEST_CASE("miniature residual") {
  const Point3 q(0.3, 0.6, 0.2);
  const Miniature one = miniature_residual(cat_cos(), q, 1.0);
  CHECK(one.residual == 0.0);
  CHECK(one.alpha == 0.0);
  CHECK(one.beta == 0.0);
  CHECK(miniature_residual(cat_const(), q, 0.25).residual < 1e-6);
  const Miniature r = miniature_residual(cat_cos(), q, 0.25);
  CHECK(r.residual < 0.05);
  CHECK(r.t > 0.0);
  CHECK(expansion_factor(cat_cos(), q, r.t) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK_THROWS_AS(miniature_residual(cat_cos(), q, 1.5), Error);
}

}
