#include "fixtures.hpp"

#include "anosov/splitting.hpp"

#include <doctest.h>

#include <cmath>

using namespace anosov;
using namespace fixtures;

TEST_SUITE("splitting") {

TEST_CASE("constant roof: cat-map eigenvectors everywhere") {
  const FlowModel m = cat_const();
  const double g = (std::sqrt(5.0) - 1) / 2;
  const Vec3 eu = Vec3(1, g, 0).normalized();
  const Vec3 es = Vec3(1, -1 / g, 0).normalized();
  double worst = 0.0;
  const auto pts = random_points(m, 1000, 21);
  for (const auto& p : pts) {
    worst = std::max(worst, line_angle(unstable_direction(m, p), eu));
    worst = std::max(worst, line_angle(stable_direction(m, p), es));
  }
  CHECK(worst < 1e-10);

  const Frame f = splitting_at(m, pts[0]);
  CHECK(f.e_u.x() > 0);
  CHECK(f.e_s.x() > 0);
  CHECK((f.dual_0 - Vec3(0, 0, 1)).norm() < 1e-12);
  CHECK(f.residual < 1e-11);
  CHECK(f.condition < 10.0);
}

TEST_CASE("dual frame relations") {
  for (const auto& m : all_models())
    for (const auto& p : random_points(m, 10, 4)) {
      const Frame f = splitting_at(m, p);
      const Vec3 cols[3] = {f.v, f.e_s, f.e_u};
      const Covector rows[3] = {f.dual_0, f.dual_s, f.dual_u};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(rows[i].dot(cols[j]) - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("invariance under the tangent flow") {
  // oracle: push e_u(p), e_s(p) forward with the flow Jacobian and recompute at f^t p
  for (const auto& m : {cat_cos(), cat_cos_tc()}) {
    double worst = 0.0;
    for (const auto& p : random_points(m, 100, 8)) {
      const Frame f = splitting_at(m, p);
      for (double t : {-2.0, -0.7, 1.3, 2.0}) {
        Mat3 J;
        const Point3 q = flow_with_jacobian(m, p, t, J);
        worst = std::max(worst, line_angle(J * f.e_u, unstable_direction(m, q)));
        worst = std::max(worst, line_angle(J * f.e_s, stable_direction(m, q)));
      }
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("time reversal duality") {
  for (const auto& m : all_models()) {
    const FlowModel rev = time_reversed(m);
    double worst = 0.0;
    for (const auto& p : random_points(m, 30, 9)) {
      worst = std::max(worst, line_angle(stable_direction(m, p), unstable_direction(rev, p)));
      worst = std::max(worst, line_angle(unstable_direction(m, p), stable_direction(rev, p)));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("expansion factor") {
  const FlowModel m = cat_const();
  const Point3 p(0.3, 0.4, 0.6);
  CHECK(expansion_factor(m, p, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(expansion_factor(m, p, 1.0) == doctest::Approx(2.6180339887).epsilon(1e-10));
  CHECK(expansion_factor(m, Point3(0.3, 0.4, 0.05), 0.25) == doctest::Approx(1.0).epsilon(1e-12));

  for (const auto& model : all_models())
    for (const auto& q : random_points(model, 20, 10)) {
      const double t = 1.7, s = -0.9;
      const double whole = expansion_factor(model, q, t + s);
      const double first = expansion_factor(model, q, t);
      const double second = expansion_factor(model, flow_map(model, q, t), s);
      CHECK(std::abs(whole / (first * second) - 1.0) < 1e-8);
    }
}

TEST_CASE("non-convergence is reported") {
  SplitOptions o;
  o.tol = 1e-12;
  o.horizon = 2.0;
  o.max_horizon = 3.0;
  CHECK_THROWS_WITH_AS(unstable_direction(cat_cos(), Point3(0.1, 0.2, 0.3), o), doctest::Contains("non_convergence"),
                       Error);
}

}
