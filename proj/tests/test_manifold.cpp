#include "fixtures.hpp"

#include "anosov/manifold.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace anosov;
using namespace fixtures;

TEST_SUITE("manifold") {

TEST_CASE("make_suspension eigen-data and validation") {
  const FlowModel m = cat_const();
  CHECK(m.lambda_u == doctest::Approx(2.6180339887).epsilon(1e-10));
  CHECK(m.e_unstable.y() / m.e_unstable.x() == doctest::Approx((std::sqrt(5.0) - 1) / 2).epsilon(1e-12));
  CHECK(m.e_stable.y() / m.e_stable.x() == doctest::Approx(-(std::sqrt(5.0) + 1) / 2).epsilon(1e-12));

  const FlowModel c = cat_cos();
  CHECK(c.r_min == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(c.r_max == doctest::Approx(1.1).epsilon(1e-12));

  Mat2i bad;
  bad << 1, 1, 1, 0;  // det -1
  CHECK_THROWS_WITH_AS(make_suspension(bad, const_roof()), doctest::Contains("determinant"), Error);
  Mat2i elliptic;
  elliptic << 1, 1, -1, 0;  // trace 1, det 1
  CHECK_THROWS_WITH_AS(make_suspension(elliptic, const_roof()), doctest::Contains("non_hyperbolic"), Error);
  CHECK_THROWS_WITH_AS(make_suspension(cat(), TrigPoly{0.5, {{1, 0, 0.6, 0.0}}}), doctest::Contains("nonpositive_roof"),
                       Error);
  auto big = std::make_shared<TrigProfileTerm>(TrigPoly{0.0, {{1, 0, 1.2, 0.0}}}, 0.2, 0.6);
  CHECK_THROWS_WITH_AS(make_suspension(cat(), const_roof(), {big}), doctest::Contains("timechange_bound"), Error);
  auto edge = std::make_shared<TrigProfileTerm>(TrigPoly{0.0, {{1, 0, 0.2, 0.0}}}, 0.0, 0.6);
  CHECK_THROWS_WITH_AS(make_suspension(cat(), const_roof(), {edge}), doctest::Contains("timechange_support"), Error);
  auto high = std::make_shared<TrigProfileTerm>(TrigPoly{0.0, {{1, 0, 0.2, 0.0}}}, 0.3, 0.95);
  CHECK_THROWS_WITH_AS(make_suspension(cat(), cos_roof(0.1), {high}), doctest::Contains("timechange_support"), Error);
}

TEST_CASE("flow_map examples") {
  const FlowModel m = cat_const();
  const Point3 a = flow_map(m, Point3(0.2, 0.3, 0.1), 0.5);
  CHECK((a - Point3(0.2, 0.3, 0.6)).norm() < 1e-14);
  const Point3 b = flow_map(m, Point3(0.2, 0.3, 0.0), 1.0);
  CHECK((b - Point3(0.7, 0.5, 0.0)).norm() < 1e-14);
  for (const auto& model : all_models())
    for (const auto& p : random_points(model, 20, 3)) CHECK((flow_map(model, p, 0.0) - p).norm() == 0.0);
}

TEST_CASE("flow_jacobian examples") {
  const FlowModel m = cat_const();
  Mat3 expect;
  expect << 2, 1, 0, 1, 1, 0, 0, 0, 1;
  CHECK((flow_jacobian(m, Point3(0.2, 0.3, 0.0), 1.0) - expect).norm() < 1e-14);
  for (const auto& model : all_models())
    for (const auto& p : random_points(model, 10, 5)) CHECK((flow_jacobian(model, p, 0.0) - Mat3::Identity()).norm() == 0.0);
  for (const auto& model : {cat_const(), cat_cos()})
    for (const auto& p : random_points(model, 50, 7)) {
      const double t = -5.0 + 10.0 * rng::uniform(11, std::uint64_t(p.x() * 1e9));
      CHECK(std::abs(flow_jacobian(model, p, t).determinant() - 1.0) < 1e-10);
    }
}

TEST_CASE("generator") {
  const FlowModel m = cat_const();
  CHECK((generator(m, Point3(0.1, 0.2, 0.3)) - Vec3(0, 0, 1)).norm() == 0.0);
  // a point where phi = 0.3: constant mode 0.3 at the profile peak
  auto tc = std::make_shared<TrigProfileTerm>(TrigPoly{0.3, {}}, 0.2, 0.6);
  const FlowModel c = make_suspension(cat(), const_roof(), {tc});
  CHECK(generator(c, Point3(0.4, 0.7, 0.4)).z() == doctest::Approx(1.3).epsilon(1e-14));
  // central difference of the flow at t = 0
  for (const auto& model : all_models())
    for (const auto& p0 : random_points(model, 20, 13)) {
      Point3 p = p0;
      p.z() = 0.2 + 0.5 * p0.z() / model.r(p0.head<2>());  // stay away from the gluing
      double prev = 0.0;
      for (double h : {1e-3, 5e-4}) {
        const Vec3 fd = (flow_map(model, p, h) - flow_map(model, p, -h)) / (2 * h);
        const double err = (fd - generator(model, p)).norm();
        if (prev > 1e-9) CHECK(err < prev / 3.0);
        CHECK(err < 1e-4);
        prev = err;
      }
    }
}

TEST_CASE("group law and cocycle") {
  for (const auto& model : all_models()) {
    const auto pts = random_points(model, 100, 17);
    double worst_g = 0.0, worst_c = 0.0, worst_det = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double t = -10.0 + 20.0 * rng::uniform(19, i, 0);
      const double s = -10.0 + 20.0 * rng::uniform(19, i, 1);
      const Point3 a = flow_map(model, pts[i], t + s);
      const Point3 b = flow_map(model, flow_map(model, pts[i], t), s);
      worst_g = std::max(worst_g, point_distance(model, a, b));

      const double t2 = t / 2, s2 = s / 2;
      const Mat3 J = flow_jacobian(model, pts[i], t2 + s2);
      const Point3 mid = flow_map(model, pts[i], t2);
      const Mat3 K = flow_jacobian(model, mid, s2) * flow_jacobian(model, pts[i], t2);
      worst_c = std::max(worst_c, (J - K).norm() / J.norm());

      const double t3 = t / 2;
      const Mat3 D = flow_jacobian(model, pts[i], t3);
      // invariance of (1+phi)^{-1} dx dy dz
      const double expect = (1 + model.phi(flow_map(model, pts[i], t3))) / (1 + model.phi(pts[i]));
      worst_det = std::max(worst_det, std::abs(D.determinant() - expect));
    }
    CHECK(worst_g < 1e-9);
    CHECK(worst_c < 1e-8);
    CHECK(worst_det < 1e-8);
  }
}

TEST_CASE("flow_jacobian against central differences with h sweep") {
  for (const auto& model : all_models()) {
    int checked = 0;
    for (const auto& p0 : random_points(model, 100, 23)) {
      Point3 p = p0;
      const double r0 = model.r(p.head<2>());
      if (p.z() < 0.05 * r0 || p.z() > 0.95 * r0) continue;
      const double t = 1.0 + 2.0 * p0.x();
      const Point3 q = flow_map(model, p, t);
      const double rq = model.r(q.head<2>());
      if (q.z() < 0.05 * rq || q.z() > 0.95 * rq) continue;
      const Mat3 J = flow_jacobian(model, p, t);
      std::array<double, 2> errs{};
      int k = 0;
      for (double h : {1e-4, 5e-5}) {
        Mat3 F;
        for (int c = 0; c < 3; ++c) {
          Vec3 e = Vec3::Zero();
          e(c) = h;
          Vec3 d = flow_map(model, p + e, t) - flow_map(model, p - e, t);
          d.x() -= std::round(d.x());
          d.y() -= std::round(d.y());
          F.col(c) = d / (2 * h);
        }
        errs[k++] = (F - J).norm() / J.norm();
      }
      CHECK(errs[0] < 1e-5);
      if (errs[0] > 1e-9) CHECK(errs[1] < errs[0] / 3.0);
      ++checked;
    }
    CHECK(checked > 50);
  }
}

TEST_CASE("metric is continuous across the gluing") {
  const FlowModel m = cat_cos();
  for (const auto& p0 : random_points(m, 20, 29)) {
    const Vec2 w = p0.head<2>();
    const double r = m.r(w);
    const Mat3 top = metric(m, Point3(w.x(), w.y(), r * (1 - 1e-12)));
    const Vec2 wb = wrap(m.A * w);
    const Mat3 bottom = metric(m, Point3(wb.x(), wb.y(), 0.0));
    const Mat3 D = glue_jacobian(m, w);
    CHECK((top - D.transpose() * bottom * D).norm() < 1e-9);
  }
}

TEST_CASE("volume sampler") {
  const FlowModel m = cat_const();
  const auto pts = volume_sampler(m, 42, 1000000);
  double mean = 0.0;
  for (const auto& p : pts) mean += p.z();
  mean /= pts.size();
  CHECK(std::abs(mean - 0.5) < 0.002);
  const auto again = volume_sampler(m, 42, 1000);
  for (int i = 0; i < 1000; ++i) CHECK((again[i] - pts[i]).norm() == 0.0);

  // pushforward: histograms of the sample and of its image under f^0.7
  const FlowModel c = cat_cos();
  const std::size_t n = 2000000;
  std::vector<double> h0(1000, 0.0), h1(1000, 0.0);
  auto cell = [&](const Point3& p) {
    const int i = std::min(9, int(p.x() * 10)), j = std::min(9, int(p.y() * 10));
    const int k = std::min(9, int(p.z() / c.r(p.head<2>()) * 10));
    return (i * 10 + j) * 10 + k;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 p = sample_volume(c, 7, i);
    h0[cell(p)] += 1.0 / n;
    h1[cell(flow_map(c, p, 0.7))] += 1.0 / n;
  }
  double tv = 0.0;
  for (int i = 0; i < 1000; ++i) tv += 0.5 * std::abs(h0[i] - h1[i]);
  CHECK(tv < 0.02);
}

}  // TEST_SUITE

TEST_SUITE("manifold") {

TEST_CASE("fiber quadrature resolution") {
  // default panel grid against an 8x finer grid
  ModelOptions fine;
  fine.fiber_panels = 64;
  for (const auto& roof : {const_roof(), cos_roof(0.1)}) {
    const FlowModel a = make_suspension(cat(), roof, {sample_timechange()});
    const FlowModel b = make_suspension(cat(), roof, {sample_timechange()}, fine);
    double worst = 0.0;
    for (const auto& p : random_points(a, 200, 31)) {
      const double top = a.r(p.head<2>());
      worst = std::max(worst, std::abs(fiber_time(a, p.head<2>(), 0.0, top) - fiber_time(b, p.head<2>(), 0.0, top)));
      worst = std::max(worst, std::abs(fiber_time(a, p.head<2>(), 0.0, p.z()) - fiber_time(b, p.head<2>(), 0.0, p.z())));
    }
    CHECK(worst < 1e-12);
  }
}

}
