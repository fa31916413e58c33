#include "fixtures.hpp"

#include "anosov/oscint.hpp"
#include "anosov/sections.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <doctest.h>

#include <cmath>

using namespace anosov;
using namespace fixtures;

namespace {

double square(double t) { return t * t; }

// |int_{-1}^{1} exp(i b (t^2 + alpha t))| = |G(1 + alpha/2) - G(-1 + alpha/2)|, G(x) = int_0^x exp(i b u^2).
// Brute-force sup over alpha: G tabulated by cumulative Gauss-Legendre, then a ternary search around the best node.
struct FresnelSup {
  double b, x0, h;
  std::vector<cplx> G;

  FresnelSup(double b_, double half_width, double h_) : b(b_), x0(-half_width), h(h_) {
    const int n = int(std::ceil(2 * half_width / h));
    G.resize(n + 1);
    G[0] = 0.0;
    for (int k = 0; k < n; ++k) G[k + 1] = G[k] + piece(x0 + k * h, x0 + (k + 1) * h);
  }
  cplx piece(double a, double c) const {
    return boost::math::quadrature::gauss<double, 10>::integrate([&](double u) { return std::polar(1.0, b * u * u); }, a, c);
  }
  // G(x) - G(x0)
  cplx at(double x) const {
    const int k = std::clamp(int(std::floor((x - x0) / h)), 0, int(G.size()) - 2);
    return G[k] + piece(x0 + k * h, x);
  }
  // value at alpha with lower end x = -1 + alpha/2
  double value(double x) const { return std::abs(at(x + 2.0) - at(x)); }

  std::pair<double, double> sup(double alpha_lo, double alpha_hi) const {
    const int k_lo = int(std::ceil((-1 + alpha_lo / 2 - x0) / h));
    const int k_hi = int(std::floor((-1 + alpha_hi / 2 - x0) / h));
    const int shift = int(std::lround(2.0 / h));
    int best = k_lo;
    for (int k = k_lo; k <= k_hi; ++k) {
      if (std::abs(G[k + shift] - G[k]) > std::abs(G[best + shift] - G[best])) best = k;
    }
    double a = x0 + (best - 1) * h, c = x0 + (best + 1) * h;
    for (int it = 0; it < 100; ++it) {
      const double m1 = a + (c - a) / 3, m2 = c - (c - a) / 3;
      if (value(m1) < value(m2)) a = m1;
      else c = m2;
    }
    const double x = 0.5 * (a + c);
    return {value(x), 2.0 * (x + 1.0)};
  }
};

double rel(cplx a, cplx b) { return std::abs(a - b); }

}  // namespace

TEST_SUITE("oscint") {

TEST_CASE("trivial phases") {
  const Profile zero([](double) { return 0.0; }, 513);
  CHECK(std::abs(osc_integral(zero, M_PI, 1.0)) < 1e-10);
  for (double b : {1.0, 37.0, 1000.0}) {
    const cplx v = osc_integral(zero, b, 0.0);
    CHECK(std::abs(v - 2.0) < 1e-13);
  }
  // linear phase, closed form 2 sin(b a)/(b a)
  for (double a : {0.3, 2.0, 7.5}) {
    const double b = 100.0;
    CHECK(std::abs(osc_integral(zero, b, a) - 2.0 * std::sin(b * a) / (b * a)) < 1e-12);
  }
}

TEST_CASE("tau^2 against the brute-force oracle") {
  const Profile analytic(square, 513);
  std::vector<double> tau = analytic.tau(), v = analytic.values();
  const Profile sampled(tau, v);
  for (double b : {100.0, 1000.0}) {
    for (double alpha : {0.0, 0.37, -1.9, 25.0}) {
      const cplx ref = osc_integral_reference(square, b, alpha, 5120 * (b > 500 ? 8 : 1));
      CHECK(rel(osc_integral(analytic, b, alpha), ref) < 1e-7);
      CHECK(rel(osc_integral(sampled, b, alpha), ref) < 1e-7);
    }
  }
}

TEST_CASE("sampled templates against a 10x reference") {
  const FlowModel m = cat_cos();
  const Template T = s_template(m, Point3(0.3, 0.6, 0.2));
  const Profile P(T.tau, T.values);
  auto f = [&](double t) { return P(t); };
  for (double b : {10.0, 100.0, 1000.0}) {
    const int m_ref = 10 * int(std::ceil(std::max(1.0, b * P.max_step() + 1)));
    for (double alpha : {0.0, -0.4, 3.0}) {
      const cplx ref = osc_integral_reference(f, b, alpha, 512 * m_ref);
      const cplx v = osc_integral(P, b, alpha);
      CHECK(rel(v, ref) < 1e-7);
      CHECK(std::abs(v) <= 2.0);
    }
  }
}

TEST_CASE("conjugation symmetry and resolution errors") {
  const Profile P([](double t) { return 0.3 * std::sin(3 * t) + 0.1 * t * t * t; }, 257);
  for (double b : {10.0, 300.0}) {
    for (double alpha : {-2.0, 0.1, 5.0}) {
      // alpha is scaled by b in the phase, so flipping b alone conjugates
      const cplx a = osc_integral(P, b, alpha), c = osc_integral(P, -b, alpha);
      CHECK(std::abs(a - std::conj(c)) < 1e-12);
    }
  }
  OscOptions strict;
  strict.refine = false;
  CHECK_THROWS_AS(osc_integral(P, 1000.0, 0.0, strict), Error);
  OscOptions capped;
  capped.max_refine = 2;
  CHECK_THROWS_AS(osc_integral(P, 1000.0, 0.0, capped), Error);
  CHECK_NOTHROW(osc_integral(P, 1000.0, 0.0));
}

TEST_CASE("ni_margin: constant template fails NI") {
  const Profile zero([](double) { return 0.0; }, 513);
  for (double b : {10.0, 100.0, 1000.0}) {
    const OscIntegralReport r = ni_margin(zero, b);
    CHECK(std::abs(r.value - 2.0) < 1e-3);
    CHECK(std::abs(r.alpha_star) < 1e-3);
    CHECK_FALSE(r.passes_ni);
    CHECK(r.outside_bound < r.value);
  }
}

TEST_CASE("ni_margin: tau^2 against the brute-force sup") {
  const Profile P(square, 513);
  double prev = 3.0;
  for (double b : {100.0, 1000.0}) {
    const OscIntegralReport r = ni_margin(P, b);
    const FresnelSup oracle(b, 4.0, 0.01 / b);
    const auto [v, a] = oracle.sup(-3.0, 3.0);
    CHECK(std::abs(r.value - v) < 1e-6);
    CHECK(r.value < prev);
    CHECK(r.outside_bound < r.value);
    CHECK(std::abs(r.alpha_star) <= b);
    prev = r.value;
    MESSAGE("b=" << b << " value=" << r.value << " oracle=" << v << " alpha*=" << r.alpha_star << " oracle alpha=" << a);
  }
}

TEST_CASE("ni_margin: affine invariance") {
  const Profile P([](double t) { return t * t + 0.2 * std::sin(2.5 * t); }, 513);
  for (double b : {30.0, 200.0}) {
    const OscIntegralReport r0 = ni_margin(P, b);
    const OscIntegralReport r1 = ni_margin(P.shifted(0.7, 0.3), b);
    CHECK(std::abs(r0.value - r1.value) < 1e-9);
    CHECK(std::abs(r0.alpha_star - (r1.alpha_star + 0.3)) < 1e-6);
  }
}

TEST_CASE("reg_ibp identity") {
  const Phase lin{[](double s) { return 10 * s; }, [](double) { return 10.0; }, [](double) { return 0.0; }};
  const Amplitude bump{[](double s) { return std::pow(std::cos(M_PI * s / 2), 2); }, -1.0, 1.0};
  for (double eps : {0.05, 0.025}) {
    const IbpSides r = reg_ibp(lin, bump, eps);
    CHECK(std::abs(r.lhs - r.rhs) < 1e-8);
  }
  const Amplitude zero{[](double) { return 0.0; }, -1.0, 1.0};
  const IbpSides z = reg_ibp(lin, zero, 0.05);
  CHECK(std::abs(z.lhs) == 0.0);
  CHECK(std::abs(z.rhs) == 0.0);

  // theta' = 2(s - 1.5) vanishes 0.5 away from supp g
  const Phase quad{[](double s) { return (s - 1.5) * (s - 1.5); }, [](double s) { return 2 * (s - 1.5); },
                   [](double) { return 2.0; }};
  CHECK_NOTHROW(reg_ibp(quad, bump, 0.05));
  CHECK_THROWS_AS(reg_ibp(quad, bump, 0.6), Error);
  const Amplitude wide{bump.g, -1.0, 2.0};
  CHECK_THROWS_AS(reg_ibp(quad, wide, 0.05), Error);
}

TEST_CASE("reg_ibp on random smooth pairs") {
  const std::uint64_t seed = 20261016;
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
    for (double eps : {0.05, 0.025}) {
      const IbpSides r = reg_ibp(th, g, eps);
      CHECK(std::abs(r.lhs - r.rhs) < 1e-8);
    }
  }
}

TEST_CASE("mollifier") {
  boost::math::quadrature::gauss<double, 30> gl;
  double total = 0.0;
  for (int k = 0; k < 8; ++k) total += gl.integrate(mollifier, -1.0 + k * 0.25, -0.75 + k * 0.25);
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK(mollifier(1.0) == 0.0);
  CHECK(mollifier(-1.5) == 0.0);
  const double h = 1e-5;
  CHECK(std::abs((mollifier(0.3 + h) - mollifier(0.3 - h)) / (2 * h) - mollifier_d1(0.3)) < 1e-8);
}

}  // TEST_SUITE
