#include "fixtures.hpp"

#include "anosov/mixing.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>

using namespace anosov;
using namespace fixtures;

namespace {

ObsTerm fiber_wave(int n = 1) {
  ObsTerm t;
  t.profile = FiberProfile::fourier;
  t.n = n;
  return t;
}

ObsTerm bump_mode(int kx, int ky, cplx c = 1.0) {
  ObsTerm t;
  t.coef = c;
  t.kx = kx;
  t.ky = ky;
  t.profile = FiberProfile::bump;
  return t;
}

double gauss(std::uint64_t seed, std::uint64_t i) {
  const double u1 = 1.0 - rng::uniform(seed, i, 0), u2 = rng::uniform(seed, i, 1);
  return std::sqrt(-2 * std::log(u1)) * std::cos(two_pi * u2);
}

CorrelationSeries synthetic(double amp, double rate, double noise, std::uint64_t seed) {
  CorrelationSeries s;
  s.t = default_time_grid();
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const double c = amp * std::exp(-rate * s.t[k]);
    s.value.push_back(c * (1 + noise * gauss(seed, k)));
    s.stderr_.push_back(noise > 0 ? noise * c : 0.0);
  }
  return s;
}

}  // namespace

TEST_SUITE("mixing") {

TEST_CASE("analytic means and second moments") {
  // r = 1 + 0.1 cos(2 pi x): int r e^{2 pi i x} = 0.05, bump integrates to 1/2, mean roof 1
  const FlowModel m = cat_cos();
  const Observable o = make_observable(m, {bump_mode(1, 0)});
  CHECK(std::abs(o.mean - cplx(0.025, 0.0)) < 1e-14);
  CHECK(std::abs(observable_mean(m, {fiber_wave()})) < 1e-14);
  // int sin^4 = 3/8 per unit fiber length, so E|o|^2 = 3/8 - |mean|^2
  const double exact = 3.0 / 8.0 - 0.025 * 0.025;
  const CorrelationSeries s = correlation_series(m, o, o, {0.0}, 100000, 11);
  CHECK(std::abs(s.value[0].imag()) < 1e-15);
  CHECK(std::abs(s.value[0].real() - exact) < 3 * s.stderr_[0]);
  CHECK_THROWS_AS(make_observable(m, {ObsTerm{1.0, 1, 0, FiberProfile::one, 0}}), Error);
}

TEST_CASE("time-changed mean matches Monte Carlo") {
  const FlowModel m = cat_const_tc();
  const std::vector<ObsTerm> terms{bump_mode(1, 0), bump_mode(0, 1, cplx(0.0, 0.5))};
  const cplx mu = observable_mean(m, terms);
  const Observable raw = make_observable(m, terms, false);
  const Observable one = make_observable(m, {ObsTerm{}}, false);
  const CorrelationSeries s = correlation_series(m, one, raw, {0.0}, 200000, 5);
  CHECK(std::abs(s.value[0] - mu) < 4 * s.stderr_[0]);
  CHECK(std::abs(mu) > 0.01);  // the time change shifts the mean away from 0
}

TEST_CASE("constant roof: pure rotation, no decay") {
  const FlowModel m = cat_const();
  const Observable o = make_observable(m, {fiber_wave()});
  const CorrelationSeries s = correlation_series(m, o, o, default_time_grid(), 20000, 3);
  for (std::size_t k = 0; k < s.t.size(); ++k) CHECK(std::abs(std::abs(s.value[k]) - std::abs(s.value[0])) < 1e-12);
  const DecayFit f = fit_decay(s);
  CHECK_FALSE(f.detected);
  CHECK(f.verdict == "no detectable decay");
}

TEST_CASE("cosine roof decays") {
  const FlowModel m = cat_cos();
  const Observable o = make_observable(m, {fiber_wave()});
  const CorrelationSeries s = correlation_series(m, o, o, default_time_grid(), 20000, 3);
  const DecayFit f = fit_decay(s);
  CHECK(f.detected);
  CHECK(f.rate > 0.05);
  CHECK(f.r2 >= 0.9);
  for (std::size_t k = 0; k < s.t.size(); ++k) CHECK(std::abs(s.value[k]) <= s.a_sup * s.b_sup + 3 * s.stderr_[k]);
}

TEST_CASE("pairing with constants and bilinearity") {
  const FlowModel m = cat_cos_tc();
  const Observable a = make_observable(m, {bump_mode(1, 0), bump_mode(1, 1, cplx(0.3, -0.2))});
  const Observable one = make_observable(m, {ObsTerm{}}, false);
  const std::vector<double> tg{0.0, 1.0, 3.0, 7.0};
  const CorrelationSeries c1 = correlation_series(m, a, one, tg, 50000, 9);
  for (std::size_t k = 0; k < tg.size(); ++k) CHECK(std::abs(c1.value[k]) < 3 * c1.stderr_[k]);

  const Observable b1 = make_observable(m, {fiber_wave()});
  const Observable b2 = make_observable(m, {bump_mode(0, 1)});
  Observable b12 = b1;
  b12.terms.push_back(bump_mode(0, 1, 2.0));
  b12.mean = b1.mean + 2.0 * b2.mean;
  const CorrelationSeries s1 = correlation_series(m, a, b1, tg, 2000, 4);
  const CorrelationSeries s2 = correlation_series(m, a, b2, tg, 2000, 4);
  const CorrelationSeries s12 = correlation_series(m, a, b12, tg, 2000, 4);
  for (std::size_t k = 0; k < tg.size(); ++k) CHECK(std::abs(s12.value[k] - s1.value[k] - 2.0 * s2.value[k]) < 1e-13);
}

TEST_CASE("sampler invariance, stderr scaling, determinism") {
  const FlowModel m = cat_cos();
  const Observable a = make_observable(m, {bump_mode(1, 0)});
  const Observable b = make_observable(m, {bump_mode(0, 1), fiber_wave()});
  const std::vector<double> tg{0.0, 0.5, 1.0, 2.0};
  CorrelationOptions shifted;
  shifted.start_time = 1.5;
  const CorrelationSeries s0 = correlation_series(m, a, b, tg, 40000, 21);
  const CorrelationSeries s1 = correlation_series(m, a, b, tg, 40000, 22, shifted);
  for (std::size_t k = 0; k < tg.size(); ++k)
    CHECK(std::abs(s0.value[k] - s1.value[k]) < 3 * std::hypot(s0.stderr_[k], s1.stderr_[k]));

  const CorrelationSeries s4 = correlation_series(m, a, b, tg, 160000, 21);
  for (std::size_t k = 0; k < tg.size(); ++k) CHECK(std::abs(s0.stderr_[k] / s4.stderr_[k] / 2.0 - 1.0) < 0.15);

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const CorrelationSeries one = correlation_series(m, a, b, tg, 10000, 8);
  omp_set_num_threads(3);
  const CorrelationSeries three = correlation_series(m, a, b, tg, 10000, 8);
  omp_set_num_threads(saved);
  for (std::size_t k = 0; k < tg.size(); ++k) {
    CHECK(one.value[k] == three.value[k]);
    CHECK(one.stderr_[k] == three.stderr_[k]);
  }
}

TEST_CASE("fit_decay on synthetic series") {
  const DecayFit exact = fit_decay(synthetic(3.0, 0.7, 0.0, 1));
  CHECK(exact.detected);
  CHECK(std::abs(exact.rate - 0.7) < 1e-6);
  CHECK(std::abs(exact.amplitude - 3.0) < 1e-6);
  CHECK(exact.points == 41);

  const DecayFit noisy = fit_decay(synthetic(3.0, 0.7, 0.01, 2024));
  CHECK(std::abs(noisy.rate - 0.7) < 0.02);
  CHECK(noisy.rate_lo < noisy.rate);
  CHECK(noisy.r2 > 0.99);

  CorrelationSeries junk = synthetic(1.0, 0.7, 0.0, 1);
  for (auto& e : junk.stderr_) e = 1.0;
  const DecayFit none = fit_decay(junk);
  CHECK_FALSE(none.detected);
  CHECK(none.verdict == "no detectable decay");
}

}  // TEST_SUITE
