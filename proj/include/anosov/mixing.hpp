#pragma once

#include "anosov/manifold.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace anosov {

using cplx = std::complex<double>;

// Fiber profile h(s), s = z / r(w) in [0, 1).
enum class FiberProfile {
  one,      // h = 1
  fourier,  // h = exp(2 pi i n s)
  bump      // h = sin^2(pi s), vanishes at both ends of the fiber
};

// coef * exp(2 pi i (kx x + ky y)) * h(z / r(w))
struct ObsTerm {
  cplx coef = 1.0;
  int kx = 0, ky = 0;
  FiberProfile profile = FiberProfile::one;
  int n = 0;  // frequency for FiberProfile::fourier
};

struct Observable {
  std::vector<ObsTerm> terms;
  cplx mean = 0.0;  // subtracted in value()
  std::string describe() const;
  cplx raw(const FlowModel& m, const Point3& p) const;
  cplx value(const FlowModel& m, const Point3& p) const { return raw(m, p) - mean; }
};

// Invariant-volume mean of the uncentered observable; exact for trig roofs without a time change,
// spectrally accurate quadrature otherwise.
cplx observable_mean(const FlowModel& m, const std::vector<ObsTerm>& terms);
// Builds the observable and, if `center`, subtracts its mean.
Observable make_observable(const FlowModel& m, std::vector<ObsTerm> terms, bool center = true);

struct CorrelationSeries {
  std::vector<double> t;
  std::vector<cplx> value;
  std::vector<double> stderr_;
  std::string obs_a, obs_b;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double a_sup = 0.0, b_sup = 0.0;  // sup norms used for the |C| bound
};

struct CorrelationOptions {
  std::size_t block = 4096;  // fixed reduction blocks, independent of thread count
  double start_time = 0.0;   // samples are pre-evolved by this time
};

// C(t) = (1/n) sum conj(a(p_i)) b(f^t p_i), p_i from the invariant-volume sampler
CorrelationSeries correlation_series(const FlowModel& m, const Observable& a, const Observable& b,
                                     const std::vector<double>& t_grid, std::size_t n, std::uint64_t seed,
                                     const CorrelationOptions& opts = {});

std::vector<double> default_time_grid();  // [0, 20] step 0.5

struct DecayFit {
  bool detected = false;
  std::string verdict;
  double rate = 0.0, rate_stderr = 0.0;
  double rate_lo = 0.0, rate_hi = 0.0;  // 95% interval
  double amplitude = 0.0;
  double r2 = 0.0;  // weighted R^2 of log|C| against t
  int points = 0;   // length of the reliable range
  double t_end = 0.0;
};

struct FitOptions {
  double snr = 5.0;        // |C| > snr * stderr
  int min_points = 6;
  double min_rate = 0.01;  // smaller fitted rates count as no decay
};

DecayFit fit_decay(const CorrelationSeries& s, const FitOptions& opts = {});

}  // namespace anosov
