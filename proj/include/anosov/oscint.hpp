#pragma once

#include "anosov/core.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <vector>

namespace anosov {

using cplx = std::complex<double>;

// Template profile tau -> psi(tau) on [-1, 1], cubic B-spline through uniform samples.
class Profile {
public:
  Profile(std::vector<double> tau, std::vector<double> values);
  // analytic profile; samples are still taken on the given uniform grid for the resolution check
  Profile(std::function<double(double)> f, int grid);

  double operator()(double t) const;
  const std::vector<double>& tau() const { return tau_; }
  const std::vector<double>& values() const { return values_; }
  double max_step() const;       // max |psi_{j+1} - psi_j|
  double slope_min() const { return dmin_; }
  double slope_max() const { return dmax_; }
  double slope_variation() const { return dvar_; }  // integral of |psi''|
  // copy with psi + c + s*tau
  Profile shifted(double c, double s) const;

private:
  void finish();
  std::vector<double> tau_, values_;
  std::function<double(double)> f_;
  std::shared_ptr<const void> spline_;
  double dmin_ = 0.0, dmax_ = 0.0, dvar_ = 0.0;
};

struct OscOptions {
  int max_refine = 256;  // per-panel subdivision cap before "refinement_needed"
  bool refine = true;    // false: a failing Nyquist check throws immediately
};

// int_{-1}^{1} exp(i b (psi(tau) + alpha tau)) dtau
cplx osc_integral(const Profile& psi, double b, double alpha, const OscOptions& opts = {});

// Same integral by plain Gauss-Legendre on `panels` equal panels; oracle for tests.
cplx osc_integral_reference(const std::function<double(double)>& psi, double b, double alpha, int panels);

struct OscIntegralReport {
  double b = 0.0;
  double alpha_star = 0.0;
  double value = 0.0;
  double threshold = 0.0;
  double rho = 0.0;
  bool passes_ni = false;
  double alpha_lo = 0.0, alpha_hi = 0.0;  // searched window
  double outside_bound = 0.0;             // bound for |I| on the rest of the alpha range
  int evaluations = 0;
};

struct MarginOptions {
  double rho = 0.05;
  double alpha_lo = 0.0, alpha_hi = 0.0;  // both zero: [-|b|, |b|]
  double grid_spacing = 0.25;             // in units of 1/|b|
  int refine_peaks = 3;
  OscOptions osc;
};

OscIntegralReport ni_margin(const Profile& psi, double b, const MarginOptions& opts = {});

// Regularized integration by parts.
struct Phase {
  std::function<double(double)> f, d1, d2;
};

struct Amplitude {
  std::function<double(double)> g;
  double lo = 0.0, hi = 0.0;  // g vanishes outside [lo, hi]
};

struct IbpSides {
  cplx lhs, rhs;
  cplx smooth_part, error_part;  // the two RHS integrals
  double stationary_distance = 0.0;
};

struct IbpOptions {
  int panels_per_eps = 4;  // outer panels per epsilon
  int inner_panels = 8;    // convolution panels over [-eps, eps]
  double scan_range = 1.0; // how far past supp g to look for zeros of theta'
};

// C-infinity bump on [-1, 1] with unit integral, and its derivative
double mollifier(double s);
double mollifier_d1(double s);

IbpSides reg_ibp(const Phase& theta, const Amplitude& g, double eps, const IbpOptions& opts = {});

}  // namespace anosov
