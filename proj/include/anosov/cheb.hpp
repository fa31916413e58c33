#pragma once

#include <cmath>
#include <numbers>
#include <vector>

// Chebyshev interpolation on Lobatto points of [-1, 1].
namespace anosov::cheb {

// x_k = cos(pi k / n), k = 0..n; the middle node is exactly 0 for even n
inline std::vector<double> lobatto(int n) {
  std::vector<double> x(n + 1);
  for (int k = 0; k <= n; ++k) x[k] = std::cos(std::numbers::pi * k / n);
  if (n % 2 == 0) x[n / 2] = 0.0;
  return x;
}

// coefficients c_j of sum c_j T_j from values at lobatto(n)  (DCT-I)
inline std::vector<double> coefficients(const std::vector<double>& f) {
  const int n = int(f.size()) - 1;
  std::vector<double> c(n + 1, 0.0);
  for (int j = 0; j <= n; ++j) {
    double s = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      s += w * f[k] * std::cos(std::numbers::pi * j * k / n);
    }
    c[j] = s * 2.0 / n;
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return c;
}

inline double evaluate(const std::vector<double>& c, double x) {
  double b1 = 0.0, b2 = 0.0;
  for (int j = int(c.size()) - 1; j >= 1; --j) {
    const double b0 = 2.0 * x * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + c[0];
}

inline std::vector<double> derivative(const std::vector<double>& c) {
  const int n = int(c.size()) - 1;
  if (n == 0) return {0.0};
  std::vector<double> d(n, 0.0);
  for (int j = n - 1; j >= 0; --j) d[j] = (j + 2 <= n - 1 ? d[j + 2] : 0.0) + 2.0 * (j + 1) * c[j + 1];
  d[0] *= 0.5;
  return d;
}

}  // namespace anosov::cheb
