#pragma once

#include "anosov/core.hpp"

#include <cmath>
#include <vector>

namespace anosov {

// c*cos(2pi(kx x + ky y)) + s*sin(2pi(kx x + ky y))
struct TrigTerm {
  int kx = 0;
  int ky = 0;
  double c = 0.0;
  double s = 0.0;
};

// Real trigonometric polynomial on the 2-torus.
struct TrigPoly {
  double constant = 0.0;
  std::vector<TrigTerm> terms;

  template <typename T>
  T value(T x, T y) const {
    using std::cos;
    using std::sin;
    T v = T(constant);
    for (const auto& t : terms) {
      const T arg = T(two_pi) * (T(t.kx) * x + T(t.ky) * y);
      v += T(t.c) * cos(arg) + T(t.s) * sin(arg);
    }
    return v;
  }

  double value(const Vec2& w) const { return value(w.x(), w.y()); }

  Vec2 gradient(const Vec2& w) const {
    Vec2 g = Vec2::Zero();
    for (const auto& t : terms) {
      const double arg = two_pi * (t.kx * w.x() + t.ky * w.y());
      const double d = two_pi * (-t.c * std::sin(arg) + t.s * std::cos(arg));
      g.x() += d * t.kx;
      g.y() += d * t.ky;
    }
    return g;
  }

  Mat2 hessian(const Vec2& w) const {
    Mat2 h = Mat2::Zero();
    for (const auto& t : terms) {
      const double arg = two_pi * (t.kx * w.x() + t.ky * w.y());
      const double d2 = -two_pi * two_pi * (t.c * std::cos(arg) + t.s * std::sin(arg));
      Vec2 k(t.kx, t.ky);
      h += d2 * k * k.transpose();
    }
    return h;
  }

  // sup |p - constant|
  double oscillation_bound() const {
    double b = 0.0;
    for (const auto& t : terms) b += std::hypot(t.c, t.s);
    return b;
  }

  double gradient_bound() const {
    double b = 0.0;
    for (const auto& t : terms) b += std::hypot(t.c, t.s) * two_pi * std::hypot(double(t.kx), double(t.ky));
    return b;
  }

  // integral of p(w) exp(-2 pi i k.w) over the torus (real part, imag part)
  std::pair<double, double> fourier(int kx, int ky) const {
    double re = (kx == 0 && ky == 0) ? constant : 0.0;
    double im = 0.0;
    for (const auto& t : terms) {
      if (t.kx == kx && t.ky == ky && (kx != 0 || ky != 0)) {
        re += t.c / 2;
        im -= t.s / 2;
      } else if (t.kx == -kx && t.ky == -ky && (kx != 0 || ky != 0)) {
        re += t.c / 2;
        im += t.s / 2;
      } else if (t.kx == 0 && t.ky == 0 && kx == 0 && ky == 0) {
        re += t.c;
      }
    }
    return {re, im};
  }

  bool is_constant() const {
    for (const auto& t : terms)
      if ((t.kx != 0 || t.ky != 0) && (t.c != 0.0 || t.s != 0.0)) return false;
    return true;
  }
};

}  // namespace anosov
