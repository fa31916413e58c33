#pragma once

#include <cmath>

// Scalar cutoff and step functions shared by several modules.
namespace anosov::smooth {

// C-infinity step: 0 for s <= 0, 1 for s >= 1.
template <typename T>
T step(T s) {
  using std::exp;
  if (s <= T(0)) return T(0);
  if (s >= T(1)) return T(1);
  const T a = exp(-T(1) / s);
  const T b = exp(-T(1) / (T(1) - s));
  return a / (a + b);
}

template <typename T>
T step_d1(T s) {
  using std::exp;
  if (s <= T(0) || s >= T(1)) return T(0);
  const T a = exp(-T(1) / s);
  const T b = exp(-T(1) / (T(1) - s));
  const T den = (a + b) * (a + b);
  return a * b * (T(1) / (s * s) + T(1) / ((T(1) - s) * (T(1) - s))) / den;
}

// 1 on |s| <= 1, 0 on |s| >= 3/2, C-infinity and monotone in |s|.
template <typename T>
T plateau(T s) {
  using std::abs;
  return T(1) - step((abs(s) - T(1)) * T(2));
}

template <typename T>
T plateau_d1(T s) {
  using std::abs;
  const T sg = s < T(0) ? T(-1) : T(1);
  return -T(2) * sg * step_d1((abs(s) - T(1)) * T(2));
}

// Degree-7 smoothstep (C^3): 0 at t <= 0, 1 at t >= 1.
template <typename T>
T smoothstep7(T t) {
  if (t <= T(0)) return T(0);
  if (t >= T(1)) return T(1);
  const T t2 = t * t;
  const T t4 = t2 * t2;
  return t4 * (T(35) - T(84) * t + T(70) * t2 - T(20) * t2 * t);
}

// Cutoff with the same plateau and support as plateau(), built on smoothstep7.
template <typename T>
T poly_plateau(T s) {
  using std::abs;
  return T(1) - smoothstep7((abs(s) - T(1)) * T(2));
}

// Bump exp(1 - 1/(1-u^2)) on (-1,1); value 1 at u=0.
template <typename T>
T bump(T u) {
  using std::exp;
  const T d = T(1) - u * u;
  if (d <= T(0)) return T(0);
  return exp(T(1) - T(1) / d);
}

template <typename T>
T bump_d1(T u) {
  const T d = T(1) - u * u;
  if (d <= T(0)) return T(0);
  return bump(u) * (-T(2) * u / (d * d));
}

template <typename T>
T bump_d2(T u) {
  const T d = T(1) - u * u;
  if (d <= T(0)) return T(0);
  const T g = -T(2) * u / (d * d);
  // g' = -2/d^2 - 8u^2/d^3
  const T gp = -T(2) / (d * d) - T(8) * u * u / (d * d * d);
  return bump(u) * (g * g + gp);
}

}  // namespace anosov::smooth
