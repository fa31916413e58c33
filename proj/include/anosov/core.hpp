#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace anosov {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat2i = Eigen::Matrix2i;

// (x, y, z) in the fundamental domain T^2 x [0, r(x,y)).
using Point3 = Vec3;
// Covectors are stored by components; the pairing with a tangent is dot().
using Covector = Vec3;

enum class ErrorKind { validation, numerical, io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), kind_(kind), code_(std::move(code)) {}
  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

private:
  ErrorKind kind_;
  std::string code_;
};

inline Error validation_error(std::string code, const std::string& msg) {
  return Error(ErrorKind::validation, std::move(code), msg);
}
inline Error numerical_error(std::string code, const std::string& msg) {
  return Error(ErrorKind::numerical, std::move(code), msg);
}

inline constexpr double two_pi = 6.283185307179586476925286766559;

// angle between two lines (sign ignored)
template <typename Derived1, typename Derived2>
double line_angle(const Eigen::MatrixBase<Derived1>& a, const Eigen::MatrixBase<Derived2>& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  const double s = (a.normalized() - (a.dot(b) >= 0 ? 1.0 : -1.0) * b.normalized()).norm();
  // small angles from the chord, large ones from acos
  return c > 0.9 ? 2.0 * std::asin(std::min(1.0, s / 2)) : std::acos(std::min(1.0, c));
}

}  // namespace anosov
