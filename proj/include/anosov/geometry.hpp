#pragma once

#include "anosov/manifold.hpp"

#include <vector>

namespace anosov {

enum class CurveKind { unstable, stable };

struct CurveOptions {
  int growth_steps = 0;    // K steps for the intrinsic factor; 0: about 18.4 / ln(lambda) mean return times
  double step = 1.0;       // checkpoint spacing
  double max_rk_step = 1.0 / 64;
};

struct InvariantCurve {
  Point3 basepoint;
  CurveKind kind = CurveKind::unstable;
  std::vector<double> tau;
  std::vector<Point3> points;
  std::vector<Vec3> tangents;      // unit in the ambient metric, oriented along increasing tau
  std::vector<double> factor;      // intrinsic norm of a unit ambient tangent
};

// Local unstable direction and backward growth at q (one sweep).
struct LocalUnstable {
  Vec3 e;
  double log_growth = 0.0;  // log of the expansion over the last K steps ending at q
};
LocalUnstable local_unstable(const FlowModel& m, const Point3& q, const CurveOptions& opts = {});

struct IntrinsicNorm {
  double value = 0.0;
  double tail_bound = 0.0;
};

// |v|_{W^u(p)} at q on W^u(p); v tangent to the unstable direction at q.
IntrinsicNorm intrinsic_norm(const FlowModel& m, const Point3& p, const Point3& q, const Vec3& v,
                             const CurveOptions& opts = {});

// Curve through p parametrized by intrinsic arc length; tau values in any order, node 0 need not be present.
InvariantCurve curve_at_params(const FlowModel& m, const Point3& p, CurveKind kind, const std::vector<double>& tau,
                               const CurveOptions& opts = {});

// Uniform grid on [-L, L] with the given intrinsic step.
InvariantCurve invariant_curve(const FlowModel& m, const Point3& p, CurveKind kind, double L, double step,
                               const CurveOptions& opts = {});

}  // namespace anosov
