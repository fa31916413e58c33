#pragma once

#include "anosov/manifold.hpp"
#include "anosov/rng.hpp"

#include <vector>

namespace fixtures {

using namespace anosov;

inline Mat2i cat() {
  Mat2i A;
  A << 2, 1, 1, 1;
  return A;
}

inline TrigPoly const_roof(double c = 1.0) { return TrigPoly{c, {}}; }

inline TrigPoly cos_roof(double eps) { return TrigPoly{1.0, {{1, 0, eps, 0.0}}}; }

inline FlowModel cat_const() { return make_suspension(cat(), const_roof()); }
inline FlowModel cat_cos(double eps = 0.1) { return make_suspension(cat(), cos_roof(eps)); }

// time change 0.2*(cos 2pi x + 0.5 sin 2pi(x+y)) on z in (0.15, 0.75)
inline TermPtr sample_timechange(double amp = 0.2) {
  TrigPoly modes{0.0, {{1, 0, amp, 0.0}, {1, 1, 0.0, 0.5 * amp}}};
  return std::make_shared<TrigProfileTerm>(modes, 0.15, 0.75);
}

inline FlowModel cat_const_tc() { return make_suspension(cat(), const_roof(), {sample_timechange()}); }
inline FlowModel cat_cos_tc() { return make_suspension(cat(), cos_roof(0.1), {sample_timechange()}); }

inline std::vector<FlowModel> all_models() { return {cat_const(), cat_cos(), cat_const_tc(), cat_cos_tc()}; }

inline std::vector<Point3> random_points(const FlowModel& m, int n, std::uint64_t seed) {
  std::vector<Point3> pts;
  for (int i = 0; i < n; ++i) {
    const double x = rng::uniform(seed, i, 0), y = rng::uniform(seed, i, 1);
    const double z = rng::uniform(seed, i, 2) * m.r(Vec2(x, y));
    pts.emplace_back(x, y, z);
  }
  return pts;
}

}  // namespace fixtures
