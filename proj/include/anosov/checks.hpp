#pragma once

#include <json.hpp>

#include <string>
#include <vector>

// Invariant checks with independent oracles, grouped by acceptance criterion.
namespace anosov::checks {

struct Check {
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id = 0;
  std::string title;
  double budget_seconds = 0.0;
  double seconds = 0.0;
  std::vector<Check> checks;
  bool pass() const;  // every check passes and the runtime is within budget
};

struct Scale {
  std::size_t mixing_samples = 1000000;
};

inline constexpr int criterion_count = 7;

Criterion run_criterion(int id, const Scale& scale = {});
// the Bargmann identity suite (criterion 6 plus transform-level identities)
Criterion bargmann_suite();

nlohmann::json to_json(const Criterion& c);
std::string summary_line(const Criterion& c);

}  // namespace anosov::checks
