#pragma once

#include <string>
#include <vector>

namespace entroplan {

// Property and oracle checks runnable from the CLI. Each check pits a module
// against an independent brute-force computation or a closed-form identity;
// the oracles here deliberately avoid the implementation paths they test.
struct CheckResult {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  std::string detail;
};

CheckResult check_distribution_identities(uint64_t seed);   // 1e4 cases, 1e-9
CheckResult check_mixture_failure_modes(uint64_t seed);     // 1e3 mixtures
CheckResult check_plan_selection_oracle(uint64_t seed);     // 1e3 sets, exact
CheckResult check_replan_statistics(uint64_t seed);         // 1e5 draws, 3 sigma
CheckResult check_meta_reward_and_gae(uint64_t seed);       // 1e3 cases, 1e-9
CheckResult check_maze_environment(uint64_t seed);          // connectivity etc.

std::vector<CheckResult> run_selfchecks(uint64_t seed);

}  // namespace entroplan
