#pragma once

#include <functional>
#include <string>
#include <vector>

namespace reddiff {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckOptions {
  // Flips the sign of every operator's vjp before the operator checks. Used to confirm the
  // suite notices a broken adjoint.
  bool corrupt_vjp = false;
  // Check ids to run; empty runs all of them.
  std::vector<int> only;
};

CheckResult check_schedule_exactness();
CheckResult check_gmm_score();
CheckResult check_residual_identity();
CheckResult check_expected_gradient();
CheckResult check_map_recovery();
CheckResult check_stopped_gradient();
CheckResult check_plan_ordering();
CheckResult check_dispersion_gradient();
CheckResult check_operator_contracts(const CheckOptions& options = {});
CheckResult check_determinism();

/// Runs every check in order. on_result is called as each one finishes.
std::vector<CheckResult> run_check_suite(const CheckOptions& options = {},
                                         const std::function<void(const CheckResult&)>& on_result = {});

/// Budget for the whole suite on one core.
inline constexpr double kSuiteBudgetSeconds = 300.0;

}  // namespace reddiff
