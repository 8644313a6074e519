#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace geodefect {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  bool lower_bound = false;  // passes when measured > tolerance
  std::string detail;

  // Distance to the bound on the passing side; positive means passing.
  double margin = 0.0;
  nlohmann::json to_json() const;
};

struct VerifyConfig {
  std::uint64_t seed = 1;
  bool flip_curvature_sign = false;  // fixture: negates the curvature tensor
  double fd_step = 1e-3;             // central-difference step for the convergence check
  bool quick = false;                // fewer samples
};

// Property suite over the analytic zoo: curvature conventions, symmetries,
// finite-difference convergence, bump and cutoff bounds, support locality,
// curvature-delta prediction and the near/global/far break bounds.
std::vector<CheckResult> run_verify_suite(const VerifyConfig& cfg);

nlohmann::json verify_report(const std::vector<CheckResult>& checks);

}  // namespace geodefect
