/// @file builtins.hpp
/// @brief Built-in demo scenarios (gyroscope, diag-example,
///        remark48-counterexample, remark44-system) and the registry of
///        analytic candidate functions W with their gradient oracles.

#pragma once

#include <string>
#include <vector>

#include "mrf/scenario.hpp"

namespace mrf {

/// Names accepted by builtin_scenario, in registry order.
const std::vector<std::string>& builtin_names();

/// Constructs the named scenario. Throws std::invalid_argument for unknown
/// names (the message lists the registry).
Scenario builtin_scenario(const std::string& name);

/// Candidate W from the analytic registry ("gyroscope-w", "sq-norm").
struct BuiltinCandidateW {
  std::function<double(std::span<const double>)> W;
  GradientOracle gradient_oracle;
};

/// Looks up an analytic candidate; validates the state dimension. Throws
/// std::invalid_argument for unknown names or dimension mismatch.
BuiltinCandidateW builtin_candidate_w(const std::string& name, int n);

}  // namespace mrf
