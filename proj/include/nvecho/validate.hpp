#pragma once

#include <string>
#include <vector>

namespace nvecho {

struct OracleResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Closed-form checks of the dynamics, observables and analysis chain.
std::vector<OracleResult> run_oracle_suite();

}  // namespace nvecho
