#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvecho {

/// Inconsistent shapes, e.g. state arrays that do not match the ensemble.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values produced or consumed by the dynamics.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::ptrdiff_t index = -1)
      : std::runtime_error(what), index_(index) {}

  /// Offending sub-ensemble or step index; -1 when not applicable.
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

/// Configuration problems; `key_path()` names the offending key, e.g. "cavity.kappa1_hz".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key_path, const std::string& message)
      : std::runtime_error(key_path.empty() ? message : key_path + ": " + message),
        key_path_(key_path) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

/// Invalid arguments to analysis routines (degenerate fits, empty inputs).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run that cannot be carried out as configured (accuracy guard, horizon).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nvecho
