#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "nvecho/scenario.hpp"

namespace nvecho {

enum class SweepAxis { kPowerDbm, kDetuningHz, kEta };
enum class SweepMeasure { kEchoes, kSpectrum };

std::string to_string(SweepAxis a);
std::string to_string(SweepMeasure m);

struct SweepConfig {
  std::string name;
  std::string base;  ///< builtin scenario name or scenario file
  Json overrides = Json::object();
  SweepAxis axis = SweepAxis::kPowerDbm;
  std::vector<double> values;
  SweepMeasure measure = SweepMeasure::kEchoes;
  std::string output_dir = "out";

  /// The base scenario with overrides applied.
  ScenarioConfig base_scenario() const;
  /// Scenario for one axis value.
  ScenarioConfig point_scenario(double value) const;
  void validate() const;
};

Json to_json(const SweepConfig& cfg);
SweepConfig sweep_from_json(const Json& doc);

const std::map<std::string, SweepConfig>& builtin_sweeps();

/// A builtin sweep name or a sweep file.
SweepConfig resolve_sweep(const std::string& name_or_path);

struct SweepPoint {
  double value = 0.0;
  std::string status = "not-run";  ///< ok | failed | not-run
  std::string message;
  std::array<double, 3> echo_dbm{};    ///< -inf when absent
  std::array<bool, 3> visible{};
  int n_visible = 0;
  double grating_r = 0.0;            ///< NaN when not measured
  double noise_floor_dbm = 0.0;
  double g_eff_hz = 0.0;
  double splitting_hz = 0.0;
  std::string regime;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepPoint> points;
  bool complete = false;
};

/// Evaluates one point of the sweep (no threading, no I/O).
SweepPoint evaluate_point(const SweepConfig& cfg, double value);

/// Runs every point on `threads` workers (NVECHO_THREADS when 0). After the first
/// failure no new points start; their rows stay "not-run".
SweepResult run_sweep(const SweepConfig& cfg, unsigned threads = 0);

/// Worker count from NVECHO_THREADS (default 1).
unsigned threads_from_env();

}  // namespace nvecho
