#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "nvecho/analysis.hpp"
#include "nvecho/ensemble.hpp"
#include "nvecho/integrator.hpp"
#include "nvecho/model.hpp"

namespace nvecho {

using Json = nlohmann::ordered_json;

// Config sections. Frequencies are ordinary (Hz), eta is a plain rate (1/s),
// durations are seconds, powers dBm.

struct CavitySection {
  double frequency_hz = 0.0;
  double kappa1_hz = 0.0;
  double kappa2_hz = 0.0;
  double temperature_k = 0.0;
  bool operator==(const CavitySection&) const = default;
};

enum class EnsembleKind { kGaussian, kComb };
enum class InitialState { kCooled, kPureMinusX };

struct EnsembleSection {
  EnsembleKind kind = EnsembleKind::kGaussian;
  double n_total = 0.0;
  double center_hz = 0.0;
  double fwhm_hz = 0.0;
  int n_classes = 0;
  double spacing_hz = 0.0;
  CombWeighting weighting = CombWeighting::kGaussianEnvelope;
  double g_hz = 0.0;
  double gamma_hz = 0.0;
  double eta = 0.0;  ///< 1/s
  double chi_hz = 0.0;
  InitialState initial = InitialState::kCooled;
  bool operator==(const EnsembleSection&) const = default;
};

struct DriveSection {
  double detuning_hz = 0.0;  ///< omega_d - omega_c over 2 pi
  double power_dbm = 12.0;
  bool operator==(const DriveSection&) const = default;
};

struct SequenceSection {
  double t_pi2 = 28e-9;
  double t_pi = 56e-9;
  double tau = 10e-6;
  double t_total = 80e-6;
  bool operator==(const SequenceSection&) const = default;
};

struct AnalysisSection {
  double grating_window_hz = 1e6;
  double spectrum_span_hz = 10e6;
  double spectrum_step_hz = 0.02e6;
  SpectrumMethod spectrum_method = SpectrumMethod::kLinearized;
  std::vector<std::string> snapshots;
  std::vector<std::size_t> tracked_classes;
  bool operator==(const AnalysisSection&) const = default;
};

enum class Protocol { kHahnEcho, kFreeEvolution };

struct ScenarioConfig {
  std::string name;
  std::string output_dir = "out";
  std::string notes;
  Protocol protocol = Protocol::kHahnEcho;
  CavitySection cavity;
  EnsembleSection ensemble;
  DriveSection drive;
  SequenceSection sequence;
  IntegratorConfig integrator;
  AnalysisSection analysis;

  bool operator==(const ScenarioConfig&) const = default;

  CavityParams cavity_params() const;
  std::vector<SubEnsemble> build_ensemble() const;
  /// Whether the Gaussian grid was cut short (always false for combs).
  bool ensemble_truncated() const;
  double omega_d() const;
  HahnSequence hahn_sequence() const;
  SystemState initial_state(std::span<const SubEnsemble> ensembles) const;
  RecordOptions record_options() const;
  /// Inhomogeneous FWHM (rad/s).
  double fwhm() const;
};

Json to_json(const ScenarioConfig& cfg);

/// Strict parse: unknown or missing keys and bad units throw `ConfigError` naming the key path.
ScenarioConfig scenario_from_json(const Json& doc);

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Reads a JSON file; `ConfigError` with the path as key when missing or malformed.
Json read_json_file(const std::filesystem::path& path);

/// RFC 7396 style merge of `patch` into `target`.
void merge_json(Json& target, const Json& patch);

const std::map<std::string, ScenarioConfig>& builtin_scenarios();
const ScenarioConfig& builtin_scenario(const std::string& name);

/// The named builtin with the file at `overrides` merged on top (when not empty).
ScenarioConfig resolve_scenario(const std::string& name, const std::filesystem::path& overrides = {});

/// Builtin main-text parameter set at a given cooling rate.
ScenarioConfig main_system(double eta, const std::string& name = "main");

/// Builtin comb of `n_classes` for the beats study.
ScenarioConfig beats_scenario(int n_classes, double tau);

}  // namespace nvecho
