#include "nvecho/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

namespace {

/// Strict reader for one JSON object: tracks consumed keys and rejects the rest.
class Section {
 public:
  Section(const Json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return doc_.contains(key); }

  const Json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(key_path(key), "required key missing");
    used_.insert(key);
    return doc_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(key_path(key), "must be finite");
    return x;
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  double non_negative(const std::string& key) {
    const double x = number(key);
    if (x < 0.0) throw ConfigError(key_path(key), "must be >= 0");
    return x;
  }

  double non_negative(const std::string& key, double fallback) {
    return has(key) ? non_negative(key) : fallback;
  }

  double positive(const std::string& key) {
    const double x = number(key);
    if (!(x > 0.0)) throw ConfigError(key_path(key), "must be > 0");
    return x;
  }

  double positive(const std::string& key, double fallback) {
    return has(key) ? positive(key) : fallback;
  }

  long integer(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
    return v.get<long>();
  }

  long integer(const std::string& key, long fallback) { return has(key) ? integer(key) : fallback; }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  template <class E>
  E choice(const std::string& key, const std::vector<std::pair<std::string, E>>& options,
           std::optional<E> fallback = std::nullopt) {
    if (!has(key) && fallback) return *fallback;
    const std::string s = text(key);
    std::string allowed;
    for (const auto& [name, value] : options) {
      if (name == s) return value;
      allowed += (allowed.empty() ? "" : ", ") + name;
    }
    throw ConfigError(key_path(key), "expected one of " + allowed + ", got '" + s + "'");
  }

  Section child(const std::string& key) {
    const Json& v = raw(key);
    return Section(v, key_path(key));
  }

  std::optional<Section> optional_child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return child(key);
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

 private:
  const Json& doc_;
  std::string path_;
  std::set<std::string> used_;
};

const std::vector<std::pair<std::string, EnsembleKind>> kKinds = {
    {"gaussian", EnsembleKind::kGaussian}, {"comb", EnsembleKind::kComb}};
const std::vector<std::pair<std::string, CombWeighting>> kWeightings = {
    {"uniform", CombWeighting::kUniform}, {"gaussian-envelope", CombWeighting::kGaussianEnvelope}};
const std::vector<std::pair<std::string, InitialState>> kInitials = {
    {"cooled", InitialState::kCooled}, {"pure-minus-x", InitialState::kPureMinusX}};
const std::vector<std::pair<std::string, Protocol>> kProtocols = {
    {"hahn-echo", Protocol::kHahnEcho}, {"free-evolution", Protocol::kFreeEvolution}};
const std::vector<std::pair<std::string, SpectrumMethod>> kMethods = {
    {"linearized", SpectrumMethod::kLinearized}, {"time-domain", SpectrumMethod::kTimeDomain}};

template <class E>
std::string name_of(const std::vector<std::pair<std::string, E>>& options, E value) {
  for (const auto& [name, v] : options) {
    if (v == value) return name;
  }
  return options.front().first;
}

/// Spacing of the main-text grid: 0.04e6 taken as an angular step (rad/s), stored in Hz.
constexpr double kMainSpacingHz = 0.04e6 / kTwoPi;

std::vector<std::size_t> main_tracked() {
  std::vector<std::size_t> out;
  for (int k = -8; k <= 8; ++k) out.push_back(static_cast<std::size_t>(999 + 4 * k));
  return out;
}

std::vector<std::string> all_events() { return protocol_events(); }

}  // namespace

CavityParams ScenarioConfig::cavity_params() const {
  return {angular(cavity.frequency_hz), angular(cavity.kappa1_hz), angular(cavity.kappa2_hz),
          cavity.temperature_k};
}

std::vector<SubEnsemble> ScenarioConfig::build_ensemble() const {
  const SpinRates rates{angular(ensemble.g_hz), angular(ensemble.gamma_hz), ensemble.eta,
                        angular(ensemble.chi_hz)};
  if (ensemble.kind == EnsembleKind::kGaussian) {
    GaussianEnsembleSpec spec{ensemble.n_total, angular(ensemble.center_hz),
                              angular(ensemble.fwhm_hz), ensemble.n_classes,
                              angular(ensemble.spacing_hz), rates};
    return build_gaussian(spec).classes;
  }
  CombEnsembleSpec spec{ensemble.n_classes, ensemble.spacing_hz, angular(ensemble.center_hz),
                        ensemble.n_total, ensemble.weighting, angular(ensemble.fwhm_hz), rates};
  return build_comb(spec);
}

bool ScenarioConfig::ensemble_truncated() const {
  if (ensemble.kind != EnsembleKind::kGaussian) return false;
  return ensemble.spacing_hz * ensemble.n_classes < 3.0 * ensemble.fwhm_hz;
}

double ScenarioConfig::omega_d() const { return angular(cavity.frequency_hz + drive.detuning_hz); }

double ScenarioConfig::fwhm() const { return angular(ensemble.fwhm_hz); }

HahnSequence ScenarioConfig::hahn_sequence() const {
  return {sequence.t_pi2, sequence.t_pi, sequence.tau, omega_d(), drive.power_dbm,
          sequence.t_total};
}

SystemState ScenarioConfig::initial_state(std::span<const SubEnsemble> ens) const {
  if (ensemble.initial == InitialState::kCooled) return cooled_steady_state(ens);
  SystemState s(ens.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.sigma12[i] = Complex(-0.5, 0.0);
    s.sigma22[i] = 0.5;
  }
  return s;
}

RecordOptions ScenarioConfig::record_options() const {
  return {analysis.snapshots, {}, analysis.tracked_classes};
}

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["output_dir"] = c.output_dir;
  j["notes"] = c.notes;
  j["protocol"] = name_of(kProtocols, c.protocol);
  j["cavity"] = {{"frequency_hz", c.cavity.frequency_hz},
                 {"kappa1_hz", c.cavity.kappa1_hz},
                 {"kappa2_hz", c.cavity.kappa2_hz},
                 {"temperature_k", c.cavity.temperature_k}};
  const auto& e = c.ensemble;
  j["ensemble"] = {{"kind", name_of(kKinds, e.kind)},
                   {"n_total", e.n_total},
                   {"center_hz", e.center_hz},
                   {"fwhm_hz", e.fwhm_hz},
                   {"n_classes", e.n_classes},
                   {"spacing_hz", e.spacing_hz},
                   {"weighting", name_of(kWeightings, e.weighting)},
                   {"g_hz", e.g_hz},
                   {"gamma_hz", e.gamma_hz},
                   {"eta", e.eta},
                   {"chi_hz", e.chi_hz},
                   {"initial", name_of(kInitials, e.initial)}};
  j["drive"] = {{"detuning_hz", c.drive.detuning_hz}, {"power_dbm", c.drive.power_dbm}};
  j["sequence"] = {{"t_pi2", c.sequence.t_pi2},
                   {"t_pi", c.sequence.t_pi},
                   {"tau", c.sequence.tau},
                   {"t_total", c.sequence.t_total}};
  const auto& g = c.integrator;
  j["integrator"] = {{"dt_pulse", g.dt_pulse},
                     {"dt_free", g.dt_free},
                     {"sample_every", g.sample_every},
                     {"ringdown", g.ringdown},
                     {"validate_stages", g.validate_stages},
                     {"dt_relax", g.dt_relax},
                     {"relax_time_constants", g.relax_time_constants},
                     {"workers", g.workers},
                     {"max_phase_per_step", g.max_phase_per_step}};
  j["analysis"] = {{"grating_window_hz", c.analysis.grating_window_hz},
                   {"spectrum_span_hz", c.analysis.spectrum_span_hz},
                   {"spectrum_step_hz", c.analysis.spectrum_step_hz},
                   {"spectrum_method", name_of(kMethods, c.analysis.spectrum_method)},
                   {"snapshots", c.analysis.snapshots},
                   {"tracked_classes", c.analysis.tracked_classes}};
  return j;
}

ScenarioConfig scenario_from_json(const Json& doc) {
  ScenarioConfig c;
  Section top(doc, "");
  c.name = top.text("name");
  c.output_dir = top.text("output_dir", "out");
  c.notes = top.text("notes", "");
  c.protocol = top.choice("protocol", kProtocols, std::optional(Protocol::kHahnEcho));

  {
    Section s = top.child("cavity");
    c.cavity.frequency_hz = s.positive("frequency_hz");
    c.cavity.kappa1_hz = s.non_negative("kappa1_hz");
    c.cavity.kappa2_hz = s.non_negative("kappa2_hz");
    c.cavity.temperature_k = s.positive("temperature_k");
    if (!(c.cavity.kappa1_hz + c.cavity.kappa2_hz > 0.0)) {
      throw ConfigError("cavity.kappa2_hz", "kappa1_hz + kappa2_hz must be > 0");
    }
    s.finish();
  }
  {
    Section s = top.child("ensemble");
    auto& e = c.ensemble;
    e.kind = s.choice<EnsembleKind>("kind", kKinds);
    e.n_total = s.non_negative("n_total");
    e.center_hz = s.positive("center_hz");
    const long n = s.integer("n_classes");
    if (n < 1) throw ConfigError("ensemble.n_classes", "must be >= 1");
    if (e.kind == EnsembleKind::kComb && n % 2 == 0) {
      throw ConfigError("ensemble.n_classes", "comb needs an odd class count");
    }
    e.n_classes = static_cast<int>(n);
    e.spacing_hz = s.positive("spacing_hz");
    e.weighting = s.choice("weighting", kWeightings, std::optional(CombWeighting::kGaussianEnvelope));
    const bool needs_fwhm =
        e.kind == EnsembleKind::kGaussian || e.weighting == CombWeighting::kGaussianEnvelope;
    e.fwhm_hz = needs_fwhm ? s.positive("fwhm_hz") : s.non_negative("fwhm_hz", 0.0);
    e.g_hz = s.non_negative("g_hz");
    e.gamma_hz = s.non_negative("gamma_hz");
    e.eta = s.non_negative("eta");
    e.chi_hz = s.non_negative("chi_hz");
    e.initial = s.choice("initial", kInitials, std::optional(InitialState::kCooled));
    s.finish();
  }
  if (auto s = top.optional_child("drive")) {
    c.drive.detuning_hz = s->number("detuning_hz", 0.0);
    c.drive.power_dbm = s->number("power_dbm");
    s->finish();
  } else if (c.protocol == Protocol::kHahnEcho) {
    throw ConfigError("drive", "required key missing");
  }
  if (auto s = top.optional_child("sequence")) {
    c.sequence.t_pi2 = s->positive("t_pi2", c.sequence.t_pi2);
    c.sequence.t_pi = s->positive("t_pi", c.sequence.t_pi);
    c.sequence.tau = s->positive("tau", c.sequence.tau);
    c.sequence.t_total = s->positive("t_total", 8.0 * c.sequence.tau);
    if (!(c.sequence.tau > c.sequence.t_pi)) {
      throw ConfigError("sequence.tau", "must exceed t_pi");
    }
    s->finish();
  }
  if (auto s = top.optional_child("integrator")) {
    auto& g = c.integrator;
    g.dt_pulse = s->positive("dt_pulse", g.dt_pulse);
    g.dt_free = s->positive("dt_free", g.dt_free);
    if (g.dt_pulse > g.dt_free) throw ConfigError("integrator.dt_pulse", "must not exceed dt_free");
    const long every = s->integer("sample_every", g.sample_every);
    if (every < 1) throw ConfigError("integrator.sample_every", "must be >= 1");
    g.sample_every = static_cast<int>(every);
    g.ringdown = s->non_negative("ringdown", g.ringdown);
    g.validate_stages = s->boolean("validate_stages", g.validate_stages);
    g.dt_relax = s->positive("dt_relax", g.dt_relax);
    g.relax_time_constants = s->positive("relax_time_constants", g.relax_time_constants);
    const long workers = s->integer("workers", g.workers);
    if (workers < 1) throw ConfigError("integrator.workers", "must be >= 1");
    g.workers = static_cast<unsigned>(workers);
    g.max_phase_per_step = s->positive("max_phase_per_step", g.max_phase_per_step);
    s->finish();
  }
  if (auto s = top.optional_child("analysis")) {
    auto& a = c.analysis;
    a.grating_window_hz = s->positive("grating_window_hz", a.grating_window_hz);
    a.spectrum_span_hz = s->positive("spectrum_span_hz", a.spectrum_span_hz);
    a.spectrum_step_hz = s->positive("spectrum_step_hz", a.spectrum_step_hz);
    a.spectrum_method =
        s->choice("spectrum_method", kMethods, std::optional(SpectrumMethod::kLinearized));
    if (s->has("snapshots")) {
      const Json& list = s->raw("snapshots");
      if (!list.is_array()) throw ConfigError("analysis.snapshots", "expected a list");
      const auto& known = protocol_events();
      for (const auto& v : list) {
        if (!v.is_string()) throw ConfigError("analysis.snapshots", "expected event names");
        const auto name = v.get<std::string>();
        const bool echo = name.rfind("echo-", 0) == 0 && name.size() > 5 &&
                          name.find_first_not_of("0123456789", 5) == std::string::npos;
        if (!echo && std::find(known.begin(), known.end(), name) == known.end()) {
          throw ConfigError("analysis.snapshots", "unknown event '" + name + "'");
        }
        a.snapshots.push_back(name);
      }
    }
    if (s->has("tracked_classes")) {
      const Json& list = s->raw("tracked_classes");
      if (!list.is_array()) throw ConfigError("analysis.tracked_classes", "expected a list");
      for (const auto& v : list) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long>() >= 0)) {
          throw ConfigError("analysis.tracked_classes", "expected class indices");
        }
        const auto idx = v.get<std::size_t>();
        if (idx >= static_cast<std::size_t>(c.ensemble.n_classes)) {
          throw ConfigError("analysis.tracked_classes",
                            "index " + std::to_string(idx) + " out of range");
        }
        a.tracked_classes.push_back(idx);
      }
    }
    s->finish();
  }
  top.finish();
  return c;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path.string(), "cannot write file");
  out << to_json(cfg).dump(2) << "\n";
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path));
}

void merge_json(Json& target, const Json& patch) {
  if (!patch.is_object()) {
    target = patch;
    return;
  }
  if (!target.is_object()) target = Json::object();
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_null()) {
      target.erase(it.key());
    } else {
      merge_json(target[it.key()], it.value());
    }
  }
}

ScenarioConfig main_system(double eta, const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.output_dir = "out/" + name;
  c.cavity = {9.8e9, 0.95e6, 0.89e6, 293.0};
  c.ensemble.kind = EnsembleKind::kGaussian;
  c.ensemble.n_total = 7.3e13;
  c.ensemble.center_hz = 9.8e9;
  c.ensemble.fwhm_hz = 3.3e6;
  c.ensemble.n_classes = 2000;
  c.ensemble.spacing_hz = kMainSpacingHz;
  c.ensemble.g_hz = 0.18;
  c.ensemble.gamma_hz = 23.7;
  c.ensemble.eta = eta;
  c.ensemble.chi_hz = 0.014e6;
  c.drive = {0.0, 12.0};
  c.sequence = {28e-9, 56e-9, 10e-6, 80e-6};
  c.notes = "class spacing 0.04e6 rad/s";
  return c;
}

ScenarioConfig beats_scenario(int n_classes, double tau) {
  ScenarioConfig c = main_system(500.0, "fig4-beats-" + std::to_string(n_classes));
  c.protocol = Protocol::kFreeEvolution;
  c.ensemble.kind = EnsembleKind::kComb;
  c.ensemble.n_classes = n_classes;
  c.ensemble.spacing_hz = 1.0 / tau;
  c.ensemble.n_total = 1.3e11 * n_classes;
  c.ensemble.weighting = CombWeighting::kGaussianEnvelope;
  c.ensemble.initial = InitialState::kPureMinusX;
  c.sequence.tau = tau;
  c.sequence.t_total = 4.0 * tau;
  c.notes = "comb spacing 1/tau, 1.3e11 spins per class on average";
  return c;
}

const std::map<std::string, ScenarioConfig>& builtin_scenarios() {
  static const std::map<std::string, ScenarioConfig> all = [] {
    std::map<std::string, ScenarioConfig> m;
    auto add = [&m](ScenarioConfig c) { m.emplace(c.name, std::move(c)); };

    ScenarioConfig fig2 = main_system(500.0, "fig2-echoes");
    fig2.analysis.snapshots = all_events();
    fig2.analysis.tracked_classes = main_tracked();
    add(fig2);

    for (const char* name : {"fig3-power-sweep", "fig3-detuning-sweep", "fig3-eta-sweep"}) {
      ScenarioConfig s = main_system(500.0, name);
      s.sequence.t_total = 3.6 * s.sequence.tau;
      s.analysis.snapshots = {"end-pulse-2"};
      add(s);
    }

    for (int n : {3, 5, 99}) add(beats_scenario(n, 10e-6));

    ScenarioConfig strong;
    strong.name = "figS6-strong";
    strong.output_dir = "out/figS6-strong";
    strong.cavity = {2.69e9, 0.4e6, 0.4e6, 293.0};
    strong.ensemble.kind = EnsembleKind::kGaussian;
    strong.ensemble.center_hz = 2.69e9;
    strong.ensemble.fwhm_hz = 2.6e6;
    strong.ensemble.n_classes = 2000;
    strong.ensemble.spacing_hz = kMainSpacingHz;
    strong.ensemble.g_hz = 12.0;
    strong.ensemble.gamma_hz = 25.0;
    strong.ensemble.eta = 1e3;
    strong.ensemble.chi_hz = 0.16e6;
    // g sqrt(N p) = 2 pi x 6 MHz with p = 1 - 2 sigma22 of the cooled state.
    {
      const double gamma = angular(strong.ensemble.gamma_hz);
      const double p = strong.ensemble.eta / (2.0 * gamma + strong.ensemble.eta);
      const double half_split = 6e6 / strong.ensemble.g_hz;
      strong.ensemble.n_total = half_split * half_split / p;
    }
    strong.drive = {0.0, 50.0};
    strong.sequence = {28e-9, 56e-9, 10e-6, 40e-6};
    strong.integrator.dt_pulse = 2e-12;
    strong.integrator.ringdown = 3e-6;
    strong.integrator.sample_every = 10;
    strong.analysis.spectrum_span_hz = 12e6;
    strong.analysis.spectrum_step_hz = 0.02e6;
    strong.analysis.snapshots = {"end-pulse-2", "first-echo"};
    strong.notes =
        "n_total calibrated so that g sqrt(N (1 - 2 sigma22)) = 2 pi x 6 MHz; "
        "kappa split evenly between port and internal loss; class spacing 0.04e6 rad/s";
    add(strong);

    ScenarioConfig regimes = main_system(500.0, "figS7-regimes");
    add(regimes);

    ScenarioConfig spectrum = main_system(500.0, "spectrum-main");
    add(spectrum);
    return m;
  }();
  return all;
}

const ScenarioConfig& builtin_scenario(const std::string& name) {
  const auto& all = builtin_scenarios();
  const auto it = all.find(name);
  if (it == all.end()) {
    std::string names;
    for (const auto& [k, v] : all) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("scenario", "unknown scenario '" + name + "' (known: " + names + ")");
  }
  return it->second;
}

ScenarioConfig resolve_scenario(const std::string& name, const std::filesystem::path& overrides) {
  Json doc;
  if (builtin_scenarios().count(name)) {
    doc = to_json(builtin_scenario(name));
  } else if (std::filesystem::exists(name)) {
    doc = read_json_file(name);
  } else {
    builtin_scenario(name);
  }
  if (!overrides.empty()) merge_json(doc, read_json_file(overrides));
  return scenario_from_json(doc);
}

}  // namespace nvecho
