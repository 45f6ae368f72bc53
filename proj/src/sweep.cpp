#include "nvecho/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "nvecho/analysis.hpp"
#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"
#include "nvecho/observables.hpp"

namespace nvecho {

namespace {

const std::vector<std::pair<std::string, SweepAxis>> kAxes = {
    {"power_dbm", SweepAxis::kPowerDbm}, {"detuning_hz", SweepAxis::kDetuningHz},
    {"eta", SweepAxis::kEta}};
const std::vector<std::pair<std::string, SweepMeasure>> kMeasures = {
    {"echoes", SweepMeasure::kEchoes}, {"spectrum", SweepMeasure::kSpectrum}};

template <class E>
E parse_choice(const Json& doc, const std::string& key,
               const std::vector<std::pair<std::string, E>>& options) {
  if (!doc.at(key).is_string()) throw ConfigError(key, "expected a string");
  const auto s = doc.at(key).get<std::string>();
  for (const auto& [name, v] : options) {
    if (name == s) return v;
  }
  throw ConfigError(key, "unknown value '" + s + "'");
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(SweepAxis a) {
  for (const auto& [name, v] : kAxes) {
    if (v == a) return name;
  }
  return "power_dbm";
}

std::string to_string(SweepMeasure m) { return m == SweepMeasure::kEchoes ? "echoes" : "spectrum"; }

ScenarioConfig SweepConfig::base_scenario() const {
  Json doc;
  if (builtin_scenarios().count(base)) {
    doc = to_json(builtin_scenario(base));
  } else if (std::filesystem::exists(base)) {
    doc = read_json_file(base);
  } else {
    builtin_scenario(base);
  }
  merge_json(doc, overrides);
  return scenario_from_json(doc);
}

ScenarioConfig SweepConfig::point_scenario(double value) const {
  ScenarioConfig c = base_scenario();
  switch (axis) {
    case SweepAxis::kPowerDbm: c.drive.power_dbm = value; break;
    case SweepAxis::kDetuningHz: c.drive.detuning_hz = value; break;
    case SweepAxis::kEta: c.ensemble.eta = value; break;
  }
  return c;
}

void SweepConfig::validate() const {
  if (values.empty()) throw ConfigError("values", "sweep axis is empty");
  const bool up = values.size() < 2 || values[1] > values[0];
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (up ? !(values[i + 1] > values[i]) : !(values[i + 1] < values[i])) {
      throw ConfigError("values", "sweep values must be strictly monotone");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("values", "sweep values must be finite");
    if (axis == SweepAxis::kEta && v < 0.0) throw ConfigError("values", "eta must be >= 0");
  }
  if (measure == SweepMeasure::kSpectrum && axis != SweepAxis::kEta) {
    throw ConfigError("measure", "spectrum sweeps run over eta only");
  }
  base_scenario();
}

Json to_json(const SweepConfig& c) {
  Json j;
  j["name"] = c.name;
  j["base"] = c.base;
  j["overrides"] = c.overrides;
  j["axis"] = to_string(c.axis);
  j["values"] = c.values;
  j["measure"] = to_string(c.measure);
  j["output_dir"] = c.output_dir;
  return j;
}

SweepConfig sweep_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("", "sweep config must be an object");
  static const std::vector<std::string> known = {"name",   "base",    "overrides", "axis",
                                                 "values", "measure", "output_dir"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError(it.key(), "unknown key");
    }
  }
  for (const char* key : {"name", "base", "axis", "values"}) {
    if (!doc.contains(key)) throw ConfigError(key, "required key missing");
  }
  SweepConfig c;
  if (!doc["name"].is_string() || !doc["base"].is_string()) {
    throw ConfigError("name", "name and base must be strings");
  }
  c.name = doc["name"].get<std::string>();
  c.base = doc["base"].get<std::string>();
  if (doc.contains("overrides")) {
    if (!doc["overrides"].is_object()) throw ConfigError("overrides", "expected an object");
    c.overrides = doc["overrides"];
  }
  c.axis = parse_choice(doc, "axis", kAxes);
  if (!doc["values"].is_array()) throw ConfigError("values", "expected a list");
  for (const auto& v : doc["values"]) {
    if (!v.is_number()) throw ConfigError("values", "expected numbers");
    c.values.push_back(v.get<double>());
  }
  if (doc.contains("measure")) c.measure = parse_choice(doc, "measure", kMeasures);
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("output_dir", "expected a string");
    c.output_dir = doc["output_dir"].get<std::string>();
  }
  c.validate();
  return c;
}

const std::map<std::string, SweepConfig>& builtin_sweeps() {
  static const std::map<std::string, SweepConfig> all = [] {
    std::map<std::string, SweepConfig> m;
    auto add = [&m](SweepConfig c) {
      c.output_dir = "out/" + c.name;
      m.emplace(c.name, std::move(c));
    };
    SweepConfig power;
    power.name = "fig3-power-sweep";
    power.base = power.name;
    power.axis = SweepAxis::kPowerDbm;
    power.values = {0.0, 3.0, 6.0, 9.0, 12.0};
    add(power);

    SweepConfig detuning;
    detuning.name = "fig3-detuning-sweep";
    detuning.base = detuning.name;
    detuning.axis = SweepAxis::kDetuningHz;
    detuning.values = {-20e6, -10e6, -5e6, 0.0, 5e6, 10e6, 20e6};
    add(detuning);

    SweepConfig eta;
    eta.name = "fig3-eta-sweep";
    eta.base = eta.name;
    eta.axis = SweepAxis::kEta;
    eta.values = {0.1, 1.0, 10.0, 100.0, 400.0, 2e3, 2e4, 1e5};
    add(eta);

    SweepConfig regimes;
    regimes.name = "figS7-regimes";
    regimes.base = regimes.name;
    regimes.axis = SweepAxis::kEta;
    regimes.measure = SweepMeasure::kSpectrum;
    regimes.values = {1e2, 2e2, 3e2, 4e2, 6e2, 1e3, 2e3, 5e3, 1e4, 2e4, 5e4, 1e5};
    add(regimes);
    return m;
  }();
  return all;
}

SweepConfig resolve_sweep(const std::string& name_or_path) {
  const auto& all = builtin_sweeps();
  if (const auto it = all.find(name_or_path); it != all.end()) return it->second;
  if (!std::filesystem::exists(name_or_path)) {
    throw ConfigError(name_or_path, "no builtin sweep or file with this name");
  }
  return sweep_from_json(read_json_file(name_or_path));
}

SweepPoint evaluate_point(const SweepConfig& cfg, double value) {
  SweepPoint p;
  p.value = value;
  p.echo_dbm.fill(kNegInf);
  p.grating_r = std::numeric_limits<double>::quiet_NaN();
  const ScenarioConfig sc = cfg.point_scenario(value);
  const CavityParams cavity = sc.cavity_params();
  const std::vector<SubEnsemble> ens = sc.build_ensemble();

  if (cfg.measure == SweepMeasure::kSpectrum) {
    SpectrumOptions opt;
    opt.method = sc.analysis.spectrum_method;
    const auto grid = probe_grid(angular(sc.analysis.spectrum_span_hz),
                                 angular(sc.analysis.spectrum_step_hz));
    const ReflectionSpectrum spec = reflection_spectrum(cavity, ens, grid, opt);
    p.g_eff_hz = ordinary(spec.g_eff);
    p.splitting_hz = ordinary(spec.splitting);
    p.regime = to_string(spec.regime);
    p.status = "ok";
    return p;
  }

  const HahnSequence seq = sc.hahn_sequence();
  RecordOptions rec;
  rec.snapshot_events = {"end-pulse-2"};
  const Trajectory traj = run_protocol(cavity, ens, seq, sc.integrator, rec);
  const PowerTrace power = power_trace(traj, cavity);
  const EchoReport echoes = detect_echoes(power, seq);
  p.noise_floor_dbm = power.noise_floor_dbm;
  for (std::size_t k = 0; k < 3 && k < echoes.peak_powers.size(); ++k) {
    p.echo_dbm[k] = echoes.peak_powers[k];
    p.visible[k] = echoes.visible[k];
  }
  p.n_visible = echoes.n_visible;
  if (const Snapshot* snap = traj.find_snapshot("end-pulse-2")) {
    const auto profile = snapshot_excitation_profile(traj, snap->state.t);
    p.grating_r = extract_grating(profile, angular(sc.analysis.grating_window_hz)).R;
  }
  p.status = "ok";
  return p;
}

unsigned threads_from_env() {
  const char* env = std::getenv("NVECHO_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    throw ConfigError("NVECHO_THREADS", std::string("expected a positive integer, got '") + env + "'");
  }
  return static_cast<unsigned>(n);
}

SweepResult run_sweep(const SweepConfig& cfg, unsigned threads) {
  cfg.validate();
  if (threads == 0) threads = threads_from_env();
  SweepResult out;
  out.config = cfg;
  out.points.resize(cfg.values.size());
  for (std::size_t i = 0; i < cfg.values.size(); ++i) {
    out.points[i].value = cfg.values[i];
    out.points[i].echo_dbm.fill(kNegInf);
    out.points[i].grating_r = std::numeric_limits<double>::quiet_NaN();
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.values.size(); i = next++) {
      if (failed) return;
      try {
        out.points[i] = evaluate_point(cfg, cfg.values[i]);
      } catch (const std::exception& e) {
        out.points[i].status = "failed";
        out.points[i].message = e.what();
        failed = true;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cfg.values.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  out.complete = !failed;
  return out;
}

}  // namespace nvecho
