// Acceptance suite: one PASS/FAIL line per criterion. Exit status 1 when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nvecho/analysis.hpp"
#include "nvecho/constants.hpp"
#include "nvecho/integrator.hpp"
#include "nvecho/model.hpp"
#include "nvecho/observables.hpp"
#include "nvecho/scenario.hpp"
#include "nvecho/sweep.hpp"

using namespace nvecho;

namespace {

// Tolerances.
constexpr double kCooledTarget = -0.313;
constexpr double kCooledTol = 0.001;
constexpr double kFreeDecayTol = 1e-6;
constexpr double kSplitTargetHz = 3.0e6;
constexpr double kSplitTolHz = 0.3e6;
constexpr double kCollectiveHalfSplitHz = 1.54e6;
constexpr double kEchoTimingTol = 0.02;
constexpr int kMinVisibleEchoes = 3;
constexpr double kGratingSlopeTol = 0.05;
constexpr double kGratingInterceptTol = 0.05;  // fraction of the mean tau
constexpr double kJxTol = 0.15;
constexpr double kEtaRiseGainDb = 20.0;
constexpr double kEtaPlateauSpanDb = 6.0;
constexpr double kEtaDeclineDb = 3.0;
constexpr double kGeffStepHz = 0.02e6;  // probe grid step; dip positions are resolved to this
constexpr double kBeatsTimingTol = 0.05;
constexpr double kStrongSplitHz = 12e6;
constexpr double kStrongSplitTol = 0.10;
constexpr double kStepHalvingTol = 1e-3;
constexpr double kBlochTol = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 5) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

double worst_bloch_excess = -1.0;

void note_bloch(const Trajectory& t) { worst_bloch_excess = std::max(worst_bloch_excess, t.max_bloch_excess); }

struct EchoRun {
  ScenarioConfig config;
  Trajectory traj;
  PowerTrace power;
  EchoReport echoes;
};

EchoRun run_echo(const ScenarioConfig& sc) {
  EchoRun r;
  r.config = sc;
  const auto ens = sc.build_ensemble();
  r.traj = run_protocol(sc.cavity_params(), ens, sc.hahn_sequence(), sc.integrator, sc.record_options());
  note_bloch(r.traj);
  r.power = power_trace(r.traj, sc.cavity_params());
  r.echoes = detect_echoes(r.power, sc.hahn_sequence());
  return r;
}

const EchoRun& fig2() {
  static const EchoRun run = [] {
    ScenarioConfig sc = builtin_scenario("fig2-echoes");
    sc.analysis.tracked_classes.clear();
    return run_echo(sc);
  }();
  return run;
}

Outcome cooling_fixed_point() {
  const SubEnsemble e{0.0, 1.0, 0.0, angular(23.7), 500.0, 0.0};
  const std::vector<SubEnsemble> ens{e};
  const double m = cooled_steady_state(ens).sigma22[0] - 0.5;
  return {std::abs(m - kCooledTarget) <= kCooledTol, "M/N = " + fmt(m, 6)};
}

Outcome free_decay() {
  const CavityParams c = builtin_scenario("fig2-echoes").cavity_params();
  const SubEnsemble e{c.omega_c + angular(0.7e6), 1e10, 0.0, angular(23.7), 500.0, angular(0.014e6)};
  const std::vector<SubEnsemble> ens{e};
  SystemState init(1);
  init.sigma12[0] = Complex(0.3, 0.1);
  init.sigma22[0] = 0.5;
  IntegratorConfig cfg;
  cfg.sample_every = 100;
  RecordOptions rec;
  rec.tracked_classes = {0};
  const Trajectory t = run_free_evolution(c, ens, init, c.omega_c, 10e-6, cfg, rec);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Complex exact = init.sigma12[0] * std::exp(Complex(-e.coherence_decay(), -(e.omega_a - c.omega_c)) * t.times[i]);
    worst = std::max(worst, std::abs(t.tracked_sigma12[i] - exact) / std::abs(exact));
  }
  return {worst < kFreeDecayTol, "max relative error " + fmt(worst, 3) + " over 10 us"};
}

ReflectionSpectrum spectrum_of(const ScenarioConfig& sc) {
  const auto grid = probe_grid(angular(sc.analysis.spectrum_span_hz), angular(sc.analysis.spectrum_step_hz));
  return reflection_spectrum(sc.cavity_params(), sc.build_ensemble(), grid);
}

Outcome rabi_splitting() {
  const ScenarioConfig& sc = builtin_scenario("spectrum-main");
  const ReflectionSpectrum s = spectrum_of(sc);
  const double split = ordinary(s.splitting);
  const double collective = sc.ensemble.g_hz * std::sqrt(sc.ensemble.n_total);
  const bool ok = std::abs(split - kSplitTargetHz) <= kSplitTolHz &&
                  std::abs(collective - kCollectiveHalfSplitHz) <= 0.01 * kCollectiveHalfSplitHz;
  return {ok, "dip splitting " + fmt(split / 1e6, 4) + " MHz (target 3.0 +- 0.3); g sqrt(N) = " +
                  fmt(collective / 1e6, 4) + " MHz, measured half-splitting " + fmt(split / 2e6, 4) + " MHz"};
}

Outcome echo_train() {
  const EchoRun& r = fig2();
  const double tau = r.config.sequence.tau;
  std::string times;
  bool timing = true;
  int checked = 0;
  for (std::size_t k = 0; k < r.echoes.peak_times.size(); ++k) {
    if (!r.echoes.visible[k]) continue;
    ++checked;
    const double expected = checked * tau;
    const double dev = (r.echoes.peak_times[k] - expected) / expected;
    times += (times.empty() ? "" : ", ") + fmt(r.echoes.peak_times[k] * 1e6, 5) + " us (" +
             fmt(100 * dev, 3) + "%)";
    if (checked <= kMinVisibleEchoes && std::abs(dev) > kEchoTimingTol) timing = false;
  }
  const bool ok = r.echoes.n_visible >= kMinVisibleEchoes && timing;
  return {ok, std::to_string(r.echoes.n_visible) + " visible echoes at " + times};
}

Outcome echo_timing_short_gap() {
  ScenarioConfig sc = builtin_scenario("fig2-echoes");
  sc.sequence.tau = 5e-6;
  sc.sequence.t_total = 8e-6;
  sc.analysis.snapshots.clear();
  sc.analysis.tracked_classes.clear();
  const EchoRun r = run_echo(sc);
  if (r.echoes.peak_times.empty()) return {false, "no echo found"};
  const double dev = r.echoes.peak_times[0] / sc.sequence.tau - 1.0;
  return {std::abs(dev) <= kEchoTimingTol,
          "first echo " + fmt(r.echoes.peak_times[0] * 1e6, 5) + " us after the pi center (" + fmt(100 * dev, 3) + "%)"};
}

Outcome grating_law() {
  std::vector<double> taus{5e-6, 10e-6, 15e-6, 20e-6}, fs;
  std::string list;
  for (double tau : taus) {
    ScenarioConfig sc = builtin_scenario("fig2-echoes");
    sc.sequence.tau = tau;
    sc.sequence.t_total = 0.5e-6;
    sc.analysis.snapshots = {"end-pulse-2"};
    sc.analysis.tracked_classes.clear();
    const auto ens = sc.build_ensemble();
    const Trajectory t = run_protocol(sc.cavity_params(), ens, sc.hahn_sequence(), sc.integrator, sc.record_options());
    note_bloch(t);
    const Snapshot* snap = t.find_snapshot("end-pulse-2");
    const GratingReport g =
        extract_grating(snapshot_excitation_profile(t, snap->state.t), angular(sc.analysis.grating_window_hz));
    fs.push_back(g.f);
    list += (list.empty() ? "" : ", ") + fmt(1e6 / g.f, 5);
  }
  const LineFit fit = fit_f_tau(taus, fs);
  const double mean_tau = 12.5e-6;
  const bool ok = std::abs(fit.slope - 1.0) <= kGratingSlopeTol &&
                  std::abs(fit.intercept) <= kGratingInterceptTol * mean_tau;
  return {ok, "1/f = " + list + " us; slope " + fmt(fit.slope, 5) + ", intercept " +
                  fmt(fit.intercept * 1e6, 4) + " us"};
}

Outcome jx_periods() {
  const EchoRun& r = fig2();
  const double window = angular(r.config.analysis.grating_window_hz);
  const Snapshot* first = r.traj.find_snapshot("first-echo");
  const Snapshot* second = r.traj.find_snapshot("second-echo");
  const double f1 = jx_grating_period(r.traj, first->state.t, window);
  const double f2 = jx_grating_period(r.traj, second->state.t, window);
  const bool ok = std::abs(f1 / 0.1e6 - 1.0) <= kJxTol && std::abs(f2 / 0.05e6 - 1.0) <= kJxTol;
  return {ok, "first echo " + fmt(f1 / 1e6, 4) + " MHz, second echo " + fmt(f2 / 1e6, 4) + " MHz"};
}

std::vector<double> first_echo_dbm(const SweepResult& r) {
  std::vector<double> out;
  for (const auto& p : r.points) {
    if (p.status != "ok") throw std::runtime_error("sweep point " + fmt(p.value) + " " + p.status + ": " + p.message);
    out.push_back(p.echo_dbm[0]);
  }
  return out;
}

std::string join_db(const std::vector<double>& v) {
  std::string s;
  for (double d : v) s += (s.empty() ? "" : " ") + fmt(d, 4);
  return s;
}

Outcome sweep_trends() {
  const auto& sweeps = builtin_sweeps();
  const SweepConfig& power_cfg = sweeps.at("fig3-power-sweep");
  const SweepConfig& detuning_cfg = sweeps.at("fig3-detuning-sweep");
  const SweepConfig& eta_cfg = sweeps.at("fig3-eta-sweep");
  const auto power = first_echo_dbm(run_sweep(power_cfg, 1));
  const auto detuning = first_echo_dbm(run_sweep(detuning_cfg, 1));
  const auto eta = first_echo_dbm(run_sweep(eta_cfg, 1));

  const bool power_ok = std::is_sorted(power.begin(), power.end()) && power.back() > power.front();

  const auto arg = static_cast<std::size_t>(std::max_element(detuning.begin(), detuning.end()) - detuning.begin());
  const bool detuning_ok = detuning_cfg.values[arg] == 0.0;

  auto at = [&](double v) {
    const auto it = std::find(eta_cfg.values.begin(), eta_cfg.values.end(), v);
    return eta[static_cast<std::size_t>(it - eta_cfg.values.begin())];
  };
  bool rise = true;
  for (std::size_t i = 0; i + 1 < eta_cfg.values.size() && eta_cfg.values[i + 1] <= 400.0; ++i) {
    if (eta[i + 1] < eta[i]) rise = false;
  }
  rise = rise && at(400.0) - at(0.1) >= kEtaRiseGainDb;
  const double plateau_hi = std::max({at(400.0), at(2e3), at(2e4)});
  const double plateau_lo = std::min({at(400.0), at(2e3), at(2e4)});
  const double rise_per_decade = (at(400.0) - at(10.0)) / std::log10(40.0);
  const double plateau_per_decade = std::abs(at(2e4) - at(400.0)) / std::log10(50.0);
  const bool plateau = plateau_hi - plateau_lo <= kEtaPlateauSpanDb && plateau_per_decade < rise_per_decade;
  const bool decline = at(1e5) <= at(2e4) - kEtaDeclineDb;

  std::string detail = "power [" + join_db(power) + "] dBm " + (power_ok ? "monotone" : "NOT monotone") +
                       "; detuning argmax " + fmt(detuning_cfg.values[arg] / 1e6) + " MHz; eta [" + join_db(eta) +
                       "] dBm rise " + (rise ? "ok" : "no") + ", plateau " + (plateau ? "ok" : "no") + " (span " +
                       fmt(plateau_hi - plateau_lo, 3) + " dB), decline " + (decline ? "ok" : "no") + " (" +
                       fmt(at(2e4) - at(1e5), 3) + " dB)";
  return {power_ok && detuning_ok && rise && plateau && decline, detail};
}

Outcome regimes() {
  const SweepConfig& cfg = builtin_sweeps().at("figS7-regimes");
  const SweepResult r = run_sweep(cfg, 1);
  std::string detail;
  bool ok = true;
  double prev = -1.0;
  bool monotone = true;
  for (const auto& p : r.points) {
    if (p.status != "ok") return {false, "point " + fmt(p.value) + " failed: " + p.message};
    if (p.g_eff_hz + kGeffStepHz < prev) monotone = false;
    prev = std::max(prev, p.g_eff_hz);
    const std::string want = p.value == 2e2 ? "weak" : p.value == 4e2 ? "crossover" : p.value == 2e4 ? "strong" : "";
    if (!want.empty()) {
      ok = ok && p.regime == want;
      detail += "eta " + fmt(p.value) + ": " + p.regime + " (2g_eff " + fmt(2 * p.g_eff_hz / 1e6, 3) + " MHz); ";
    }
  }
  detail += monotone ? "g_eff non-decreasing" : "g_eff decreases";
  return {ok && monotone, detail};
}

BeatsReport beats_of(const std::string& name) {
  const ScenarioConfig& sc = builtin_scenario(name);
  const auto ens = sc.build_ensemble();
  const Trajectory t = run_free_evolution(sc.cavity_params(), ens, sc.initial_state(ens), sc.omega_d(),
                                          sc.sequence.t_total, sc.integrator, sc.record_options());
  note_bloch(t);
  return analyze_beats(power_trace(t, sc.cavity_params()), sc.sequence.tau);
}

Outcome beats() {
  const double tau = builtin_scenario("fig4-beats-3").sequence.tau;
  const BeatsReport b3 = beats_of("fig4-beats-3");
  const BeatsReport b5 = beats_of("fig4-beats-5");
  const BeatsReport b99 = beats_of("fig4-beats-99");
  bool timing = b3.strong_times.size() >= 2;
  for (std::size_t k = 0; k < b3.strong_times.size(); ++k) {
    const double expected = static_cast<double>(k + 1) * tau;
    if (std::abs(b3.strong_times[k] - expected) > kBeatsTimingTol * expected) timing = false;
  }
  bool weaker = !b3.weak_times.empty();
  for (std::size_t k = 0; k < b3.weak_times.size() && k < b3.strong_photons.size(); ++k) {
    if (!(b3.weak_photons[k] < b3.strong_photons[k])) weaker = false;
  }
  const bool have = !b3.strong_fwhm.empty() && !b5.strong_fwhm.empty() && !b99.strong_fwhm.empty();
  const bool narrowing = have && b5.strong_fwhm[0] < b3.strong_fwhm[0] && b99.strong_fwhm[0] < b5.strong_fwhm[0];
  std::string detail = "3-class strong peaks " + std::to_string(b3.strong_times.size()) + ", weak peaks " +
                       std::to_string(b3.weak_times.size());
  if (have) {
    detail += "; first-peak FWHM 3/5/99: " + fmt(b3.strong_fwhm[0] * 1e6, 3) + "/" + fmt(b5.strong_fwhm[0] * 1e6, 3) +
              "/" + fmt(b99.strong_fwhm[0] * 1e6, 3) + " us";
  }
  return {timing && weaker && narrowing, detail};
}

Outcome strong_case() {
  ScenarioConfig sc = builtin_scenario("figS6-strong");
  const ReflectionSpectrum s = spectrum_of(sc);
  const double split = ordinary(s.splitting);
  sc.analysis.snapshots.clear();
  sc.analysis.tracked_classes.clear();
  const EchoRun strong = run_echo(sc);
  const EchoRun& weak = fig2();
  const bool split_ok = std::abs(split / kStrongSplitHz - 1.0) <= kStrongSplitTol;
  const bool echoes = !strong.echoes.peak_fwhm.empty() && !weak.echoes.peak_fwhm.empty();
  const bool sharper = echoes && strong.echoes.peak_fwhm[0] < weak.echoes.peak_fwhm[0];
  std::string detail = "splitting " + fmt(split / 1e6, 4) + " MHz";
  if (echoes) {
    detail += "; first-echo FWHM " + fmt(strong.echoes.peak_fwhm[0] * 1e6, 3) + " us vs " +
              fmt(weak.echoes.peak_fwhm[0] * 1e6, 3) + " us";
  }
  return {split_ok && sharper, detail};
}

/// Linear interpolation of (t, v) at x.
double sample(const std::vector<double>& t, const std::vector<double>& v, double x) {
  const auto it = std::lower_bound(t.begin(), t.end(), x);
  if (it == t.begin()) return v.front();
  if (it == t.end()) return v.back();
  const auto i = static_cast<std::size_t>(it - t.begin());
  const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * v[i - 1] + w * v[i];
}

Outcome numerics() {
  const EchoRun& base = fig2();
  ScenarioConfig sc = base.config;
  sc.integrator.dt_pulse *= 0.5;
  sc.integrator.dt_free *= 0.5;
  sc.integrator.sample_every *= 2;
  sc.analysis.snapshots.clear();
  const EchoRun fine = run_echo(sc);
  const auto& n0 = base.power.photon_number;
  double peak = 0.0, diff = 0.0, echo_diff = 0.0, echo_peak = 0.0;
  const double tc = base.config.hahn_sequence().pi_center();
  for (std::size_t i = 0; i < n0.size(); ++i) {
    const double t = base.power.times[i];
    const double d = std::abs(n0[i] - sample(fine.power.times, fine.power.photon_number, t));
    peak = std::max(peak, n0[i]);
    diff = std::max(diff, d);
    if (t > tc + 0.5 * base.config.sequence.tau) {
      echo_peak = std::max(echo_peak, n0[i]);
      echo_diff = std::max(echo_diff, d);
    }
  }
  const double rel = diff / peak;
  const bool ok = rel < kStepHalvingTol && worst_bloch_excess <= kBlochTol;
  return {ok, "relative Linf change " + fmt(rel, 3) + " (after the pi pulse " + fmt(echo_diff / echo_peak, 3) +
                  "); worst Bloch excess " + fmt(worst_bloch_excess, 3)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cooling-fixed-point", cooling_fixed_point},
      {"free-decay-oracle", free_decay},
      {"rabi-splitting", rabi_splitting},
      {"echo-train", echo_train},
      {"echo-timing-5us", echo_timing_short_gap},
      {"grating-law", grating_law},
      {"jx-grating-periods", jx_periods},
      {"sweep-trends", sweep_trends},
      {"regime-classification", regimes},
      {"beats", beats},
      {"strong-coupling", strong_case},
      {"numerics", numerics},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << fmt(secs, 3) << " s]"
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
