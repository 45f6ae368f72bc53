#include "nvecho/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

namespace {

struct Phase {
  double start = 0.0;
  double end = 0.0;
  double dt = 0.0;
  double amplitude = 0.0;
  /// Bound on |a| at the start of the phase from the empty-cavity drive response.
  double field_bound = 0.0;
};

void axpy(SystemState& out, const SystemState& y, double c, const StateDerivative& k) {
  out.a = y.a + c * k.da;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    out.sigma12[i] = y.sigma12[i] + c * k.dsigma12[i];
    out.sigma22[i] = y.sigma22[i] + c * k.dsigma22[i];
  }
}

void ensure_shape(Rk4Workspace& ws, std::size_t n) {
  if (ws.stage.size() != n) ws.stage = SystemState(n);
  for (StateDerivative* k : {&ws.k1, &ws.k2, &ws.k3, &ws.k4}) {
    if (k->dsigma12.size() != n) *k = StateDerivative(n);
  }
}

std::size_t step_count(double length, double dt) {
  const double n = std::ceil(length / dt - 1e-9);
  return static_cast<std::size_t>(std::max(1.0, n));
}

/// Empty-cavity bound on |a| reached after driving for `duration` from rest.
double driven_field_bound(const CavityParams& cavity, double amplitude, double duration) {
  const double half_kappa = 0.5 * cavity.kappa();
  return std::sqrt(cavity.kappa1) * amplitude / half_kappa * -std::expm1(-half_kappa * duration);
}

/// Appends a pulse, its graded ring-down and the following free evolution up to `until`.
void append_pulse(std::vector<Phase>& phases, double start, double end, double amplitude,
                  double until, const CavityParams& cavity, const IntegratorConfig& cfg,
                  double residual_field) {
  const double peak = residual_field + driven_field_bound(cavity, amplitude, end - start);
  phases.push_back({start, end, cfg.dt_pulse, amplitude, peak});

  const double halving = 2.0 * std::log(2.0) / cavity.kappa();
  const double ringdown_end = std::min(until, end + cfg.ringdown);
  double t = end;
  double dt = cfg.dt_pulse;
  double bound = peak;
  while (t < ringdown_end && dt < cfg.dt_free) {
    const double stop = std::min(ringdown_end, t + halving);
    phases.push_back({t, stop, dt, 0.0, bound});
    bound *= std::exp(-0.5 * cavity.kappa() * (stop - t));
    t = stop;
    dt = std::min(cfg.dt_free, 2.0 * dt);
  }
  if (t < until) {
    phases.push_back({t, until, cfg.dt_free, 0.0, bound});
  }
}

void check_accuracy(const MeanFieldSystem& system, const std::vector<Phase>& phases,
                    const IntegratorConfig& cfg) {
  const double detuning = system.max_spin_detuning();
  const double cavity_detuning = std::abs(system.cavity().omega_c - system.omega_d());
  const double g = system.max_coupling();
  if (cfg.dt_free * detuning >= cfg.max_phase_per_step) {
    std::ostringstream msg;
    msg << "accuracy guard: dt_free * max|omega_a - omega_d| = " << cfg.dt_free * detuning
        << " rad exceeds " << cfg.max_phase_per_step << "; reduce dt_free below "
        << cfg.max_phase_per_step / detuning << " s";
    throw ProtocolError(msg.str());
  }
  for (const auto& p : phases) {
    const double rate = std::max(detuning, cavity_detuning) + 2.0 * g * p.field_bound;
    if (p.dt * rate >= cfg.max_phase_per_step) {
      std::ostringstream msg;
      msg << "accuracy guard: phase [" << p.start << ", " << p.end << ") s advances "
          << p.dt * rate << " rad per step (limit " << cfg.max_phase_per_step
          << "); the drive-induced Rabi rate " << 2.0 * g * p.field_bound
          << " rad/s needs a smaller dt_pulse or a longer ringdown";
      throw ProtocolError(msg.str());
    }
  }
}

std::string format_time_event(double t) {
  std::ostringstream s;
  s.precision(9);
  s << "t=" << t;
  return s.str();
}

class Recorder {
 public:
  Recorder(Trajectory& traj, const RecordOptions& opts, int sample_every,
           std::vector<std::pair<std::string, double>> fixed_events,
           std::vector<std::pair<double, double>> echo_windows, std::vector<std::string> echo_names)
      : traj_(traj),
        sample_every_(std::max(1, sample_every)),
        fixed_(std::move(fixed_events)),
        windows_(std::move(echo_windows)),
        echo_names_(std::move(echo_names)),
        best_(windows_.size(), -1.0),
        best_state_(windows_.size()) {
    traj_.tracked = opts.tracked_classes;
    std::stable_sort(fixed_.begin(), fixed_.end(),
                     [](const auto& x, const auto& y) { return x.second < y.second; });
  }

  void observe(const SystemState& s, std::size_t step, double h, bool force_sample) {
    while (next_fixed_ < fixed_.size() && s.t >= fixed_[next_fixed_].second - 0.5 * h) {
      traj_.snapshots.push_back({fixed_[next_fixed_].first, s});
      ++next_fixed_;
    }
    const double n = std::norm(s.a);
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      if (s.t >= windows_[w].first && s.t < windows_[w].second && n > best_[w]) {
        best_[w] = n;
        best_state_[w] = s;
      }
    }
    if (force_sample || step % static_cast<std::size_t>(sample_every_) == 0) sample(s);
  }

  void finish() {
    for (std::size_t w = 0; w < windows_.size(); ++w) {
      if (best_[w] >= 0.0) traj_.snapshots.push_back({echo_names_[w], best_state_[w]});
    }
  }

 private:
  void sample(const SystemState& s) {
    if (!traj_.times.empty() && traj_.times.back() >= s.t) return;
    traj_.times.push_back(s.t);
    traj_.a.push_back(s.a);
    for (std::size_t idx : traj_.tracked) {
      traj_.tracked_sigma12.push_back(s.sigma12[idx]);
      traj_.tracked_sigma22.push_back(s.sigma22[idx]);
    }
    traj_.max_bloch_excess = std::max(traj_.max_bloch_excess, s.bloch_excess());
  }

  Trajectory& traj_;
  int sample_every_;
  std::vector<std::pair<std::string, double>> fixed_;
  std::size_t next_fixed_ = 0;
  std::vector<std::pair<double, double>> windows_;
  std::vector<std::string> echo_names_;
  std::vector<double> best_;
  std::vector<SystemState> best_state_;
};

void describe(Trajectory& traj, const CavityParams& cavity, std::span<const SubEnsemble> ens,
              double omega_d) {
  traj.omega_c = cavity.omega_c;
  traj.omega_d = omega_d;
  traj.kappa1 = cavity.kappa1;
  traj.omega_a.clear();
  traj.n_spins.clear();
  for (const auto& e : ens) {
    traj.omega_a.push_back(e.omega_a);
    traj.n_spins.push_back(e.n_spins);
  }
}

void check_tracked(const RecordOptions& record, std::size_t classes) {
  for (std::size_t idx : record.tracked_classes) {
    if (idx >= classes) {
      throw StructuralError("tracked class " + std::to_string(idx) + " out of range (" +
                            std::to_string(classes) + " classes)");
    }
  }
}

void integrate(const MeanFieldSystem& system, SystemState& state,
               const std::vector<Phase>& phases, Recorder& rec) {
  Rk4Workspace ws;
  std::size_t step = 0;
  rec.observe(state, 0, phases.empty() ? 0.0 : phases.front().dt, true);
  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    const Phase& p = phases[pi];
    const std::size_t n = step_count(p.end - p.start, p.dt);
    const double h = (p.end - p.start) / static_cast<double>(n);
    const double amplitude = p.amplitude;
    const RhsFunction f = [&system, amplitude](const SystemState& y, double, StateDerivative& out) {
      system.derivative(y, amplitude, out);
    };
    for (std::size_t k = 1; k <= n; ++k) {
      rk4_step(state, h, f, ws, step);
      state.t = p.start + static_cast<double>(k) * h;
      ++step;
      const bool last = pi + 1 == phases.size() && k == n;
      rec.observe(state, step, h, last);
    }
  }
}

}  // namespace

void HahnSequence::validate() const {
  if (!(t_pi2 > 0.0) || !(t_pi > 0.0)) throw StructuralError("pulse durations must be positive");
  if (!(tau > t_pi)) throw StructuralError("tau must exceed the pi pulse duration");
  if (!(t_total > 0.0)) throw StructuralError("t_total must be positive");
  if (!(omega_d > 0.0)) throw StructuralError("drive frequency must be positive");
  if (std::isnan(power_dbm)) throw StructuralError("drive power must not be NaN");
}

DriveParams HahnSequence::drive() const {
  const double amp = omega_from_power(power_dbm, omega_d);
  DriveParams d;
  d.omega_d = omega_d;
  d.segments = {{0.0, t_pi2, amp}, {second_pulse_start(), second_pulse_end(), amp}};
  return d;
}

void IntegratorConfig::validate() const {
  if (!(dt_pulse > 0.0) || !(dt_free > 0.0)) throw StructuralError("time steps must be positive");
  if (dt_pulse > dt_free) throw StructuralError("dt_pulse must not exceed dt_free");
  if (sample_every < 1) throw StructuralError("sample_every must be >= 1");
  if (!(ringdown >= 0.0)) throw StructuralError("ringdown must be >= 0");
  if (!(dt_relax > 0.0) || !(relax_time_constants > 0.0)) {
    throw StructuralError("relaxation stage parameters must be positive");
  }
  if (workers < 1) throw StructuralError("workers must be >= 1");
  if (!(max_phase_per_step > 0.0)) throw StructuralError("max_phase_per_step must be positive");
}

const Snapshot* Trajectory::find_snapshot(const std::string& event) const {
  for (const auto& s : snapshots) {
    if (s.event == event) return &s;
  }
  return nullptr;
}

const Snapshot& Trajectory::nearest_snapshot(double t) const {
  if (snapshots.empty()) throw AnalysisError("trajectory holds no snapshots");
  if (times.empty() || t < times.front() || t > times.back()) {
    throw AnalysisError("time " + std::to_string(t) + " s outside the trajectory");
  }
  const Snapshot* best = &snapshots.front();
  for (const auto& s : snapshots) {
    if (std::abs(s.state.t - t) < std::abs(best->state.t - t)) best = &s;
  }
  return *best;
}

double Trajectory::marker(const std::string& name) const {
  for (const auto& m : markers) {
    if (m.name == name) return m.t;
  }
  throw AnalysisError("no stage marker named " + name);
}

const std::vector<std::string>& protocol_events() {
  static const std::vector<std::string> events = {
      "post-cooling", "mid-pulse-1", "end-pulse-1", "mid-free-evolution",
      "end-free-evolution", "mid-pulse-2", "end-pulse-2", "first-echo", "second-echo"};
  return events;
}

const std::vector<std::string>& grating_events() {
  static const std::vector<std::string> events = {
      "post-cooling", "mid-pulse-1", "mid-free-evolution", "end-free-evolution",
      "mid-pulse-2", "end-pulse-2", "first-echo"};
  return events;
}

double omega_from_power(double power_dbm, double omega_d) {
  const double watts = kMilliwatt * std::pow(10.0, power_dbm / 10.0);
  return std::sqrt(watts / (kHbar * omega_d));
}

void rk4_step(SystemState& y, double h, const RhsFunction& f, Rk4Workspace& ws,
              std::size_t step_index) {
  if (!(h > 0.0)) throw StructuralError("rk4 step must be positive");
  const std::size_t n = y.size();
  ensure_shape(ws, n);
  const double t = y.t;
  f(y, t, ws.k1);
  axpy(ws.stage, y, 0.5 * h, ws.k1);
  f(ws.stage, t + 0.5 * h, ws.k2);
  axpy(ws.stage, y, 0.5 * h, ws.k2);
  f(ws.stage, t + 0.5 * h, ws.k3);
  axpy(ws.stage, y, h, ws.k3);
  f(ws.stage, t + h, ws.k4);

  const double c = h / 6.0;
  y.a += c * (ws.k1.da + 2.0 * ws.k2.da + 2.0 * ws.k3.da + ws.k4.da);
  double check = y.a.real() + y.a.imag();
  for (std::size_t i = 0; i < n; ++i) {
    y.sigma12[i] += c * (ws.k1.dsigma12[i] + 2.0 * ws.k2.dsigma12[i] + 2.0 * ws.k3.dsigma12[i] +
                         ws.k4.dsigma12[i]);
    y.sigma22[i] += c * (ws.k1.dsigma22[i] + 2.0 * ws.k2.dsigma22[i] + 2.0 * ws.k3.dsigma22[i] +
                         ws.k4.dsigma22[i]);
    check += y.sigma12[i].real() + y.sigma12[i].imag() + y.sigma22[i];
  }
  y.t = t + h;
  // Any NaN or infinity poisons the running sum.
  if (!std::isfinite(check)) {
    throw NumericError("non-finite state after RK4 step " + std::to_string(step_index),
                       static_cast<std::ptrdiff_t>(step_index));
  }
}

SystemState rk4_step(const SystemState& state, double dt, const RhsFunction& f) {
  SystemState y = state;
  Rk4Workspace ws;
  rk4_step(y, dt, f, ws);
  return y;
}

PreparedState prepare_initial_state(const CavityParams& cavity,
                                    std::span<const SubEnsemble> ensembles,
                                    const IntegratorConfig& config) {
  PreparedState out{thermal_steady_state(ensembles, true), cooled_steady_state(ensembles)};
  if (!config.validate_stages) return out;

  // Coherences and the field stay exactly zero without drive, so only the
  // populations relax; the step is set by the slowest longitudinal rate.
  std::vector<SubEnsemble> thermal_ens(ensembles.begin(), ensembles.end());
  for (auto& e : thermal_ens) e.eta = 0.0;
  auto relax = [&](std::span<const SubEnsemble> ens, SystemState start) {
    double slowest = std::numeric_limits<double>::infinity();
    for (const auto& e : ens) {
      if (e.population_decay() > 0.0) slowest = std::min(slowest, e.population_decay());
    }
    if (!std::isfinite(slowest)) return start;
    const MeanFieldSystem system(cavity, ens, cavity.omega_c, config.workers);
    const double duration = config.relax_time_constants / slowest;
    const std::size_t n = step_count(duration, config.dt_relax);
    const double h = duration / static_cast<double>(n);
    const RhsFunction f = [&system](const SystemState& y, double, StateDerivative& d) {
      system.derivative(y, 0.0, d);
    };
    Rk4Workspace ws;
    for (std::size_t k = 0; k < n; ++k) rk4_step(start, h, f, ws, k);
    start.t = 0.0;
    return start;
  };
  SystemState ground(ensembles.size());
  out.thermal = relax(thermal_ens, ground);
  out.cooled = relax(ensembles, out.thermal);
  return out;
}

Trajectory run_protocol(const CavityParams& cavity, std::span<const SubEnsemble> ensembles,
                        const HahnSequence& sequence, const IntegratorConfig& config,
                        const RecordOptions& record) {
  cavity.validate();
  sequence.validate();
  config.validate();
  check_tracked(record, ensembles.size());

  const MeanFieldSystem system(cavity, ensembles, sequence.omega_d, config.workers);
  const double amp = omega_from_power(sequence.power_dbm, sequence.omega_d);

  std::vector<Phase> phases;
  const double t2s = sequence.second_pulse_start();
  const double t2e = sequence.second_pulse_end();
  append_pulse(phases, 0.0, sequence.t_pi2, amp, t2s, cavity, config, 0.0);
  const double residual = phases.back().field_bound;
  append_pulse(phases, t2s, t2e, amp, sequence.horizon(), cavity, config, residual);
  check_accuracy(system, phases, config);

  PreparedState prepared = prepare_initial_state(cavity, ensembles, config);

  Trajectory traj;
  describe(traj, cavity, ensembles, sequence.omega_d);
  traj.markers = {{"thermal-equilibrium", 0.0},
                  {"post-cooling", 0.0},
                  {"pulse-1-start", 0.0},
                  {"pulse-1-end", sequence.t_pi2},
                  {"pulse-2-start", t2s},
                  {"pi-center", sequence.pi_center()},
                  {"pulse-2-end", t2e},
                  {"end", sequence.horizon()}};

  std::vector<std::pair<std::string, double>> fixed;
  std::vector<std::pair<double, double>> windows;
  std::vector<std::string> echo_names;
  const double tc = sequence.pi_center();
  auto echo_window = [&](int n, const std::string& name) {
    windows.emplace_back(tc + (n - 0.5) * sequence.tau, tc + (n + 0.5) * sequence.tau);
    echo_names.push_back(name);
  };
  for (const auto& ev : record.snapshot_events) {
    if (ev == "post-cooling") fixed.emplace_back(ev, 0.0);
    else if (ev == "mid-pulse-1") fixed.emplace_back(ev, 0.5 * sequence.t_pi2);
    else if (ev == "end-pulse-1") fixed.emplace_back(ev, sequence.t_pi2);
    else if (ev == "mid-free-evolution") fixed.emplace_back(ev, sequence.t_pi2 + 0.5 * sequence.tau);
    else if (ev == "end-free-evolution") fixed.emplace_back(ev, t2s);
    else if (ev == "mid-pulse-2") fixed.emplace_back(ev, t2s + 0.5 * sequence.t_pi);
    else if (ev == "end-pulse-2") fixed.emplace_back(ev, t2e);
    else if (ev == "first-echo") echo_window(1, ev);
    else if (ev == "second-echo") echo_window(2, ev);
    else if (ev.rfind("echo-", 0) == 0) {
      int n = 0;
      try {
        n = std::stoi(ev.substr(5));
      } catch (const std::exception&) {
        n = 0;
      }
      if (n < 1) throw StructuralError("bad echo event name: " + ev);
      echo_window(n, ev);
    } else {
      throw StructuralError("unknown snapshot event: " + ev);
    }
  }
  for (double t : record.snapshot_times) fixed.emplace_back(format_time_event(t), t);

  SystemState state = prepared.cooled;
  state.t = 0.0;
  Recorder rec(traj, record, config.sample_every, std::move(fixed), std::move(windows),
               std::move(echo_names));
  integrate(system, state, phases, rec);
  rec.finish();
  traj.steps = 0;
  for (const auto& p : phases) traj.steps += step_count(p.end - p.start, p.dt);
  return traj;
}

Trajectory run_free_evolution(const CavityParams& cavity, std::span<const SubEnsemble> ensembles,
                              const SystemState& initial, double omega_d, double horizon,
                              const IntegratorConfig& config, const RecordOptions& record) {
  cavity.validate();
  config.validate();
  check_tracked(record, ensembles.size());
  if (initial.size() != ensembles.size()) {
    throw StructuralError("initial state does not match the ensemble");
  }
  if (!(horizon > 0.0)) throw StructuralError("horizon must be positive");
  const MeanFieldSystem system(cavity, ensembles, omega_d, config.workers);
  std::vector<Phase> phases{{0.0, horizon, config.dt_free, 0.0, std::abs(initial.a)}};
  check_accuracy(system, phases, config);

  Trajectory traj;
  describe(traj, cavity, ensembles, omega_d);
  traj.markers = {{"start", 0.0}, {"end", horizon}};
  std::vector<std::pair<std::string, double>> fixed;
  for (const auto& ev : record.snapshot_events) {
    if (ev != "post-cooling" && ev != "start") {
      throw StructuralError("free evolution only supports the start snapshot, got " + ev);
    }
    fixed.emplace_back(ev, 0.0);
  }
  for (double t : record.snapshot_times) fixed.emplace_back(format_time_event(t), t);

  SystemState state = initial;
  state.t = 0.0;
  Recorder rec(traj, record, config.sample_every, std::move(fixed), {}, {});
  integrate(system, state, phases, rec);
  rec.finish();
  traj.steps = step_count(horizon, config.dt_free);
  return traj;
}

SystemState run_continuous_drive(const CavityParams& cavity,
                                 std::span<const SubEnsemble> ensembles,
                                 const SystemState& initial, double omega_d, double amplitude,
                                 double duration, double dt, unsigned workers) {
  const MeanFieldSystem system(cavity, ensembles, omega_d, workers);
  if (initial.size() != ensembles.size()) {
    throw StructuralError("initial state does not match the ensemble");
  }
  SystemState state = initial;
  const std::size_t n = step_count(duration, dt);
  const double h = duration / static_cast<double>(n);
  const RhsFunction f = [&system, amplitude](const SystemState& y, double, StateDerivative& d) {
    system.derivative(y, amplitude, d);
  };
  Rk4Workspace ws;
  const double t0 = state.t;
  for (std::size_t k = 1; k <= n; ++k) {
    rk4_step(state, h, f, ws, k - 1);
    state.t = t0 + static_cast<double>(k) * h;
  }
  return state;
}

}  // namespace nvecho
