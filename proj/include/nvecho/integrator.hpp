#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nvecho/model.hpp"

namespace nvecho {

/// pi/2 - tau - pi drive sequence. Time zero is the start of the first pulse.
struct HahnSequence {
  double t_pi2 = 28e-9;      ///< s
  double t_pi = 56e-9;       ///< s
  double tau = 10e-6;        ///< gap between the end of pulse 1 and the start of pulse 2 (s)
  double omega_d = 0.0;      ///< rad/s
  double power_dbm = 12.0;
  double t_total = 80e-6;    ///< horizon after the end of pulse 2 (s)

  double second_pulse_start() const { return t_pi2 + tau; }
  double second_pulse_end() const { return t_pi2 + tau + t_pi; }
  /// Echo times are measured from here.
  double pi_center() const { return t_pi2 + tau + 0.5 * t_pi; }
  double horizon() const { return second_pulse_end() + t_total; }

  /// The rectangular envelope with Omega derived from `power_dbm`.
  DriveParams drive() const;

  void validate() const;

  bool operator==(const HahnSequence&) const = default;
};

struct IntegratorConfig {
  double dt_pulse = 1e-10;  ///< step inside drive pulses (s)
  double dt_free = 1e-9;    ///< step during free evolution (s)
  int sample_every = 10;    ///< cavity samples every n steps
  /// Length of the graded region after each pulse. Steps start at dt_pulse and
  /// double every 2 ln2 / kappa (one halving of the ring-down envelope) until dt_free.
  double ringdown = 0.0;
  /// Time-step the thermal and cooling stages instead of using the closed forms.
  bool validate_stages = false;
  double dt_relax = 1e-6;   ///< step for the relaxation stages (s)
  double relax_time_constants = 20.0;
  unsigned workers = 1;     ///< threads used inside one right-hand-side evaluation
  /// Upper bound on the phase advanced per step by detuning plus drive-induced Rabi rotation.
  double max_phase_per_step = 0.3;

  void validate() const;

  bool operator==(const IntegratorConfig&) const = default;
};

/// Per-sub-ensemble state captured at one instant.
struct Snapshot {
  std::string event;
  SystemState state;
};

struct StageMarker {
  std::string name;
  double t = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Complex> a;

  /// Indices of classes whose state is recorded at every cavity sample.
  std::vector<std::size_t> tracked;
  /// Row-major [sample][tracked] records.
  std::vector<Complex> tracked_sigma12;
  std::vector<double> tracked_sigma22;

  std::vector<Snapshot> snapshots;
  std::vector<StageMarker> markers;

  // Static description of the run, so analysis needs nothing else.
  std::vector<double> omega_a;
  std::vector<double> n_spins;
  double omega_c = 0.0;
  double omega_d = 0.0;
  double kappa1 = 0.0;

  std::size_t steps = 0;
  /// Largest |sigma12|^2 - sigma22 (1 - sigma22) seen at sample times.
  double max_bloch_excess = -0.25;

  std::size_t size() const { return times.size(); }
  const Snapshot* find_snapshot(const std::string& event) const;
  /// Snapshot closest in time to t; throws `AnalysisError` when there is none.
  const Snapshot& nearest_snapshot(double t) const;
  double marker(const std::string& name) const;
};

/// What to record beyond the decimated cavity trace.
struct RecordOptions {
  /// Protocol events: post-cooling, mid-pulse-1, end-pulse-1, mid-free-evolution,
  /// end-free-evolution, mid-pulse-2, end-pulse-2, first-echo, second-echo, echo-<n>.
  std::vector<std::string> snapshot_events;
  /// Extra snapshots at arbitrary times (named "t=<seconds>").
  std::vector<double> snapshot_times;
  std::vector<std::size_t> tracked_classes;
};

/// Events a Hahn-echo run understands; see `RecordOptions`.
const std::vector<std::string>& protocol_events();

/// The seven grating snapshots of the echo figure, in protocol order.
const std::vector<std::string>& grating_events();

/// Omega = sqrt(P / (hbar omega_d)), P = 1 mW 10^(dBm/10). Units s^-1/2.
double omega_from_power(double power_dbm, double omega_d);

struct Rk4Workspace {
  StateDerivative k1, k2, k3, k4;
  SystemState stage;
};

/// Right-hand side callback: (state, t, out).
using RhsFunction = std::function<void(const SystemState&, double, StateDerivative&)>;

/// Classical four-stage Runge-Kutta update of `state` in place, advancing `state.t` by dt.
/// Throws `NumericError` (index = step) when the result is not finite.
void rk4_step(SystemState& state, double dt, const RhsFunction& f, Rk4Workspace& ws,
              std::size_t step_index = 0);

/// Allocating convenience overload.
SystemState rk4_step(const SystemState& state, double dt, const RhsFunction& f);

/// Result of the two drive-free preparation stages.
struct PreparedState {
  SystemState thermal;
  SystemState cooled;
};

/// Stage 1 (thermal, eta = 0) and stage 2 (optical cooling). Closed form unless
/// `config.validate_stages`.
PreparedState prepare_initial_state(const CavityParams& cavity,
                                    std::span<const SubEnsemble> ensembles,
                                    const IntegratorConfig& config);

/// Three-stage Hahn-echo protocol. Throws `ProtocolError` when the accuracy guard fails.
Trajectory run_protocol(const CavityParams& cavity, std::span<const SubEnsemble> ensembles,
                        const HahnSequence& sequence, const IntegratorConfig& config,
                        const RecordOptions& record = {});

/// Drive-free evolution of `initial` for `horizon` seconds at step dt_free.
Trajectory run_free_evolution(const CavityParams& cavity, std::span<const SubEnsemble> ensembles,
                              const SystemState& initial, double omega_d, double horizon,
                              const IntegratorConfig& config, const RecordOptions& record = {});

/// Weak continuous drive at omega_d from `initial` for `duration`; returns the final state.
SystemState run_continuous_drive(const CavityParams& cavity,
                                 std::span<const SubEnsemble> ensembles,
                                 const SystemState& initial, double omega_d, double amplitude,
                                 double duration, double dt, unsigned workers = 1);

}  // namespace nvecho
