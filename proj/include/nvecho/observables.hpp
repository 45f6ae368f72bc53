#pragma once

#include <limits>
#include <vector>

#include "nvecho/integrator.hpp"
#include "nvecho/model.hpp"

namespace nvecho {

/// Power value used for n = 0 in textual outputs (dBm).
inline constexpr double kRenderFloorDbm = -400.0;

struct PowerTrace {
  std::vector<double> times;
  std::vector<double> photon_number;
  std::vector<double> power_dbm;  ///< -inf where photon_number == 0
  double noise_floor_dbm = -std::numeric_limits<double>::infinity();
};

struct BlochVector {
  double jx = 0.0;
  double jy = 0.0;
  double jz = 0.0;
};

struct DickeNumbers {
  double j_bar = 0.0;
  double m_bar = 0.0;
};

/// Bloch vector and Dicke numbers of one class.
struct BlochRecord {
  BlochVector j;
  DickeNumbers dicke;
};

/// One point of a per-class profile against detuning (omega_a - omega_c) / 2 pi.
struct ProfilePoint {
  double detuning_hz = 0.0;
  double value = 0.0;
};

/// Full per-class record used for snapshot files.
struct SnapshotRow {
  double detuning_hz = 0.0;
  double m_bar_over_n = 0.0;
  double jx_over_n = 0.0;
  double jy_over_n = 0.0;
  double jz_over_n = 0.0;
  double j_bar_over_n = 0.0;
};

inline double photon_number(Complex a) { return std::norm(a); }

/// 10 log10(hbar omega_c kappa1 n / 1 mW); -inf for n == 0.
double output_power_dbm(double n, double omega_c, double kappa1);

/// Jx = N Re sigma12, Jy = -N Im sigma12, Jz = N (sigma22 - 1/2).
BlochVector bloch_components(Complex sigma12, double sigma22, double n_spins);

/// J_bar = |J|, M_bar = Jz (first-order closure <J_i^2> ~ <J_i>^2).
DickeNumbers dicke_numbers(const BlochVector& j);

BlochRecord bloch_record(Complex sigma12, double sigma22, double n_spins);

/// Photon number and output power of a trajectory, with the thermal floor of `cavity`.
PowerTrace power_trace(const Trajectory& traj, const CavityParams& cavity);

/// M_bar / N_alpha at the snapshot nearest `t`.
std::vector<ProfilePoint> snapshot_excitation_profile(const Trajectory& traj, double t);

/// Jx / N_alpha at the snapshot nearest `t`.
std::vector<ProfilePoint> snapshot_jx_profile(const Trajectory& traj, double t);

/// All normalized per-class quantities of one state.
std::vector<SnapshotRow> snapshot_rows(const Trajectory& traj, const SystemState& state);

}  // namespace nvecho
