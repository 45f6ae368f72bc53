#include "nvecho/observables.hpp"

#include <cmath>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

double output_power_dbm(double n, double omega_c, double kappa1) {
  if (n < 0.0) throw AnalysisError("photon number must be >= 0");
  const double watts = kHbar * omega_c * kappa1 * n;
  if (watts == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(watts / kMilliwatt);
}

BlochVector bloch_components(Complex sigma12, double sigma22, double n_spins) {
  return {n_spins * sigma12.real(), -n_spins * sigma12.imag(), n_spins * (sigma22 - 0.5)};
}

DickeNumbers dicke_numbers(const BlochVector& j) {
  return {std::sqrt(j.jx * j.jx + j.jy * j.jy + j.jz * j.jz), j.jz};
}

BlochRecord bloch_record(Complex sigma12, double sigma22, double n_spins) {
  const BlochVector j = bloch_components(sigma12, sigma22, n_spins);
  return {j, dicke_numbers(j)};
}

PowerTrace power_trace(const Trajectory& traj, const CavityParams& cavity) {
  PowerTrace out;
  out.times = traj.times;
  out.photon_number.reserve(traj.size());
  out.power_dbm.reserve(traj.size());
  for (Complex a : traj.a) {
    const double n = photon_number(a);
    out.photon_number.push_back(n);
    out.power_dbm.push_back(output_power_dbm(n, cavity.omega_c, cavity.kappa1));
  }
  out.noise_floor_dbm =
      output_power_dbm(thermal_photon_number(cavity), cavity.omega_c, cavity.kappa1);
  return out;
}

std::vector<SnapshotRow> snapshot_rows(const Trajectory& traj, const SystemState& state) {
  if (state.size() != traj.omega_a.size()) {
    throw StructuralError("snapshot does not match the trajectory ensemble");
  }
  std::vector<SnapshotRow> rows;
  rows.reserve(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    // Normalizing by N_alpha is the same as evaluating with one spin.
    const BlochRecord r = bloch_record(state.sigma12[i], state.sigma22[i], 1.0);
    rows.push_back({ordinary(traj.omega_a[i] - traj.omega_c), r.dicke.m_bar, r.j.jx, r.j.jy,
                    r.j.jz, r.dicke.j_bar});
  }
  return rows;
}

std::vector<ProfilePoint> snapshot_excitation_profile(const Trajectory& traj, double t) {
  const Snapshot& snap = traj.nearest_snapshot(t);
  std::vector<ProfilePoint> out;
  for (const auto& r : snapshot_rows(traj, snap.state)) out.push_back({r.detuning_hz, r.m_bar_over_n});
  return out;
}

std::vector<ProfilePoint> snapshot_jx_profile(const Trajectory& traj, double t) {
  const Snapshot& snap = traj.nearest_snapshot(t);
  std::vector<ProfilePoint> out;
  for (const auto& r : snapshot_rows(traj, snap.state)) out.push_back({r.detuning_hz, r.jx_over_n});
  return out;
}

}  // namespace nvecho
