#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nvecho/integrator.hpp"
#include "nvecho/model.hpp"
#include "nvecho/observables.hpp"

namespace nvecho {

struct EchoReport {
  std::vector<double> peak_times;      ///< s, from the pi-pulse center
  std::vector<double> peak_photons;
  std::vector<double> peak_powers;     ///< dBm
  std::vector<double> peak_fwhm;       ///< s
  std::vector<bool> visible;           ///< above the thermal floor
  int n_visible = 0;
  std::optional<double> period_estimate;  ///< s
  double noise_floor_dbm = 0.0;
};

struct GratingReport {
  double f = 0.0;        ///< oscillation period along detuning (Hz)
  double R = 0.0;        ///< half peak-to-valley of the central oscillation
  double inverse_f = 0.0;  ///< 1/f (s)
  bool low_confidence = false;
  std::string method = "dft-parabolic";
};

enum class CouplingRegime { kWeak, kCrossover, kStrong };
enum class SpectrumMethod { kLinearized, kTimeDomain };

std::string to_string(CouplingRegime r);
std::string to_string(SpectrumMethod m);
SpectrumMethod parse_spectrum_method(const std::string& s);

struct SpectrumOptions {
  SpectrumMethod method = SpectrumMethod::kLinearized;
  /// Probe photon number stays below this fraction of the single-spin saturation number.
  double probe_saturation_fraction = 1e-3;
  /// Time-domain: settle for this many slowest-coherence lifetimes.
  double settle_lifetimes = 10.0;
  double dt = 2e-9;
  /// Time-domain: allowed |a(T + 1 us) - a(T)| / |a(T)|.
  double residual_tolerance = 1e-3;
  unsigned workers = 1;
};

struct ReflectionSpectrum {
  std::vector<double> detunings;    ///< omega_d - omega_c (rad/s)
  std::vector<double> reflectance;  ///< |r|^2 normalized to the far-detuned value
  double normalization = 1.0;       ///< far-detuned raw |r|^2
  double probe_amplitude = 0.0;     ///< Omega used (s^-1/2)
  double max_residual = 0.0;        ///< time-domain convergence residual
  SpectrumMethod method = SpectrumMethod::kLinearized;
  double g_eff = 0.0;               ///< rad/s, half the dip splitting
  double splitting = 0.0;           ///< rad/s
  CouplingRegime regime = CouplingRegime::kWeak;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
};

struct CouplingEstimate {
  double g_eff = 0.0;      ///< rad/s
  double splitting = 0.0;  ///< rad/s
  std::vector<double> dips;  ///< detunings of the dips (rad/s)
  bool single_dip = true;
};

struct BeatsReport {
  std::vector<double> strong_times;   ///< s
  std::vector<double> strong_photons;
  std::vector<double> strong_fwhm;    ///< s
  std::vector<double> weak_times;
  std::vector<double> weak_photons;
};

/// Interpolated index of a local extremum through three samples; returns the vertex offset in [-1, 1].
double parabolic_offset(double left, double center, double right);

/// Full width at half maximum of the peak at `index`, searching no further than [lo, hi).
double peak_fwhm(std::span<const double> times, std::span<const double> values, std::size_t index,
                 std::size_t lo, std::size_t hi);

/// Echo peaks after the pi pulse: local maxima that dominate +-tau/2.
EchoReport detect_echoes(const PowerTrace& power, const HahnSequence& sequence);

/// Dominant oscillation of a uniformly sampled profile within |detuning| <= window/2pi.
/// `window` is a half-width in rad/s.
GratingReport extract_grating(std::span<const ProfilePoint> profile, double window);

/// Period (Hz) of Jx / N_alpha against detuning at the snapshot nearest `t`.
double jx_grating_period(const Trajectory& traj, double t, double window);
GratingReport jx_grating(const Trajectory& traj, double t, double window);

/// Least-squares fit of 1/f against tau.
LineFit fit_f_tau(std::span<const double> taus, std::span<const double> fs);

/// Reflection of a weak probe with the spins at their cooled fixed point.
/// `probe_grid` holds omega_d - omega_c values (rad/s).
ReflectionSpectrum reflection_spectrum(const CavityParams& cavity,
                                       std::span<const SubEnsemble> ensembles,
                                       std::span<const double> probe_grid,
                                       const SpectrumOptions& options = {});

/// Uniform grid of detunings covering +-span with `step` (both rad/s).
std::vector<double> probe_grid(double span, double step);

/// Half the gap between the two most prominent dips; zero for single-dip spectra.
CouplingEstimate extract_geff(const ReflectionSpectrum& spectrum, double min_prominence = 0.01);

/// Compares the dip splitting 2 g_eff with kappa and the inhomogeneous FWHM.
CouplingRegime classify_regime(double g_eff, double kappa, double fwhm);

/// Strong peaks near n tau and the weaker maxima between them.
BeatsReport analyze_beats(const PowerTrace& power, double tau);

}  // namespace nvecho
