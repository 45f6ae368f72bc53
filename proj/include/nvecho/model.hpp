#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace nvecho {

using Complex = std::complex<double>;

/// Single-mode microwave resonator. All rates are angular (rad/s).
struct CavityParams {
  double omega_c = 0.0;      ///< resonance frequency
  double kappa1 = 0.0;       ///< coupling (port) loss
  double kappa2 = 0.0;       ///< internal loss
  double temperature = 0.0;  ///< K

  double kappa() const { return kappa1 + kappa2; }

  /// Throws `StructuralError` when an invariant is violated.
  void validate() const;

  bool operator==(const CavityParams&) const = default;
};

/// One frequency class of identical two-level spins.
///
/// `eta` is a plain rate in 1/s; every other rate is angular.
struct SubEnsemble {
  double omega_a = 0.0;  ///< transition frequency (rad/s)
  double n_spins = 0.0;  ///< spin count, may be fractional
  double g = 0.0;        ///< single-spin coupling (rad/s)
  double gamma = 0.0;    ///< spin-lattice relaxation (rad/s)
  double eta = 0.0;      ///< optical polarization rate (1/s)
  double chi = 0.0;      ///< pure dephasing (rad/s)

  /// Transverse decay rate gamma + eta/2 + chi.
  double coherence_decay() const { return gamma + 0.5 * eta + chi; }

  /// Longitudinal decay rate 2 gamma + eta.
  double population_decay() const { return 2.0 * gamma + eta; }

  void validate() const;

  bool operator==(const SubEnsemble&) const = default;
};

/// Mean-field state in the frame rotating at the drive frequency.
struct SystemState {
  Complex a{};                  ///< cavity amplitude <a>
  std::vector<Complex> sigma12; ///< coherence <sigma^12> per sub-ensemble
  std::vector<double> sigma22;  ///< upper-level population per sub-ensemble
  double t = 0.0;               ///< s

  SystemState() = default;
  explicit SystemState(std::size_t classes) : sigma12(classes), sigma22(classes) {}

  std::size_t size() const { return sigma12.size(); }

  /// Largest |sigma12|^2 - sigma22 (1 - sigma22) over all classes; <= 0 on the Bloch ball.
  double bloch_excess() const;

  bool operator==(const SystemState&) const = default;
};

/// Time derivative of a `SystemState` (same shape, no timestamp).
struct StateDerivative {
  Complex da{};
  std::vector<Complex> dsigma12;
  std::vector<double> dsigma22;

  StateDerivative() = default;
  explicit StateDerivative(std::size_t classes) : dsigma12(classes), dsigma22(classes) {}
};

struct DriveSegment {
  double t_start = 0.0;    ///< s
  double t_end = 0.0;      ///< s
  double amplitude = 0.0;  ///< Omega, s^-1/2

  bool operator==(const DriveSegment&) const = default;
};

/// Rectangular drive envelope Omega(t) at carrier `omega_d`.
struct DriveParams {
  double omega_d = 0.0;  ///< rad/s
  std::vector<DriveSegment> segments;

  /// Omega(t); segments are half-open [t_start, t_end).
  double amplitude(double t) const;

  void validate() const;

  bool operator==(const DriveParams&) const = default;
};

/// Precomputed right-hand side of the first-order mean-field equations for a
/// fixed cavity, ensemble and drive carrier.
///
/// The cavity source term sum_alpha g N sigma12 is reduced in fixed blocks of
/// `kReductionBlock` classes whose partial sums are combined pairwise in a
/// fixed order, so the result does not depend on `workers`.
class MeanFieldSystem {
 public:
  static constexpr std::size_t kReductionBlock = 64;

  MeanFieldSystem(const CavityParams& cavity, std::span<const SubEnsemble> ensembles,
                  double omega_d, unsigned workers = 1);
  ~MeanFieldSystem();
  MeanFieldSystem(MeanFieldSystem&&) noexcept;
  MeanFieldSystem& operator=(MeanFieldSystem&&) noexcept;

  std::size_t size() const { return detuning_.size(); }
  unsigned workers() const;
  double omega_d() const { return omega_d_; }
  const CavityParams& cavity() const { return cavity_; }

  /// Writes d/dt of `state` under drive amplitude `omega_drive` into `out`.
  /// Does not validate; see `checked_derivative`.
  void derivative(const SystemState& state, double omega_drive, StateDerivative& out) const;

  /// As `derivative`, but checks shapes and finiteness first.
  void checked_derivative(const SystemState& state, double omega_drive,
                          StateDerivative& out) const;

  /// Largest |omega_alpha - omega_d| over classes (rad/s).
  double max_spin_detuning() const;
  double max_coupling() const;

 private:
  void kernel(const SystemState& state, double omega_drive, StateDerivative& out,
              std::size_t block_begin, std::size_t block_end) const;

  CavityParams cavity_;
  double omega_d_;
  double cavity_detuning_;
  double half_kappa_;
  double sqrt_kappa1_;
  std::vector<double> detuning_;
  std::vector<double> coherence_decay_;
  std::vector<double> population_decay_;
  std::vector<double> gamma_;
  std::vector<double> g_;
  std::vector<double> gn_;
  mutable std::vector<Complex> partial_;

  struct Pool;
  std::unique_ptr<Pool> pool_;
};

/// d/dt of `state` at time `t`. Throws `StructuralError` on shape mismatch
/// and `NumericError` on non-finite input.
StateDerivative rhs(const SystemState& state, const CavityParams& cavity,
                    std::span<const SubEnsemble> ensembles, const DriveParams& drive, double t);

/// Drive-free fixed point before optical pumping. With `eta_off` the
/// polarization rate is ignored and every population is 1/2.
SystemState thermal_steady_state(std::span<const SubEnsemble> ensembles, bool eta_off = true);

/// Drive-free fixed point under optical pumping, sigma22 = gamma / (2 gamma + eta).
SystemState cooled_steady_state(std::span<const SubEnsemble> ensembles);

/// Planck occupation 1 / (exp(hbar omega_c / k T) - 1).
double thermal_photon_number(const CavityParams& cavity);

}  // namespace nvecho
