#pragma once

#include <vector>

#include "nvecho/model.hpp"

namespace nvecho {

/// Rates shared by every class of a discretized ensemble (same units as `SubEnsemble`).
struct SpinRates {
  double g = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
  double chi = 0.0;

  bool operator==(const SpinRates&) const = default;
};

/// Gaussian inhomogeneous line cut into `n_classes` equally spaced classes.
struct GaussianEnsembleSpec {
  double n_total = 0.0;
  double center = 0.0;     ///< omega_s, rad/s
  double fwhm = 0.0;       ///< Gamma, rad/s
  int n_classes = 0;
  double spacing = 0.0;    ///< Delta, rad/s
  SpinRates rates;

  /// Standard deviation fwhm / (2 sqrt(2 ln 2)).
  double sigma() const;
  void validate() const;
};

enum class CombWeighting { kUniform, kGaussianEnvelope };

/// Odd number of classes on a comb of ordinary spacing `spacing_hz` around the center.
struct CombEnsembleSpec {
  int n_classes = 1;
  double spacing_hz = 0.0;
  double center = 0.0;     ///< rad/s
  double n_total = 0.0;
  CombWeighting weighting = CombWeighting::kGaussianEnvelope;
  double fwhm = 0.0;       ///< envelope FWHM (rad/s), used by kGaussianEnvelope
  SpinRates rates;

  void validate() const;
};

struct GaussianEnsemble {
  std::vector<SubEnsemble> classes;
  /// Grid span n_classes * spacing is below 3 FWHM, so the profile tails are cut.
  bool truncated = false;
};

/// Gaussian density of transition frequencies, normalized over omega (1 / (rad/s)).
double gaussian_density(double omega, double center, double sigma);

/// Midpoint discretization omega_alpha = omega_s + (alpha - n/2) Delta, alpha = 1..n,
/// N_alpha = N Delta pdf(omega_alpha). The truncated tail is not renormalized.
GaussianEnsemble build_gaussian(const GaussianEnsembleSpec& spec);

/// Classes at omega_s + m 2 pi f, m = -(n-1)/2 .. (n-1)/2.
std::vector<SubEnsemble> build_comb(const CombEnsembleSpec& spec);

}  // namespace nvecho
