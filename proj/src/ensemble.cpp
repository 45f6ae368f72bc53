#include "nvecho/ensemble.hpp"

#include <cmath>
#include <numeric>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

namespace {

SubEnsemble make_class(double omega, double count, const SpinRates& r) {
  return SubEnsemble{omega, count, r.g, r.gamma, r.eta, r.chi};
}

void validate_rates(const SpinRates& r) {
  if (!(r.g >= 0.0) || !(r.gamma >= 0.0) || !(r.eta >= 0.0) || !(r.chi >= 0.0)) {
    throw StructuralError("ensemble rates must be >= 0");
  }
}

}  // namespace

double GaussianEnsembleSpec::sigma() const { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

void GaussianEnsembleSpec::validate() const {
  if (n_classes < 1) throw StructuralError("n_classes must be >= 1");
  if (!(spacing > 0.0)) throw StructuralError("class spacing must be positive");
  if (!(fwhm > 0.0)) throw StructuralError("fwhm must be positive");
  if (!(n_total >= 0.0)) throw StructuralError("n_total must be >= 0");
  validate_rates(rates);
}

void CombEnsembleSpec::validate() const {
  if (n_classes < 1 || n_classes % 2 == 0) throw StructuralError("comb n_classes must be odd");
  if (!(spacing_hz > 0.0)) throw StructuralError("comb spacing must be positive");
  if (!(n_total >= 0.0)) throw StructuralError("n_total must be >= 0");
  if (weighting == CombWeighting::kGaussianEnvelope && !(fwhm > 0.0)) {
    throw StructuralError("gaussian-envelope weighting needs a positive fwhm");
  }
  validate_rates(rates);
}

double gaussian_density(double omega, double center, double sigma) {
  const double z = (omega - center) / sigma;
  return std::exp(-0.5 * z * z) / (std::sqrt(kTwoPi) * sigma);
}

GaussianEnsemble build_gaussian(const GaussianEnsembleSpec& spec) {
  spec.validate();
  GaussianEnsemble out;
  out.truncated = spec.spacing * spec.n_classes < 3.0 * spec.fwhm;
  out.classes.reserve(static_cast<std::size_t>(spec.n_classes));
  const double sigma = spec.sigma();
  const double half = 0.5 * spec.n_classes;
  for (int alpha = 1; alpha <= spec.n_classes; ++alpha) {
    const double omega = spec.center + (alpha - half) * spec.spacing;
    const double count = spec.n_total * spec.spacing * gaussian_density(omega, spec.center, sigma);
    out.classes.push_back(make_class(omega, count, spec.rates));
  }
  return out;
}

std::vector<SubEnsemble> build_comb(const CombEnsembleSpec& spec) {
  spec.validate();
  const int n = spec.n_classes;
  const int m_max = (n - 1) / 2;
  const double step = angular(spec.spacing_hz);
  std::vector<double> weight(static_cast<std::size_t>(n), 1.0);
  if (spec.weighting == CombWeighting::kGaussianEnvelope) {
    const double sigma = spec.fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    for (int m = -m_max; m <= m_max; ++m) {
      weight[static_cast<std::size_t>(m + m_max)] =
          gaussian_density(spec.center + m * step, spec.center, sigma);
    }
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<SubEnsemble> out;
  out.reserve(weight.size());
  for (int m = -m_max; m <= m_max; ++m) {
    const double w = weight[static_cast<std::size_t>(m + m_max)] / total;
    out.push_back(make_class(spec.center + m * step, spec.n_total * w, spec.rates));
  }
  return out;
}

}  // namespace nvecho
