// Linearized and time-domain reflection spectra of the main system on 21 probe points.

#include <cmath>
#include <iostream>

#include "nvecho/analysis.hpp"
#include "nvecho/constants.hpp"
#include "nvecho/scenario.hpp"

using namespace nvecho;

int main() {
  constexpr double kTol = 0.02;
  const ScenarioConfig& sc = builtin_scenario("spectrum-main");
  const auto ens = sc.build_ensemble();
  std::vector<double> grid;
  for (int k = -10; k <= 10; ++k) grid.push_back(angular(1e6) * k);

  SpectrumOptions opt;
  const ReflectionSpectrum lin = reflection_spectrum(sc.cavity_params(), ens, grid, opt);
  opt.method = SpectrumMethod::kTimeDomain;
  const ReflectionSpectrum td = reflection_spectrum(sc.cavity_params(), ens, grid, opt);

  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, std::abs(td.reflectance[i] - lin.reflectance[i]) / lin.reflectance[i]);
  }
  const bool ok = worst < kTol;
  std::cout << (ok ? "PASS" : "FAIL") << " spectrum-methods: max relative difference " << worst
            << " over 21 points, residual " << td.max_residual << std::endl;
  return ok ? 0 : 1;
}
