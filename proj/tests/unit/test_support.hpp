#pragma once

#include <vector>

#include "nvecho/constants.hpp"
#include "nvecho/ensemble.hpp"
#include "nvecho/integrator.hpp"
#include "nvecho/model.hpp"

namespace nvecho::test {

/// A 400-class version of the main system with a 5 us echo, fast enough for unit tests.
struct SmallSystem {
  CavityParams cavity;
  std::vector<SubEnsemble> ensemble;
  HahnSequence sequence;
  IntegratorConfig config;
};

inline SmallSystem small_system(double eta = 500.0) {
  SmallSystem s;
  s.cavity = {angular(9.8e9), angular(0.95e6), angular(0.89e6), 293.0};
  GaussianEnsembleSpec spec;
  spec.n_total = 7.3e13;
  spec.center = s.cavity.omega_c;
  spec.fwhm = angular(3.3e6);
  spec.n_classes = 400;
  spec.spacing = 0.2e6;
  spec.rates = {angular(0.18), angular(23.7), eta, angular(0.014e6)};
  s.ensemble = build_gaussian(spec).classes;
  s.sequence.tau = 5e-6;
  s.sequence.t_total = 12e-6;
  s.sequence.omega_d = s.cavity.omega_c;
  s.sequence.power_dbm = 12.0;
  return s;
}

}  // namespace nvecho::test
