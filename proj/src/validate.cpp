#include "nvecho/validate.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "nvecho/analysis.hpp"
#include "nvecho/constants.hpp"
#include "nvecho/integrator.hpp"
#include "nvecho/model.hpp"
#include "nvecho/observables.hpp"

namespace nvecho {

namespace {

CavityParams main_cavity() { return {angular(9.8e9), angular(0.95e6), angular(0.89e6), 293.0}; }

/// Steps `state` for `duration` with constant drive `omega`.
void propagate(const MeanFieldSystem& sys, SystemState& state, double omega, double duration,
               double dt) {
  const auto n = static_cast<std::size_t>(std::llround(duration / dt));
  const RhsFunction f = [&](const SystemState& y, double, StateDerivative& d) {
    sys.derivative(y, omega, d);
  };
  Rk4Workspace ws;
  for (std::size_t k = 0; k < n; ++k) rk4_step(state, dt, f, ws, k);
}

double cavity_decay_error(double dt) {
  CavityParams c = main_cavity();
  const std::vector<SubEnsemble> none;
  const MeanFieldSystem sys(c, none, c.omega_c);
  SystemState s(0);
  s.a = 1.0;
  const double t = 1.0 / c.kappa();
  const auto n = static_cast<std::size_t>(std::llround(t / dt));
  propagate(sys, s, 0.0, static_cast<double>(n) * dt, dt);
  return std::abs(s.a - std::exp(-0.5 * c.kappa() * static_cast<double>(n) * dt));
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

OracleResult check(const std::string& name, bool ok, const std::string& detail) {
  return {name, ok, detail};
}

}  // namespace

std::vector<OracleResult> run_oracle_suite() {
  std::vector<OracleResult> out;

  {
    const CavityParams c = main_cavity();
    SubEnsemble e{c.omega_c + angular(1e6), 1e9, 0.0, angular(23.7), 500.0, angular(0.014e6)};
    const std::vector<SubEnsemble> ens{e};
    const MeanFieldSystem sys(c, ens, c.omega_c);
    SystemState s(1);
    s.sigma12[0] = Complex(0.3, 0.1);
    s.sigma22[0] = 0.5;
    const Complex s0 = s.sigma12[0];
    const double t = 10e-6;
    propagate(sys, s, 0.0, t, 1e-9);
    const Complex exact =
        s0 * std::exp(Complex(-e.coherence_decay(), -(e.omega_a - c.omega_c)) * t);
    const double err = std::abs(s.sigma12[0] - exact) / std::abs(exact);
    out.push_back(check("free-decay closed form", err < 1e-6, "relative error " + fmt(err)));
  }

  {
    const double err = cavity_decay_error(1e-9);
    out.push_back(check("damped cavity e^-1/2", err < 1e-8, "abs error " + fmt(err)));
    const double coarse = cavity_decay_error(8.0 / angular(1.84e6) / 64.0);
    const double fine = cavity_decay_error(4.0 / angular(1.84e6) / 64.0);
    const double ratio = coarse / fine;
    out.push_back(check("rk4 fourth order", ratio > 14.0 && ratio < 18.0, "error ratio " + fmt(ratio)));
  }

  {
    const double n = thermal_photon_number(main_cavity());
    out.push_back(check("thermal occupation 9.8 GHz", std::abs(n - 622.0) < 1.0, "n_th " + fmt(n)));
  }

  {
    const SubEnsemble e{0.0, 1.0, 0.0, angular(23.7), 500.0, 0.0};
    const std::vector<SubEnsemble> ens{e};
    const SystemState s = cooled_steady_state(ens);
    const double m = s.sigma22[0] - 0.5;
    out.push_back(check("cooled fixed point", std::abs(m + 0.3134) < 1e-4, "M/N " + fmt(m)));

    IntegratorConfig cfg;
    cfg.validate_stages = true;
    const PreparedState numeric = prepare_initial_state(main_cavity(), ens, cfg);
    const double err = std::max(std::abs(numeric.thermal.sigma22[0] - 0.5),
                                std::abs(numeric.cooled.sigma22[0] - s.sigma22[0]));
    out.push_back(check("stage relaxation", err < 1e-6, "max deviation " + fmt(err)));
  }

  {
    const CavityParams c = main_cavity();
    const std::vector<SubEnsemble> none;
    const std::vector<double> grid{0.0};
    const ReflectionSpectrum spec = reflection_spectrum(c, none, grid);
    const double expected = std::pow(1.0 - 2.0 * c.kappa1 / c.kappa(), 2);
    const double err = std::abs(spec.reflectance[0] * spec.normalization - expected) / expected;
    out.push_back(check("empty cavity reflectance", err < 1e-9, "relative error " + fmt(err)));

    const MeanFieldSystem sys(c, none, c.omega_c);
    SystemState s(0);
    const double omega = 1e3;
    propagate(sys, s, omega, 60.0 / c.kappa(), 1e-9);
    const double n_exact = 4.0 * c.kappa1 * omega * omega / (c.kappa() * c.kappa());
    const double rel = std::abs(photon_number(s.a) - n_exact) / n_exact;
    out.push_back(check("driven cavity steady state", rel < 1e-9, "relative error " + fmt(rel)));
  }

  {
    const BlochRecord r = bloch_record(Complex(-0.5, 0.0), 0.5, 100.0);
    const bool ok = r.j.jx == -50.0 && r.j.jy == 0.0 && r.j.jz == 0.0 && r.dicke.j_bar == 50.0;
    out.push_back(check("pure state along -x", ok, "Jx " + fmt(r.j.jx)));
  }

  return out;
}

}  // namespace nvecho
