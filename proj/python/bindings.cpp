#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nvecho/analysis.hpp"
#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"
#include "nvecho/integrator.hpp"
#include "nvecho/io.hpp"
#include "nvecho/model.hpp"
#include "nvecho/observables.hpp"
#include "nvecho/scenario.hpp"
#include "nvecho/validate.hpp"

namespace py = pybind11;
using namespace nvecho;

namespace {

ScenarioConfig resolve(const std::string& name, const std::string& overrides) {
  Json doc = to_json(resolve_scenario(name));
  if (!overrides.empty()) merge_json(doc, Json::parse(overrides));
  return scenario_from_json(doc);
}

py::dict echo_dict(const EchoReport& r) {
  py::dict d;
  d["peak_times_s"] = r.peak_times;
  d["peak_photons"] = r.peak_photons;
  d["peak_powers_dbm"] = r.peak_powers;
  d["peak_fwhm_s"] = r.peak_fwhm;
  d["visible"] = r.visible;
  d["n_visible"] = r.n_visible;
  d["period_estimate_s"] = r.period_estimate ? py::cast(*r.period_estimate) : py::none();
  d["noise_floor_dbm"] = r.noise_floor_dbm;
  return d;
}

/// Runs a Hahn-echo or free-evolution scenario and returns its cavity trace and report.
py::dict run(const std::string& name, const std::string& overrides) {
  const ScenarioConfig sc = resolve(name, overrides);
  const CavityParams cavity = sc.cavity_params();
  const auto ens = sc.build_ensemble();
  Trajectory traj;
  py::dict out;
  {
    py::gil_scoped_release release;
    if (sc.protocol == Protocol::kFreeEvolution) {
      traj = run_free_evolution(cavity, ens, sc.initial_state(ens), sc.omega_d(), sc.sequence.t_total,
                                sc.integrator, sc.record_options());
    } else {
      traj = run_protocol(cavity, ens, sc.hahn_sequence(), sc.integrator, sc.record_options());
    }
  }
  const PowerTrace power = power_trace(traj, cavity);
  out["config"] = to_json(sc).dump();
  out["times_s"] = power.times;
  out["photon_number"] = power.photon_number;
  out["power_dbm"] = power.power_dbm;
  out["noise_floor_dbm"] = power.noise_floor_dbm;
  out["max_bloch_excess"] = traj.max_bloch_excess;
  if (sc.protocol == Protocol::kFreeEvolution) {
    const BeatsReport b = analyze_beats(power, sc.sequence.tau);
    py::dict d;
    d["strong_times_s"] = b.strong_times;
    d["strong_fwhm_s"] = b.strong_fwhm;
    d["weak_times_s"] = b.weak_times;
    out["beats"] = d;
  } else {
    out["echoes"] = echo_dict(detect_echoes(power, sc.hahn_sequence()));
  }
  return out;
}

py::dict spectrum(const std::string& name, const std::string& overrides, const std::string& method) {
  const ScenarioConfig sc = resolve(name, overrides);
  SpectrumOptions opt;
  opt.method = method.empty() ? sc.analysis.spectrum_method : parse_spectrum_method(method);
  const auto grid = probe_grid(angular(sc.analysis.spectrum_span_hz), angular(sc.analysis.spectrum_step_hz));
  ReflectionSpectrum s;
  {
    py::gil_scoped_release release;
    s = reflection_spectrum(sc.cavity_params(), sc.build_ensemble(), grid, opt);
  }
  std::vector<double> hz;
  for (double d : s.detunings) hz.push_back(ordinary(d));
  py::dict out;
  out["detuning_hz"] = hz;
  out["reflectance"] = s.reflectance;
  out["g_eff_hz"] = ordinary(s.g_eff);
  out["splitting_hz"] = ordinary(s.splitting);
  out["regime"] = to_string(s.regime);
  out["method"] = to_string(s.method);
  return out;
}

}  // namespace

PYBIND11_MODULE(_nvecho, m) {
  m.doc() = "Mean-field spin-ensemble and cavity simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<AnalysisError>(m, "AnalysisError", PyExc_ValueError);
  py::register_exception<ProtocolError>(m, "ProtocolError", PyExc_RuntimeError);
  py::register_exception<StructuralError>(m, "StructuralError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("version", &version);
  m.def("scenario_names", [] {
    std::vector<std::string> names;
    for (const auto& [name, cfg] : builtin_scenarios()) names.push_back(name);
    return names;
  });
  m.def("scenario_json", [](const std::string& name, const std::string& overrides) {
    return to_json(resolve(name, overrides)).dump();
  }, py::arg("name"), py::arg("overrides") = "");
  m.def("run", &run, py::arg("name"), py::arg("overrides") = "");
  m.def("spectrum", &spectrum, py::arg("name"), py::arg("overrides") = "", py::arg("method") = "");

  m.def("omega_from_power", [](double dbm, double freq_hz) { return omega_from_power(dbm, angular(freq_hz)); },
        py::arg("power_dbm"), py::arg("frequency_hz"));
  m.def("thermal_photon_number", [](double freq_hz, double temperature) {
    return thermal_photon_number(CavityParams{angular(freq_hz), 1.0, 1.0, temperature});
  }, py::arg("frequency_hz"), py::arg("temperature_k"));
  m.def("cooled_population", [](double gamma_hz, double eta) {
    const std::vector<SubEnsemble> ens{{0.0, 1.0, 0.0, angular(gamma_hz), eta, 0.0}};
    return cooled_steady_state(ens).sigma22[0];
  }, py::arg("gamma_hz"), py::arg("eta"));
  m.def("output_power_dbm", [](double n, double freq_hz, double kappa1_hz) {
    return output_power_dbm(n, angular(freq_hz), angular(kappa1_hz));
  }, py::arg("photon_number"), py::arg("frequency_hz"), py::arg("kappa1_hz"));
  m.def("validate", [] {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& r : run_oracle_suite()) out.emplace_back(r.name, r.passed, r.detail);
    return out;
  });
}
