#include "nvecho/cli.hpp"

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "nvecho/analysis.hpp"
#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"
#include "nvecho/io.hpp"
#include "nvecho/observables.hpp"
#include "nvecho/scenario.hpp"
#include "nvecho/sweep.hpp"
#include "nvecho/validate.hpp"

namespace nvecho {

namespace {

struct Options {
  std::string scenario;
  std::string config;
  std::string out;
  std::string method;
  unsigned workers = 0;
  unsigned threads = 0;
  int classes = 3;
  double tau = 10e-6;
};

void write_free_run(const ScenarioConfig& sc, OutputWriter& w, std::ostream& out) {
  const Json cfg = to_json(sc);
  const CavityParams cavity = sc.cavity_params();
  const auto ens = sc.build_ensemble();
  const SystemState init = sc.initial_state(ens);
  const Trajectory traj = run_free_evolution(cavity, ens, init, sc.omega_d(), sc.sequence.t_total,
                                             sc.integrator, sc.record_options());
  const PowerTrace power = power_trace(traj, cavity);
  const BeatsReport beats = analyze_beats(power, sc.sequence.tau);
  w.write("scenario.json", cfg.dump(2) + "\n");
  w.write("power_trace.csv", power_trace_csv(traj, power, cfg));
  w.write("beats_report.json", with_provenance(beats_report_json(beats), cfg).dump(2) + "\n");
  if (!traj.tracked.empty()) w.write("tracked.csv", tracked_csv(traj, cfg));
  out << sc.name << ": " << beats.strong_times.size() << " strong and " << beats.weak_times.size()
      << " weak peaks\n";
  for (std::size_t k = 0; k < beats.strong_times.size(); ++k) {
    out << "  strong t = " << beats.strong_times[k] << " s, n = " << beats.strong_photons[k]
        << ", fwhm = " << beats.strong_fwhm[k] << " s\n";
  }
}

void write_echo_run(const ScenarioConfig& sc, OutputWriter& w, std::ostream& out) {
  const Json cfg = to_json(sc);
  const CavityParams cavity = sc.cavity_params();
  const auto ens = sc.build_ensemble();
  const HahnSequence seq = sc.hahn_sequence();
  if (sc.ensemble_truncated()) {
    out << "warning: class grid spans less than 3 FWHM; profile tails are truncated\n";
  }
  const Trajectory traj = run_protocol(cavity, ens, seq, sc.integrator, sc.record_options());
  const PowerTrace power = power_trace(traj, cavity);
  const EchoReport echoes = detect_echoes(power, seq);

  w.write("scenario.json", cfg.dump(2) + "\n");
  w.write("power_trace.csv", power_trace_csv(traj, power, cfg));
  w.write("echo_report.json", with_provenance(echo_report_json(echoes), cfg).dump(2) + "\n");
  if (!traj.tracked.empty()) w.write("tracked.csv", tracked_csv(traj, cfg));

  Json gratings = Json::object();
  const double window = angular(sc.analysis.grating_window_hz);
  for (const auto& snap : traj.snapshots) {
    w.write("snapshots/" + snap.event + ".csv",
            snapshot_csv(snapshot_rows(traj, snap.state), snap.event, snap.state.t, cfg));
    Json entry;
    entry["t_s"] = snap.state.t;
    try {
      entry["excitation"] = grating_report_json(
          extract_grating(snapshot_excitation_profile(traj, snap.state.t), window));
    } catch (const AnalysisError& e) {
      entry["excitation"] = {{"error", e.what()}};
    }
    try {
      entry["jx"] = grating_report_json(jx_grating(traj, snap.state.t, window));
    } catch (const AnalysisError& e) {
      entry["jx"] = {{"error", e.what()}};
    }
    gratings[snap.event] = entry;
  }
  if (!traj.snapshots.empty()) {
    w.write("grating_report.json", with_provenance(gratings, cfg).dump(2) + "\n");
  }

  out << sc.name << ": " << echoes.peak_times.size() << " echo peaks, " << echoes.n_visible
      << " above the thermal floor (" << echoes.noise_floor_dbm << " dBm)\n";
  for (std::size_t k = 0; k < echoes.peak_times.size() && k < 5; ++k) {
    out << "  echo " << k + 1 << ": t = " << echoes.peak_times[k] << " s, "
        << echoes.peak_powers[k] << " dBm\n";
  }
}

void cmd_run(const Options& o, std::ostream& out) {
  ScenarioConfig sc = resolve_scenario(o.scenario, o.config);
  if (o.workers) sc.integrator.workers = o.workers;
  OutputWriter w(o.out.empty() ? sc.output_dir : o.out);
  if (sc.protocol == Protocol::kFreeEvolution) {
    write_free_run(sc, w, out);
  } else {
    write_echo_run(sc, w, out);
  }
  out << "wrote " << w.written().size() << " files to " << w.dir().string() << "\n";
}

void cmd_spectrum(const Options& o, std::ostream& out) {
  const ScenarioConfig sc = resolve_scenario(o.scenario, o.config);
  SpectrumOptions opt;
  opt.method = o.method.empty() ? sc.analysis.spectrum_method : parse_spectrum_method(o.method);
  opt.workers = o.workers ? o.workers : threads_from_env();
  const auto grid =
      probe_grid(angular(sc.analysis.spectrum_span_hz), angular(sc.analysis.spectrum_step_hz));
  const ReflectionSpectrum spec = reflection_spectrum(sc.cavity_params(), sc.build_ensemble(), grid, opt);
  const Json cfg = to_json(sc);
  OutputWriter w(o.out.empty() ? sc.output_dir : o.out);
  w.write("spectrum.csv", spectrum_csv(spec, cfg));
  w.write("spectrum_report.json", with_provenance(spectrum_report_json(spec), cfg).dump(2) + "\n");
  out << sc.name << ": dip splitting " << ordinary(spec.splitting) << " Hz, g_eff "
      << ordinary(spec.g_eff) << " Hz, regime " << to_string(spec.regime) << "\n";
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const SweepConfig cfg = resolve_sweep(o.scenario);
  const SweepResult r = run_sweep(cfg, o.threads);
  OutputWriter w(o.out.empty() ? cfg.output_dir : o.out);
  w.write("sweep.csv", sweep_csv(r));
  w.write("sweep_report.json",
          with_provenance(sweep_report_json(r), to_json(cfg)).dump(2) + "\n");
  for (const auto& p : r.points) {
    out << to_string(cfg.axis) << " = " << p.value << ": " << p.status;
    if (p.status == "ok" && cfg.measure == SweepMeasure::kEchoes) {
      out << ", echoes " << p.echo_dbm[0] << " / " << p.echo_dbm[1] << " / " << p.echo_dbm[2]
          << " dBm, R = " << p.grating_r;
    } else if (p.status == "ok") {
      out << ", splitting " << p.splitting_hz << " Hz, " << p.regime;
    } else if (!p.message.empty()) {
      out << " (" << p.message << ")";
    }
    out << "\n";
  }
  if (!r.complete) {
    out << "sweep aborted; partial results saved in " << w.dir().string() << "\n";
    return 1;
  }
  return 0;
}

void cmd_beats(const Options& o, std::ostream& out) {
  if (o.classes < 1 || o.classes % 2 == 0) {
    throw ConfigError("--classes", "must be a positive odd number");
  }
  if (!(o.tau > 0.0)) throw ConfigError("--tau", "must be positive");
  const ScenarioConfig sc = beats_scenario(o.classes, o.tau);
  OutputWriter w(o.out.empty() ? sc.output_dir : o.out);
  write_free_run(sc, w, out);
  out << "wrote " << w.written().size() << " files to " << w.dir().string() << "\n";
}

void cmd_analyze(const Options& o, std::ostream& out) {
  const LoadedTrace trace = read_power_trace(o.scenario);
  const ScenarioConfig sc = scenario_from_json(trace.config);
  Json report;
  if (sc.protocol == Protocol::kFreeEvolution) {
    report = beats_report_json(analyze_beats(trace.power, sc.sequence.tau));
  } else {
    report = echo_report_json(detect_echoes(trace.power, sc.hahn_sequence()));
  }
  const std::string text = with_provenance(report, trace.config).dump(2) + "\n";
  if (!o.out.empty()) {
    OutputWriter w(o.out);
    w.write(sc.protocol == Protocol::kFreeEvolution ? "beats_report.json" : "echo_report.json", text);
  }
  out << report.dump(2) << "\n";
}

int cmd_validate(std::ostream& out) {
  int failed = 0;
  for (const auto& r : run_oracle_suite()) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    if (!r.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field simulator of superradiant spin echoes in a microwave cavity", "nvecho"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Run a scenario: trajectory, snapshots, echo report");
  run->add_option("scenario", o.scenario, "Builtin scenario name or scenario file")->required();
  run->add_option("--config", o.config, "JSON file merged over the scenario");
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--workers", o.workers, "Threads inside one right-hand side");

  auto* spectrum = app.add_subcommand("spectrum", "Reflection spectrum and coupling regime");
  spectrum->add_option("scenario", o.scenario, "Builtin scenario name or scenario file")->required();
  spectrum->add_option("--config", o.config, "JSON file merged over the scenario");
  spectrum->add_option("--method", o.method, "linearized or time-domain")
      ->check(CLI::IsMember({"linearized", "time-domain"}));
  spectrum->add_option("--out", o.out, "Output directory");
  spectrum->add_option("--workers", o.workers, "Threads over probe frequencies");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep (NVECHO_THREADS sets parallelism)");
  sweep->add_option("sweep", o.scenario, "Builtin sweep name or sweep file")->required();
  sweep->add_option("--out", o.out, "Output directory");
  sweep->add_option("--threads", o.threads, "Concurrent sweep points (overrides NVECHO_THREADS)");

  auto* beats = app.add_subcommand("beats", "Superradiant beats of a discrete comb");
  beats->add_option("--classes", o.classes, "Odd number of comb classes")->required();
  beats->add_option("--tau", o.tau, "Comb period 1/f in seconds")->required();
  beats->add_option("--out", o.out, "Output directory");

  auto* analyze = app.add_subcommand("analyze", "Recompute reports from a power_trace.csv");
  analyze->add_option("trajectory", o.scenario, "power_trace.csv written by run")->required();
  analyze->add_option("--out", o.out, "Directory for the recomputed report");

  auto* validate = app.add_subcommand("validate", "Run the analytic oracle suite");
  auto* list = app.add_subcommand("list", "List builtin scenarios and sweeps");
  auto* show = app.add_subcommand("show", "Print a resolved scenario as JSON");
  show->add_option("scenario", o.scenario, "Builtin scenario name or scenario file")->required();
  show->add_option("--config", o.config, "JSON file merged over the scenario");

  std::vector<const char*> argv;
  argv.push_back("nvecho");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      cmd_run(o, out);
    } else if (spectrum->parsed()) {
      cmd_spectrum(o, out);
    } else if (sweep->parsed()) {
      return cmd_sweep(o, out);
    } else if (beats->parsed()) {
      cmd_beats(o, out);
    } else if (analyze->parsed()) {
      cmd_analyze(o, out);
    } else if (validate->parsed()) {
      return cmd_validate(out);
    } else if (list->parsed()) {
      for (const auto& [name, sc] : builtin_scenarios()) out << "scenario " << name << "\n";
      for (const auto& [name, sw] : builtin_sweeps()) out << "sweep " << name << "\n";
    } else if (show->parsed()) {
      out << to_json(resolve_scenario(o.scenario, o.config)).dump(2) << "\n";
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cli_dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args, std::cout, std::cerr);
}

}  // namespace nvecho
