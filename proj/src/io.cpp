#include "nvecho/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"

namespace nvecho {

namespace {

std::string dbm_cell(double dbm) {
  return format_number(std::isfinite(dbm) ? dbm : kRenderFloorDbm);
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(where, "cannot parse number '" + s + "'");
  }
  return v;
}

}  // namespace

std::string version() { return NVECHO_VERSION; }

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

OutputWriter::OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path OutputWriter::write(const std::string& name, const std::string& content) {
  const std::lock_guard<std::mutex> lock(mutex_);
  const std::filesystem::path path = dir_ / name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string(), "cannot write file");
  out << content;
  if (!out) throw ConfigError(path.string(), "write failed");
  written_.push_back(path);
  return path;
}

std::string csv_preamble(const Json& config,
                         const std::vector<std::pair<std::string, std::string>>& extra) {
  std::string s = "# nvecho_version: " + version() + "\n";
  for (const auto& [k, v] : extra) s += "# " + k + ": " + v + "\n";
  s += "# config: " + config.dump() + "\n";
  return s;
}

std::string power_trace_csv(const Trajectory& traj, const PowerTrace& power, const Json& config) {
  std::string s = csv_preamble(config, {{"noise_floor_dbm", format_number(power.noise_floor_dbm)}});
  s += "t_s,re_a,im_a,photon_n,power_dbm\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    s += format_number(traj.times[i]) + "," + format_number(traj.a[i].real()) + "," +
         format_number(traj.a[i].imag()) + "," + format_number(power.photon_number[i]) + "," +
         dbm_cell(power.power_dbm[i]) + "\n";
  }
  return s;
}

std::string snapshot_csv(const std::vector<SnapshotRow>& rows, const std::string& event, double t,
                         const Json& config) {
  std::string s = csv_preamble(config, {{"event", event}, {"t_s", format_number(t)}});
  s += "detuning_hz,m_bar_over_n,jx_over_n,jy_over_n,jz_over_n,j_bar_over_n\n";
  for (const auto& r : rows) {
    s += format_number(r.detuning_hz) + "," + format_number(r.m_bar_over_n) + "," +
         format_number(r.jx_over_n) + "," + format_number(r.jy_over_n) + "," +
         format_number(r.jz_over_n) + "," + format_number(r.j_bar_over_n) + "\n";
  }
  return s;
}

std::string tracked_csv(const Trajectory& traj, const Json& config) {
  std::string s = csv_preamble(config);
  s += "t_s,class,detuning_hz,jx,jy,jz,j_bar,m_bar\n";
  const std::size_t m = traj.tracked.size();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t cls = traj.tracked[k];
      const BlochRecord r = bloch_record(traj.tracked_sigma12[i * m + k],
                                         traj.tracked_sigma22[i * m + k], traj.n_spins[cls]);
      s += format_number(traj.times[i]) + "," + std::to_string(cls) + "," +
           format_number(ordinary(traj.omega_a[cls] - traj.omega_c)) + "," +
           format_number(r.j.jx) + "," + format_number(r.j.jy) + "," + format_number(r.j.jz) +
           "," + format_number(r.dicke.j_bar) + "," + format_number(r.dicke.m_bar) + "\n";
    }
  }
  return s;
}

std::string spectrum_csv(const ReflectionSpectrum& spec, const Json& config) {
  std::string s = csv_preamble(config, {{"method", to_string(spec.method)},
                                        {"normalization", "far-detuned |r|^2 = " +
                                                              format_number(spec.normalization)}});
  s += "detuning_hz,reflectance\n";
  for (std::size_t i = 0; i < spec.detunings.size(); ++i) {
    s += format_number(ordinary(spec.detunings[i])) + "," + format_number(spec.reflectance[i]) +
         "\n";
  }
  return s;
}

std::string sweep_csv(const SweepResult& r) {
  std::string s = csv_preamble(to_json(r.config), {{"complete", r.complete ? "true" : "false"}});
  s += to_string(r.config.axis) +
       ",status,echo1_dbm,echo2_dbm,echo3_dbm,echo1_visible,echo2_visible,echo3_visible,"
       "grating_r,noise_floor_dbm,g_eff_hz,splitting_hz,regime\n";
  for (const auto& p : r.points) {
    s += format_number(p.value) + "," + p.status;
    for (double d : p.echo_dbm) s += "," + dbm_cell(d);
    for (bool v : p.visible) s += v ? ",1" : ",0";
    s += "," + format_number(p.grating_r) + "," + format_number(p.noise_floor_dbm) + "," +
         format_number(p.g_eff_hz) + "," + format_number(p.splitting_hz) + "," + p.regime + "\n";
  }
  return s;
}

Json echo_report_json(const EchoReport& rep) {
  Json j;
  j["peak_times_s"] = rep.peak_times;
  Json powers = Json::array();
  for (double d : rep.peak_powers) powers.push_back(finite_or_null(d));
  j["peak_powers_dbm"] = powers;
  j["peak_photons"] = rep.peak_photons;
  j["peak_fwhm_s"] = rep.peak_fwhm;
  Json vis = Json::array();
  for (bool v : rep.visible) vis.push_back(v);
  j["visible"] = vis;
  j["n_visible"] = rep.n_visible;
  j["period_estimate_s"] = rep.period_estimate ? Json(*rep.period_estimate) : Json(nullptr);
  j["noise_floor_dbm"] = finite_or_null(rep.noise_floor_dbm);
  j["time_reference"] = "pi-pulse center";
  return j;
}

Json grating_report_json(const GratingReport& rep) {
  return {{"f_hz", rep.f},
          {"inverse_f_s", rep.inverse_f},
          {"R", rep.R},
          {"low_confidence", rep.low_confidence},
          {"method", rep.method}};
}

Json spectrum_report_json(const ReflectionSpectrum& spec) {
  return {{"method", to_string(spec.method)},
          {"normalization", "far-detuned value"},
          {"far_detuned_raw_reflectance", spec.normalization},
          {"probe_amplitude", spec.probe_amplitude},
          {"max_residual", spec.max_residual},
          {"g_eff_hz", ordinary(spec.g_eff)},
          {"splitting_hz", ordinary(spec.splitting)},
          {"regime", to_string(spec.regime)},
          {"regime_rule", "dip splitting 2 g_eff compared with kappa and the inhomogeneous FWHM"}};
}

Json beats_report_json(const BeatsReport& rep) {
  return {{"strong_times_s", rep.strong_times},
          {"strong_photons", rep.strong_photons},
          {"strong_fwhm_s", rep.strong_fwhm},
          {"weak_times_s", rep.weak_times},
          {"weak_photons", rep.weak_photons}};
}

Json sweep_report_json(const SweepResult& r) {
  Json pts = Json::array();
  for (const auto& p : r.points) {
    Json echoes = Json::array();
    for (double d : p.echo_dbm) echoes.push_back(finite_or_null(d));
    Json vis = Json::array();
    for (bool v : p.visible) vis.push_back(v);
    pts.push_back({{"value", p.value},
                   {"status", p.status},
                   {"message", p.message},
                   {"echo_dbm", echoes},
                   {"visible", vis},
                   {"n_visible", p.n_visible},
                   {"grating_r", finite_or_null(p.grating_r)},
                   {"noise_floor_dbm", p.noise_floor_dbm},
                   {"g_eff_hz", p.g_eff_hz},
                   {"splitting_hz", p.splitting_hz},
                   {"regime", p.regime}});
  }
  return {{"axis", to_string(r.config.axis)},
          {"measure", to_string(r.config.measure)},
          {"complete", r.complete},
          {"points", pts}};
}

Json with_provenance(Json report, const Json& config) {
  Json j;
  j["nvecho_version"] = version();
  j["config"] = config;
  j["report"] = std::move(report);
  return j;
}

LoadedTrace read_power_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  LoadedTrace out;
  std::string line;
  bool header = false;
  bool have_config = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = line.substr(2, colon - 2);
      const std::string value = line.substr(colon + 2);
      if (key == "config") {
        try {
          out.config = Json::parse(value);
        } catch (const Json::parse_error& e) {
          throw ConfigError(path.string(), std::string("bad embedded config: ") + e.what());
        }
        have_config = true;
      } else if (key == "noise_floor_dbm") {
        out.power.noise_floor_dbm = value == "-inf" ? -std::numeric_limits<double>::infinity()
                                                    : parse_number(value, path.string());
      }
      continue;
    }
    if (!header) {
      if (line != "t_s,re_a,im_a,photon_n,power_dbm") {
        throw ConfigError(path.string(), "not a power-trace file (header '" + line + "')");
      }
      header = true;
      continue;
    }
    ++row;
    const auto cells = split(line, ',');
    if (cells.size() != 5) {
      throw ConfigError(path.string() + ":" + std::to_string(row), "expected 5 columns");
    }
    const std::string where = path.string() + ":" + std::to_string(row);
    out.power.times.push_back(parse_number(cells[0], where));
    out.re_a.push_back(parse_number(cells[1], where));
    out.im_a.push_back(parse_number(cells[2], where));
    const double n = parse_number(cells[3], where);
    out.power.photon_number.push_back(n);
    const double dbm = parse_number(cells[4], where);
    out.power.power_dbm.push_back(n > 0.0 ? dbm : -std::numeric_limits<double>::infinity());
  }
  if (!header) throw ConfigError(path.string(), "no header row");
  if (!have_config) throw ConfigError(path.string(), "no embedded config");
  return out;
}

}  // namespace nvecho
