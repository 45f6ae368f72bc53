#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "nvecho/analysis.hpp"
#include "nvecho/observables.hpp"
#include "nvecho/scenario.hpp"
#include "nvecho/sweep.hpp"

namespace nvecho {

std::string version();

/// Shortest text that reads back to the same double; -inf renders as `kRenderFloorDbm`
/// only where noted by the caller.
std::string format_number(double x);

/// Serializes every file written into one output directory.
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }
  /// Writes `content` to dir/name (subdirectories created) and returns the full path.
  std::filesystem::path write(const std::string& name, const std::string& content);
  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::vector<std::filesystem::path> written_;
};

/// "# key: value" preamble lines carrying the code version and the resolved config.
std::string csv_preamble(const Json& config, const std::vector<std::pair<std::string, std::string>>& extra = {});

/// Columns t_s, re_a, im_a, photon_n, power_dbm.
std::string power_trace_csv(const Trajectory& traj, const PowerTrace& power, const Json& config);

/// Columns detuning_hz, m_bar_over_n, jx_over_n, jy_over_n, jz_over_n, j_bar_over_n.
std::string snapshot_csv(const std::vector<SnapshotRow>& rows, const std::string& event, double t,
                         const Json& config);

/// Long format: t_s, class, detuning_hz, jx, jy, jz, j_bar, m_bar (spin units).
std::string tracked_csv(const Trajectory& traj, const Json& config);

/// Columns detuning_hz, reflectance.
std::string spectrum_csv(const ReflectionSpectrum& spec, const Json& config);

std::string sweep_csv(const SweepResult& result);

Json echo_report_json(const EchoReport& rep);
Json grating_report_json(const GratingReport& rep);
Json spectrum_report_json(const ReflectionSpectrum& spec);
Json beats_report_json(const BeatsReport& rep);
Json sweep_report_json(const SweepResult& result);

/// Wraps a report with the version and resolved config.
Json with_provenance(Json report, const Json& config);

struct LoadedTrace {
  PowerTrace power;
  std::vector<double> re_a;
  std::vector<double> im_a;
  Json config;
};

/// Reads a power-trace CSV written by `power_trace_csv`.
LoadedTrace read_power_trace(const std::filesystem::path& path);

}  // namespace nvecho
