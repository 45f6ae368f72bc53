#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "nvecho/constants.hpp"
#include "nvecho/errors.hpp"
#include "nvecho/scenario.hpp"

using namespace nvecho;

namespace {

std::string error_key(const Json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const ConfigError& e) {
    return e.key_path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("every builtin survives a json round trip") {
  for (const auto& [name, cfg] : builtin_scenarios()) {
    CAPTURE(name);
    const ScenarioConfig back = scenario_from_json(to_json(cfg));
    CHECK(back == cfg);
    CHECK(to_json(back).dump() == to_json(cfg).dump());
  }
}

TEST_CASE("main-text parameters") {
  const ScenarioConfig& cfg = builtin_scenario("fig2-echoes");
  const CavityParams c = cfg.cavity_params();
  CHECK(c.omega_c == doctest::Approx(angular(9.8e9)));
  CHECK(c.kappa() == doctest::Approx(angular(1.84e6)));
  CHECK(cfg.ensemble.n_total == 7.3e13);
  CHECK(cfg.ensemble.eta == 500.0);
  CHECK(cfg.drive.power_dbm == 12.0);
  CHECK(cfg.sequence.tau == 10e-6);
  CHECK(cfg.sequence.t_total == 80e-6);
  const auto ens = cfg.build_ensemble();
  CHECK(ens.size() == 2000);
  CHECK(ens[999].omega_a == doctest::Approx(c.omega_c));
  CHECK(ens[999].g == doctest::Approx(angular(0.18)));
  CHECK_FALSE(cfg.ensemble_truncated());
  CHECK(cfg.fwhm() == doctest::Approx(angular(3.3e6)).epsilon(1e-3));
  CHECK(cfg.omega_d() == c.omega_c);
  const SystemState s = cfg.initial_state(ens);
  CHECK(s.sigma22[0] == doctest::Approx(148.91 / (2 * 148.91 + 500.0)).epsilon(1e-4));
}

TEST_CASE("strong-coupling scenario") {
  const ScenarioConfig& cfg = builtin_scenario("figS6-strong");
  const double gamma = angular(25.0), eta = 1e3;
  const double p = eta / (2 * gamma + eta);
  CHECK(cfg.ensemble.n_total == doctest::Approx(std::pow(6e6 / 12.0, 2) / p).epsilon(1e-9));
  CHECK(cfg.cavity.kappa1_hz + cfg.cavity.kappa2_hz == doctest::Approx(0.8e6));
  CHECK(cfg.drive.power_dbm == 50.0);
  CHECK(std::sqrt(cfg.ensemble.n_total * p) * cfg.ensemble.g_hz == doctest::Approx(6e6).epsilon(1e-9));
}

TEST_CASE("beats scenarios use a pure state on a 1/tau comb") {
  const ScenarioConfig cfg = beats_scenario(5, 10e-6);
  CHECK(cfg.protocol == Protocol::kFreeEvolution);
  CHECK(cfg.ensemble.kind == EnsembleKind::kComb);
  CHECK(cfg.ensemble.spacing_hz == doctest::Approx(1e5));
  const auto ens = cfg.build_ensemble();
  REQUIRE(ens.size() == 5);
  const SystemState s = cfg.initial_state(ens);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(s.sigma12[i] == Complex(-0.5, 0.0));
    CHECK(s.sigma22[i] == 0.5);
  }
  CHECK(builtin_scenario("fig4-beats-99").build_ensemble().size() == 99);
  CHECK_THROWS(beats_scenario(4, 10e-6).build_ensemble());
}

TEST_CASE("strict parsing names the offending key") {
  Json doc = to_json(builtin_scenario("fig2-echoes"));
  {
    Json d = doc;
    d["cavity"]["kapa1_hz"] = 1.0;
    CHECK(error_key(d) == "cavity.kapa1_hz");
  }
  {
    Json d = doc;
    d["cavity"].erase("temperature_k");
    CHECK(error_key(d) == "cavity.temperature_k");
  }
  {
    Json d = doc;
    d["ensemble"]["n_classes"] = "many";
    CHECK(error_key(d) == "ensemble.n_classes");
  }
  {
    Json d = doc;
    d["ensemble"]["n_classes"] = 2.5;
    CHECK(error_key(d) == "ensemble.n_classes");
  }
  {
    Json d = doc;
    d["cavity"]["kappa1_hz"] = -1.0;
    CHECK(error_key(d) == "cavity.kappa1_hz");
  }
  {
    Json d = doc;
    d["protocol"] = "spin-lock";
    CHECK(error_key(d) == "protocol");
  }
  {
    Json d = doc;
    d.erase("name");
    CHECK(error_key(d) == "name");
  }
  {
    Json d = doc;
    d["extra"] = 1;
    CHECK(error_key(d) == "extra");
  }
  {
    Json d = doc;
    d["analysis"]["snapshots"] = Json::array({"end-pulse-2", "later"});
    CHECK(error_key(d) == "analysis.snapshots");
  }
}

TEST_CASE("optional sections fall back to defaults") {
  Json doc = to_json(builtin_scenario("fig2-echoes"));
  doc.erase("integrator");
  doc.erase("analysis");
  const ScenarioConfig cfg = scenario_from_json(doc);
  CHECK(cfg.integrator == IntegratorConfig{});
  CHECK(cfg.analysis.grating_window_hz == 1e6);
}

TEST_CASE("override files merge over a builtin") {
  const auto dir = std::filesystem::temp_directory_path() / "nvecho_scenario_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "override.json";
  {
    std::ofstream f(path);
    f << R"({"sequence": {"tau": 5e-6}, "ensemble": {"eta": 2000}, "analysis": {"snapshots": []}})";
  }
  const ScenarioConfig cfg = resolve_scenario("fig2-echoes", path);
  CHECK(cfg.sequence.tau == 5e-6);
  CHECK(cfg.ensemble.eta == 2000.0);
  CHECK(cfg.analysis.snapshots.empty());
  CHECK(cfg.cavity == builtin_scenario("fig2-echoes").cavity);

  save_scenario(cfg, dir / "saved.json");
  CHECK(load_scenario(dir / "saved.json") == cfg);
  CHECK(resolve_scenario((dir / "saved.json").string()) == cfg);

  try {
    resolve_scenario("fig2-echoes", dir / "missing.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
  }
  CHECK_THROWS_AS(resolve_scenario("no-such-scenario"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("merge follows RFC 7396") {
  Json target = Json::parse(R"({"a": 1, "b": {"c": 2, "d": 3}})");
  merge_json(target, Json::parse(R"({"a": null, "b": {"c": 5}, "e": [1]})"));
  CHECK(target == Json::parse(R"({"b": {"c": 5, "d": 3}, "e": [1]})"));
}
