#include <cmath>

#include "doctest.h"
#include "nvecho/constants.hpp"
#include "nvecho/ensemble.hpp"
#include "nvecho/errors.hpp"
#include "nvecho/integrator.hpp"
#include "test_support.hpp"

using namespace nvecho;

TEST_CASE("drive amplitude from power") {
  const double omega = omega_from_power(12.0, angular(9.8e9));
  const double expected = std::sqrt(1e-3 * std::pow(10.0, 1.2) / (kHbar * angular(9.8e9)));
  CHECK(omega == doctest::Approx(expected).epsilon(1e-14));
  CHECK(omega == doctest::Approx(4.94e10).epsilon(2e-3));
  CHECK(std::abs(omega / (kTwoPi * 8e9) - 1.0) < 0.02);
  CHECK(omega_from_power(50.0, angular(2.69e9)) == doctest::Approx(7.49e12).epsilon(2e-3));
  CHECK(omega_from_power(-INFINITY, angular(9.8e9)) == 0.0);
  // Power doubles -> amplitude grows by sqrt(2).
  CHECK(omega_from_power(12.0 + 10 * std::log10(2.0), angular(9.8e9)) / omega ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("rk4 reproduces the damped cavity to 1e-8") {
  const CavityParams c{angular(9.8e9), angular(0.92e6), angular(0.92e6), 293.0};
  const std::vector<SubEnsemble> none;
  const MeanFieldSystem sys(c, none, c.omega_c);
  const RhsFunction f = [&](const SystemState& y, double, StateDerivative& d) { sys.derivative(y, 0.0, d); };
  SystemState s(0);
  s.a = 1.0;
  const double t = 1.0 / c.kappa();
  const auto n = static_cast<int>(std::llround(t / 1e-9));
  Rk4Workspace ws;
  for (int k = 0; k < n; ++k) rk4_step(s, 1e-9, f, ws);
  CHECK(std::abs(s.a - std::exp(-0.5 * c.kappa() * n * 1e-9)) < 1e-8);
  CHECK(std::abs(std::exp(-0.5) - 0.60653) < 1e-5);
  CHECK(s.t == doctest::Approx(n * 1e-9));
}

TEST_CASE("rk4 converges at fourth order") {
  // dy/dt = -y on a single population, exact exp(-t).
  const RhsFunction f = [](const SystemState& y, double, StateDerivative& d) {
    d.da = -y.a;
    d.dsigma12.assign(y.size(), Complex{});
    d.dsigma22.assign(y.size(), 0.0);
  };
  auto error = [&](int n) {
    SystemState s(0);
    s.a = 1.0;
    for (int k = 0; k < n; ++k) s = rk4_step(s, 1.0 / n, f);
    return std::abs(s.a.real() - std::exp(-1.0));
  };
  const double ratio = error(8) / error(16);
  CHECK(ratio > 14.0);
  CHECK(ratio < 18.0);
}

TEST_CASE("free dephasing over 10 us") {
  const CavityParams c{angular(9.8e9), angular(0.95e6), angular(0.89e6), 293.0};
  const SubEnsemble e{c.omega_c + angular(0.5e6), 1e10, 0.0, angular(23.7), 500.0, angular(0.014e6)};
  CHECK(e.gamma + 0.5 * e.eta == doctest::Approx(398.9).epsilon(1e-4));
  const std::vector<SubEnsemble> ens{e};
  const MeanFieldSystem sys(c, ens, c.omega_c);
  const RhsFunction f = [&](const SystemState& y, double, StateDerivative& d) { sys.derivative(y, 0.0, d); };
  SystemState s(1);
  s.sigma12[0] = Complex(0.2, -0.1);
  s.sigma22[0] = 0.5;
  const double start = std::abs(s.sigma12[0]);
  Rk4Workspace ws;
  for (int k = 0; k < 10000; ++k) rk4_step(s, 1e-9, f, ws);
  const double ratio = std::abs(s.sigma12[0]) / start;
  CHECK(ratio == doctest::Approx(std::exp(-(398.9 + angular(0.014e6)) * 1e-5)).epsilon(1e-6));
  CHECK(ratio == doctest::Approx(0.4133).epsilon(2e-4));
}

TEST_CASE("non-finite steps report the step index") {
  const RhsFunction f = [](const SystemState& y, double, StateDerivative& d) {
    d.da = Complex(NAN, 0.0);
    d.dsigma12.assign(y.size(), Complex{});
    d.dsigma22.assign(y.size(), 0.0);
  };
  SystemState s(1);
  Rk4Workspace ws;
  try {
    rk4_step(s, 1e-9, f, ws, 42);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.index() == 42);
  }
}

TEST_CASE("no drive never populates the cavity") {
  const auto sys = test::small_system();
  const SystemState cooled = cooled_steady_state(sys.ensemble);
  const SystemState out = run_continuous_drive(sys.cavity, sys.ensemble, cooled, sys.cavity.omega_c, 0.0, 5e-6, 1e-9);
  CHECK(out.a == Complex(0.0, 0.0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out.sigma12[i] == Complex(0.0, 0.0));
    CHECK(out.sigma22[i] == doctest::Approx(cooled.sigma22[i]).epsilon(1e-12));
  }
}

TEST_CASE("time-stepped preparation stages match the closed forms") {
  const auto sys = test::small_system();
  IntegratorConfig cfg;
  cfg.validate_stages = true;
  const PreparedState numeric = prepare_initial_state(sys.cavity, sys.ensemble, cfg);
  const SystemState cooled = cooled_steady_state(sys.ensemble);
  for (std::size_t i = 0; i < sys.ensemble.size(); ++i) {
    CHECK(std::abs(numeric.thermal.sigma22[i] - 0.5) < 1e-6);
    CHECK(std::abs(numeric.cooled.sigma22[i] - cooled.sigma22[i]) < 1e-6);
  }
  // Starting stage 2 from its own fixed point leaves it unchanged.
  const SystemState again = run_continuous_drive(sys.cavity, sys.ensemble, cooled, sys.cavity.omega_c, 0.0, 1e-3, 1e-6);
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(again.sigma22[i] == doctest::Approx(cooled.sigma22[i]).epsilon(1e-12));
}

TEST_CASE("protocol run records markers, snapshots and stays on the Bloch ball") {
  const auto sys = test::small_system();
  RecordOptions rec;
  rec.snapshot_events = protocol_events();
  rec.tracked_classes = {0, 200, 399};
  const Trajectory traj = run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config, rec);
  CHECK(traj.marker("pi-center") == doctest::Approx(sys.sequence.pi_center()));
  CHECK(traj.marker("end") == doctest::Approx(sys.sequence.horizon()));
  for (const auto& ev : protocol_events()) CHECK_MESSAGE(traj.find_snapshot(ev) != nullptr, ev);
  CHECK(traj.find_snapshot("end-pulse-2")->state.t == doctest::Approx(sys.sequence.second_pulse_end()));
  const Snapshot* echo = traj.find_snapshot("first-echo");
  CHECK(std::abs(echo->state.t - sys.sequence.pi_center() - sys.sequence.tau) < 0.1 * sys.sequence.tau);
  CHECK(traj.max_bloch_excess <= 1e-9);
  CHECK(traj.tracked_sigma12.size() == 3 * traj.size());
  for (std::size_t i = 1; i < traj.size(); ++i) REQUIRE(traj.times[i] > traj.times[i - 1]);
  CHECK(traj.times.back() == doctest::Approx(sys.sequence.horizon()));
  // Pulse 1 and its ring-down tip the central class away from the cooled population.
  const double p0 = traj.find_snapshot("post-cooling")->state.sigma22[200];
  const double p1 = traj.find_snapshot("mid-free-evolution")->state.sigma22[200];
  CHECK(p1 > p0 + 0.02);
}

TEST_CASE("protocol trajectories do not depend on the worker count") {
  auto sys = test::small_system();
  sys.sequence.t_total = 3e-6;
  const Trajectory one = run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config);
  sys.config.workers = 3;
  const Trajectory three = run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config);
  CHECK(one.times == three.times);
  CHECK(one.a == three.a);
}

TEST_CASE("accuracy guard rejects coarse free steps and bad configs") {
  auto sys = test::small_system();
  sys.config.dt_free = 1e-8;
  sys.config.dt_pulse = 1e-8;
  CHECK_THROWS_AS(run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config), ProtocolError);

  sys = test::small_system();
  sys.sequence.power_dbm = 60.0;
  sys.config.dt_pulse = 1e-9;
  CHECK_THROWS_AS(run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config), ProtocolError);

  sys = test::small_system();
  sys.config.dt_pulse = 2e-9;
  CHECK_THROWS_AS(run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config), StructuralError);

  sys = test::small_system();
  RecordOptions bad;
  bad.tracked_classes = {5000};
  CHECK_THROWS_AS(run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config, bad), StructuralError);
  bad = {};
  bad.snapshot_events = {"nonsense"};
  CHECK_THROWS_AS(run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config, bad), StructuralError);
}

TEST_CASE("graded ring-down keeps the trace close to the uniform-step trace") {
  auto sys = test::small_system();
  sys.sequence.t_total = 2e-6;
  const Trajectory plain = run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config);
  sys.config.ringdown = 1e-6;
  const Trajectory graded = run_protocol(sys.cavity, sys.ensemble, sys.sequence, sys.config);
  CHECK(graded.steps > plain.steps);
  REQUIRE(std::abs(graded.times.back() - plain.times.back()) < 1e-12);
  const double ref = std::abs(plain.a.back());
  CHECK(std::abs(graded.a.back() - plain.a.back()) < 1e-3 * ref);
}
