#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "canard/integrate.hpp"
#include "canard/system.hpp"

using namespace canard;
using Catch::Approx;

namespace {
const SystemSpec fig4 = SystemSpec::preset("fig4");
const SystemSpec fig6 = SystemSpec::preset("fig6");
}  // namespace

TEST_CASE("equilibrium is a fixed point of the flow") {
  const SystemSpec spec = fig6.with_lambda(0.3);
  const State eq{0.3, spec.F(0.3)};
  IntegrateOptions opt;
  opt.t_max = 10.0;
  opt.tol = 1e-9;
  const Trajectory traj = integrate(spec, eq, opt);
  REQUIRE(traj.status == IntegrationStatus::completed);
  for (const State& s : traj.state) CHECK(norm(s - eq) <= 10.0 * opt.tol);
}

TEST_CASE("super-explosion run logs clean splitting-line crossings") {
  const SystemSpec spec = fig6.with_lambda(0.001);
  const std::vector<EventSpec> events{EventSpec::splitting_line()};
  IntegrateOptions opt;
  opt.t_max = 500.0;
  opt.tol = 1e-10;
  const Trajectory traj =
      integrate(spec, State{0.001, spec.F(0.001) + 1e-6}, opt, events);
  REQUIRE(traj.status == IntegrationStatus::completed);
  REQUIRE(traj.events.size() >= 2);
  for (const auto& e : traj.events) CHECK(std::abs(e.state.x) <= 1e-10);

  SECTION("sample times are strictly increasing") {
    for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj.t[i] > traj.t[i - 1]);
  }

  SECTION("event times are bridged by their neighbouring samples") {
    for (const auto& e : traj.events) {
      const auto it = std::lower_bound(traj.t.begin(), traj.t.end(), e.t);
      REQUIRE(it != traj.t.end());
      CHECK(*it == e.t);  // the step is split at the event
    }
  }

  SECTION("branch consistency between consecutive crossings") {
    std::size_t ei = 0;
    double side = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      while (ei < traj.events.size() && traj.events[ei].t <= traj.t[i]) {
        side = 0.0;  // reset at each crossing
        ++ei;
      }
      const double x = traj.state[i].x;
      if (std::abs(x) <= 1e-10) continue;
      if (side == 0.0) side = x > 0.0 ? 1.0 : -1.0;
      CHECK(x * side >= -1e-10);
    }
  }
}

TEST_CASE("monotone slow variable between slow-nullcline crossings") {
  const SystemSpec spec = fig6.with_lambda(0.1);
  const std::vector<EventSpec> events{EventSpec::slow_nullcline()};
  IntegrateOptions opt;
  opt.t_max = 60.0;
  opt.tol = 1e-10;
  const Trajectory traj = integrate(spec, State{1.2, 0.0}, opt, events);
  REQUIRE(traj.events.size() >= 2);

  std::size_t ei = 0;
  double dir = 0.0;
  for (std::size_t i = 1; i < traj.size(); ++i) {
    while (ei < traj.events.size() && traj.events[ei].t <= traj.t[i - 1]) {
      dir = 0.0;
      ++ei;
    }
    const double dy = traj.state[i].y - traj.state[i - 1].y;
    if (std::abs(dy) < 1e-12) continue;
    if (dir == 0.0) dir = dy > 0.0 ? 1.0 : -1.0;
    CHECK(dy * dir >= -1e-12);
  }
}

TEST_CASE("tolerance refinement converges") {
  const SystemSpec spec = fig4.with_lambda(0.5);
  SECTION("endpoints from the equilibrium agree across tolerances") {
    const State init{0.5, spec.F(0.5)};
    auto endpoint = [&](double tol) {
      IntegrateOptions opt;
      opt.t_max = 50.0;
      opt.tol = tol;
      opt.store_dense = false;
      return integrate(spec, init, opt).back();
    };
    CHECK(norm(endpoint(1e-8) - endpoint(1e-10)) <= 1e-6);
  }
  SECTION("relaxation transient: halving tol moves the endpoint boundedly") {
    const State init{0.5, spec.F(0.5) + 0.5};
    auto endpoint = [&](double tol) {
      IntegrateOptions opt;
      opt.t_max = 20.0;
      opt.tol = tol;
      opt.store_dense = false;
      return integrate(spec, init, opt).back();
    };
    const State a = endpoint(1e-8);
    CHECK(norm(a - endpoint(1e-10)) <= 1e-5);
    CHECK(norm(a - endpoint(5e-9)) <= 100.0 * 1e-8 * 20.0);
  }
}

TEST_CASE("dense output matches the integrated path") {
  const SystemSpec spec = fig4.with_lambda(0.5);
  IntegrateOptions opt;
  opt.t_max = 20.0;
  opt.tol = 1e-10;
  const State init{-0.5, 1.0};
  const Trajectory traj = integrate(spec, init, opt);

  IntegrateOptions fine;
  fine.tol = 1e-12;
  fine.store_dense = false;
  for (double t : {1.7, 5.3, 11.9, 19.2}) {
    fine.t_max = t;
    const State ref = integrate(spec, init, fine).back();
    CHECK(norm(traj.at(t) - ref) <= 1e-6);
  }
}

TEST_CASE("directional section events respect direction and window") {
  const SystemSpec spec = fig6.with_lambda(0.1);
  // relaxation cycle crosses x = 0.4 in both directions
  const std::vector<EventSpec> both{EventSpec::section(0.4, CrossDirection::both)};
  const std::vector<EventSpec> right{EventSpec::section(0.4, CrossDirection::rightward)};
  IntegrateOptions opt;
  opt.t_max = 80.0;
  opt.tol = 1e-9;
  const State init{0.1, spec.F(0.1) - 0.5};
  const Trajectory t_both = integrate(spec, init, opt, both);
  const Trajectory t_right = integrate(spec, init, opt, right);
  REQUIRE(t_both.events.size() >= 4);
  CHECK(t_right.events.size() < t_both.events.size());
  CHECK(t_right.events.size() >= 2);
  // rightward crossings move with positive x velocity: x' = F(0.4) - y > 0
  for (const auto& e : t_right.events) CHECK(spec.F(0.4) - e.state.y > 0.0);
}

TEST_CASE("first_return honours the section contract") {
  const SystemSpec spec = fig6.with_lambda(0.001);
  const EventSpec section =
      EventSpec::section(spec.lambda(), CrossDirection::rightward, EventAction::halt,
                         std::nullopt, spec.F(spec.lambda()));
  const auto [state, t] = first_return(spec, section, State{0.001, -2.0}, 2000.0, 1e-10);
  CHECK(std::abs(state.x - 0.001) <= 1e-10);
  CHECK(state.y > -2.0);
  CHECK(state.y < spec.F(0.001));
  CHECK(t > 0.0);

  SECTION("NoReturn when the flow settles on the equilibrium") {
    const SystemSpec stable = fig6.with_lambda(-2.0);
    const EventSpec sec =
        EventSpec::section(-2.0, CrossDirection::rightward, EventAction::halt, std::nullopt,
                           stable.F(-2.0));
    CHECK_THROWS_AS(first_return(stable, sec, State{-2.0, stable.F(-2.0) - 0.3}, 300.0, 1e-9),
                    error);
  }
}

TEST_CASE("diverging trajectories are reported, not thrown") {
  // F(x) = 2x gives exponential growth away from the repelling equilibrium
  const PiecewiseField runaway(0.2, 0.0, Polynomial{0.0, 2.0}, Polynomial{0.0, 2.0});
  IntegrateOptions opt;
  opt.t_max = 100.0;
  opt.tol = 1e-9;
  const Trajectory traj = integrate(runaway, State{1.0, -1.0}, opt);
  CHECK(traj.status == IntegrationStatus::diverged);
  CHECK(norm(traj.back()) > 1e8);
}

TEST_CASE("tolerance precondition is enforced") {
  IntegrateOptions opt;
  opt.tol = 1e-2;
  CHECK_THROWS_AS(integrate(fig4, State{0.0, 0.0}, opt), std::invalid_argument);
}

TEST_CASE("trajectory CSV export is deterministic") {
  const SystemSpec spec = fig4.with_lambda(0.5);
  IntegrateOptions opt;
  opt.t_max = 5.0;
  opt.tol = 1e-9;
  const Trajectory a = integrate(spec, State{0.0, 1.0}, opt);
  const Trajectory b = integrate(spec, State{0.0, 1.0}, opt);
  CHECK(trajectory_csv(a) == trajectory_csv(b));
  CHECK(trajectory_csv(a).substr(0, 6) == "t,x,y\n");
}
