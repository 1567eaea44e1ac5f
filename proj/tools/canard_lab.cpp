// canard-lab: simulation, bifurcation classification, periodic-orbit and
// sweep tooling for planar piecewise-smooth Liénard systems, plus the
// Stommel ocean-circulation preset.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure
// (NoOrbit / NoReturn / Diverged), 3 certificate verification failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "canard/canard.hpp"

namespace {

using nlohmann::json;

struct SystemArgs {
  std::string preset;
  std::string config_path;
  std::optional<double> eps, lambda;
  std::string save_system;
};

void add_system_flags(CLI::App* cmd, SystemArgs& args) {
  cmd->add_option("--preset", args.preset, "built-in system: fig4 or fig6");
  cmd->add_option("--system", args.config_path, "system config JSON file");
  cmd->add_option("--eps", args.eps, "time-scale ratio epsilon");
  cmd->add_option("--lambda", args.lambda, "slow-nullcline position lambda");
  cmd->add_option("--save-system", args.save_system, "write the resolved system JSON here");
}

canard::SystemSpec resolve_system(const SystemArgs& args) {
  std::optional<canard::SystemSpec> spec;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw canard::error(canard::errc::config_error,
                                 "cannot open system config " + args.config_path);
    json j;
    in >> j;
    spec = canard::SystemSpec::from_json(j);
  } else if (!args.preset.empty()) {
    spec = canard::SystemSpec::preset(args.preset);
  } else {
    throw canard::error(canard::errc::config_error, "no system given: use --preset or --system");
  }
  if (args.eps) spec = spec->with_epsilon(*args.eps);
  if (args.lambda) spec = spec->with_lambda(*args.lambda);

  const canard::ValidationReport rep = spec->validate();
  if (!rep.ok()) {
    std::cerr << "system validation failed:\n" << rep.summary();
    throw canard::error(rep.first_failure()->violation, rep.first_failure()->name);
  }
  if (!args.save_system.empty()) {
    std::ofstream out(args.save_system);
    out << spec->to_json().dump(2) << "\n";
  }
  return *spec;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw canard::error(canard::errc::config_error, "cannot write " + path);
  out << content;
}

int resolve_threads() {
  if (const char* env = std::getenv("CANARD_LAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int run(int argc, char** argv) {
  CLI::App app{"canard-lab: piecewise-smooth fast/slow Liénard system toolkit"};
  app.require_subcommand(1);

  // --- simulate ---------------------------------------------------------
  SystemArgs sim_sys;
  double sim_x0 = 0.0, sim_y0 = 0.0, sim_tmax = 500.0, sim_tol = 1e-9;
  bool sim_from_equilibrium = false;
  std::string sim_out = "trajectory.csv", sim_events_out = "events.json";
  CLI::App* sim = app.add_subcommand("simulate", "integrate a trajectory with event logging");
  add_system_flags(sim, sim_sys);
  sim->add_option("--x0", sim_x0, "initial x");
  sim->add_option("--y0", sim_y0, "initial y");
  sim->add_flag("--from-equilibrium", sim_from_equilibrium,
                "start at p_lambda nudged by 1e-6 in y");
  sim->add_option("--tmax", sim_tmax, "integration horizon");
  sim->add_option("--tol", sim_tol, "integration tolerance");
  sim->add_option("--out", sim_out, "trajectory CSV path");
  sim->add_option("--events-out", sim_events_out, "event log JSON path");

  // --- classify ---------------------------------------------------------
  SystemArgs cls_sys;
  std::string cls_out;
  CLI::App* cls = app.add_subcommand("classify", "corner/fold bifurcation classification");
  add_system_flags(cls, cls_sys);
  cls->add_option("--out", cls_out, "also write the report JSON here");

  // --- orbit ------------------------------------------------------------
  SystemArgs orb_sys;
  double orb_tol = 1e-10;
  std::optional<double> orb_seed;
  std::string orb_out = "orbit.csv";
  CLI::App* orb = app.add_subcommand("orbit", "locate the stable periodic orbit");
  add_system_flags(orb, orb_sys);
  orb->add_option("--tol", orb_tol, "integration tolerance");
  orb->add_option("--seed-y", orb_seed, "section ordinate to start the fixed-point search");
  orb->add_option("--out", orb_out, "one-period trajectory CSV path");

  // --- sweep ------------------------------------------------------------
  SystemArgs swp_sys;
  double swp_lo = 0.0, swp_hi = 0.0, swp_jump = 1.0, swp_tol = 1e-10;
  int swp_n = 40;
  std::string swp_out = "sweep.csv";
  CLI::App* swp = app.add_subcommand("sweep", "amplitude sweep over lambda with explosion refinement");
  add_system_flags(swp, swp_sys);
  swp->add_option("--lambda-min", swp_lo, "sweep start")->required();
  swp->add_option("--lambda-max", swp_hi, "sweep end")->required();
  swp->add_option("--samples", swp_n, "number of rows");
  swp->add_option("--jump", swp_jump, "amplitude jump threshold for explosion detection");
  swp->add_option("--tol", swp_tol, "integration tolerance");
  swp->add_option("--out", swp_out, "sweep CSV path (explosion intervals appended as JSON)");

  // --- certify ----------------------------------------------------------
  SystemArgs cert_sys;
  std::string cert_region = "W", cert_out;
  double cert_xhat = -3.0, cert_m1 = -1.0;
  std::optional<double> cert_m4;
  int cert_samples = 200;
  CLI::App* cert = app.add_subcommand("certify", "build and verify invariant-region certificates");
  add_system_flags(cert, cert_sys);
  cert->add_option("--region", cert_region, "W, V, or Vprime")->required();
  cert->add_option("--xhat", cert_xhat, "left wall position for W");
  cert->add_option("--m1", cert_m1, "bottom segment slope for W");
  cert->add_option("--m4", cert_m4, "upper-right segment slope for W (default: automatic)");
  cert->add_option("--samples", cert_samples, "boundary samples per segment");
  cert->add_option("--out", cert_out, "also write the certificate JSON here");

  // --- stommel ----------------------------------------------------------
  double st_K = 1.2, st_eps = 0.01, st_lambda = 1.0, st_tmax = 500.0, st_tol = 1e-9;
  std::optional<double> st_y0, st_mu0;
  std::string st_out = "stommel.csv", st_general_out = "stommel_general.csv";
  CLI::App* sto = app.add_subcommand("stommel", "ocean-circulation preset (y' = mu - y - K|1-y|y)");
  sto->add_option("--K", st_K, "transport nonlinearity (K > 1)");
  sto->add_option("--eps", st_eps, "time-scale ratio");
  sto->add_option("--lambda", st_lambda, "slow forcing target");
  sto->add_option("--y0", st_y0, "initial circulation (default: corner nudge)");
  sto->add_option("--mu0", st_mu0, "initial forcing");
  sto->add_option("--tmax", st_tmax, "integration horizon");
  sto->add_option("--tol", st_tol, "integration tolerance");
  sto->add_option("--out", st_out, "original-coordinate trajectory CSV");
  sto->add_option("--general-out", st_general_out, "general-form trajectory CSV");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    const canard::SystemSpec spec = resolve_system(sim_sys);
    canard::State init{sim_x0, sim_y0};
    if (sim_from_equilibrium) init = {spec.lambda(), spec.F(spec.lambda()) + 1e-6};
    canard::IntegrateOptions opt;
    opt.t_max = sim_tmax;
    opt.tol = sim_tol;
    const std::vector<canard::EventSpec> events{canard::EventSpec::splitting_line(),
                                                canard::EventSpec::slow_nullcline()};
    const canard::Trajectory traj = canard::integrate(spec, init, opt, events);
    write_file(sim_out, canard::trajectory_csv(traj));
    write_file(sim_events_out, canard::event_log_json(traj, events).dump(2) + "\n");
    std::cout << json{{"status", canard::to_string(traj.status)},
                      {"samples", traj.size()},
                      {"events", traj.events.size()}}
                     .dump(2)
              << "\n";
    if (traj.status == canard::IntegrationStatus::diverged) return 2;
    return 0;
  }

  if (cls->parsed()) {
    const canard::SystemSpec spec = resolve_system(cls_sys);
    json report;
    report["system"] = spec.to_json();
    report["corner"] = canard::to_json(canard::corner_classify(spec));
    report["equilibrium"] = canard::to_json(canard::equilibrium(spec));
    if (!spec.has_second_corner()) report["fold"] = canard::to_json(canard::fold_hopf(spec));
    try {
      report["nonexistence"] = canard::to_json(canard::nonexistence_threshold(spec));
    } catch (const canard::error& e) {
      report["nonexistence"] = {{"hypothesis_ok", false}, {"error", e.what()}};
    }
    const canard::ManifoldGeometry geo = spec.geometry();
    report["geometry"] = {{"x_M", geo.x_M},
                          {"fold_kind", geo.fold_kind == canard::FoldKind::smooth ? "smooth" : "corner"},
                          {"left", canard::to_string(geo.left.stability)},
                          {"middle", canard::to_string(geo.middle.stability)},
                          {"right", canard::to_string(geo.right.stability)}};
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!cls_out.empty()) write_file(cls_out, text);
    return 0;
  }

  if (orb->parsed()) {
    const canard::SystemSpec spec = resolve_system(orb_sys);
    canard::OrbitOptions opt;
    opt.tol = orb_tol;
    opt.start_y = orb_seed;
    const canard::PeriodicOrbit orbit = canard::find_periodic_orbit(spec, opt);
    write_file(orb_out, canard::trajectory_csv(orbit.cycle));
    std::cout << canard::to_json(orbit).dump(2) << "\n";
    return 0;
  }

  if (swp->parsed()) {
    const canard::SystemSpec spec = resolve_system(swp_sys);
    canard::SweepOptions opt;
    opt.jump_threshold = swp_jump;
    opt.orbit.tol = swp_tol;
    opt.threads = resolve_threads();
    const canard::SweepResult res = canard::sweep(spec, swp_lo, swp_hi, swp_n, opt);
    std::string csv = canard::sweep_csv(res);
    csv += "# " + canard::explosion_intervals_json(res).dump() + "\n";
    write_file(swp_out, csv);
    std::cout << canard::explosion_intervals_json(res).dump(2) << "\n";
    return 0;
  }

  if (cert->parsed()) {
    const canard::SystemSpec spec = resolve_system(cert_sys);
    json out;
    bool verified = false;
    if (cert_region == "W") {
      canard::BuildWOptions opt;
      opt.x_hat = cert_xhat;
      opt.m1 = cert_m1;
      opt.m4 = cert_m4;
      opt.samples = cert_samples;
      const auto [region, res] = canard::build_W(spec, opt);
      out = {{"region", canard::to_json(region)}, {"result", canard::to_json(res)}};
      verified = res.verified;
    } else if (cert_region == "V") {
      const canard::PeriodicOrbit orbit = canard::find_periodic_orbit(spec);
      const auto [region, res] = canard::superexplosion_witness(spec, {}, &orbit);
      out = {{"region", canard::to_json(region)},
             {"result", canard::to_json(res)},
             {"orbit", canard::to_json(orbit)}};
      verified = res.verified;
    } else if (cert_region == "Vprime") {
      const auto [region, rep] = canard::subcritical_witness(spec);
      out = {{"region", canard::to_json(region)},
             {"coexistence", rep.coexistence()},
             {"witness_verified", rep.witness_verified},
             {"equilibrium_stable", rep.equilibrium_stable},
             {"orbit_found", rep.orbit_found},
             {"orbit_outside_witness", rep.orbit_outside_witness},
             {"beta", rep.beta},
             {"beta_prime", rep.beta_prime}};
      if (rep.orbit) out["orbit"] = canard::to_json(*rep.orbit);
      verified = rep.coexistence();
    } else {
      throw canard::error(canard::errc::config_error, "unknown region '" + cert_region + "'");
    }
    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    if (!cert_out.empty()) write_file(cert_out, text);
    return verified ? 0 : 3;
  }

  if (sto->parsed()) {
    canard::StommelParams params{st_K, st_eps, st_lambda};
    const canard::StommelField field(params);
    const canard::SystemSpec general = canard::to_general_form(params);
    const canard::StommelMap map;
    canard::StommelState init{st_y0.value_or(1.0 - 1e-3), st_mu0.value_or(1.0)};
    canard::IntegrateOptions opt;
    opt.t_max = st_tmax;
    opt.tol = st_tol;
    const canard::Trajectory traj = canard::integrate(field, {init.y, init.mu}, opt);

    std::string orig = "t,y,mu\n", gen = "t,x,y\n";
    char buf[96];
    for (std::size_t i = 0; i < traj.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g\n", traj.t[i], traj.state[i].x,
                    traj.state[i].y);
      orig += buf;
      const canard::State g = map.to_general({traj.state[i].x, traj.state[i].y});
      std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g\n", traj.t[i], g.x, g.y);
      gen += buf;
    }
    write_file(st_out, orig);
    write_file(st_general_out, gen);

    json report;
    report["params"] = canard::to_json(params);
    report["regime"] = canard::to_json(canard::classify_regime(params));
    report["general_form"] = general.to_json();
    report["status"] = canard::to_string(traj.status);
    report["circulation_labels"] = {{"poleward", "y < 1 (X > 0)"},
                                    {"equatorward", "y > 1 (X < 0)"}};
    std::cout << report.dump(2) << "\n";
    return traj.status == canard::IntegrationStatus::diverged ? 2 : 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const canard::error& e) {
    std::cerr << e.what() << "\n";
    switch (e.code()) {
      case canard::errc::config_error:
      case canard::errc::continuity_violation:
      case canard::errc::slope_sign_violation:
      case canard::errc::precondition_violated:
      case canard::errc::not_super_explosion:
      case canard::errc::not_focus_focus:
        return 1;
      case canard::errc::construction_failed:
        return 3;
      default:
        return 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
