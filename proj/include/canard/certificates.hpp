#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "canard/bifurcation.hpp"
#include "canard/error.hpp"
#include "canard/integrate.hpp"
#include "canard/orbit.hpp"
#include "canard/system.hpp"

namespace canard {

// ---------------------------------------------------------------------------
// Polygon utilities
// ---------------------------------------------------------------------------

inline double polygon_signed_area(std::span<const Vec2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

inline bool point_in_polygon(std::span<const Vec2> poly, Vec2 p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
      in = !in;
  }
  return in;
}

inline double distance_to_polygon(std::span<const Vec2> poly, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const Vec2 d{b.x - a.x, b.y - a.y};
    const double len2 = d.x * d.x + d.y * d.y;
    const double t = len2 > 0.0 ? std::clamp(((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, std::hypot(p.x - (a.x + t * d.x), p.y - (a.y + t * d.y)));
  }
  return best;
}

// Positive inside, negative outside.
inline double polygon_inside_depth(std::span<const Vec2> poly, Vec2 p) {
  const double d = distance_to_polygon(poly, p);
  return point_in_polygon(poly, p) ? d : -d;
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

struct CertificateResult {
  bool verified = false;
  double min_inward_product = 0.0;  // against the admissible-side normal
  int samples = 0;
  std::vector<Vec2> failure_points;
};

// The six-segment positively invariant polygon around p_lambda.
struct PolygonRegion {
  std::vector<Vec2> vertices;  // CCW: (x^,0) (lam,y1) (x2,y1) (x2,y3) (lam,y5) (x^,y5)
  double x_hat = 0.0, m1 = 0.0, m4 = 0.0;
  double x2 = 0.0, y1 = 0.0, y3 = 0.0, y5 = 0.0;
  double lambda = 0.0;
  double m4_literal_bound = 0.0;  // (g(x^) - y3)/(lambda - x2), recorded alongside
};

struct BuildWOptions {
  double x_hat = -3.0;
  double m1 = -1.0;
  std::optional<double> m4;  // default: scaled back from the slope bound
  int samples = 200;
  int max_retries = 6;
};

namespace detail {

// Minimum of field . inward-normal over sampled points of a CCW polygon.
template <PlanarSystem S>
CertificateResult verify_inward(const S& sys, std::span<const Vec2> poly,
                                int samples_per_edge) {
  CertificateResult res;
  res.min_inward_product = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const Vec2 d{b.x - a.x, b.y - a.y};
    const double len = std::hypot(d.x, d.y);
    if (len == 0.0) continue;
    const Vec2 n{-d.y / len, d.x / len};
    for (int j = 0; j <= samples_per_edge; ++j) {
      const double t = static_cast<double>(j) / samples_per_edge;
      const Vec2 p{a.x + t * d.x, a.y + t * d.y};
      const double prod = dot(sys.field(p.x, p.y), n);
      res.samples++;
      if (prod < res.min_inward_product) res.min_inward_product = prod;
      if (prod < -1e-9 && res.failure_points.size() < 64) res.failure_points.push_back(p);
    }
  }
  res.verified = res.min_inward_product >= -1e-9;
  return res;
}

}  // namespace detail

inline std::pair<PolygonRegion, CertificateResult> build_W(const SystemSpec& spec,
                                                           BuildWOptions opt = {}) {
  spec.ensure_valid();
  const ManifoldGeometry geo = spec.geometry();
  const double lam = spec.lambda();
  if (!(lam > 0.0 && lam < geo.x_M))
    throw error(errc::precondition_violated, "build_W requires 0 < lambda < x_M");
  if (!(opt.x_hat < 0.0) || !(opt.m1 < 0.0))
    throw error(errc::precondition_violated, "build_W requires x_hat < 0 and m1 < 0");

  const Polynomial& right_branch = spec.f() ? *spec.f() : spec.h();
  const double y3 = spec.F(geo.x_M);

  // deep enough that the left wall clears the fold height with headroom
  const double x_hat_auto = [&] {
    std::vector<double> shifted = spec.g().coeffs();
    shifted[0] -= 2.0 * std::max(y3, 1e-6);
    const Polynomial wall(shifted);
    const auto roots = wall.roots_in(-wall.cauchy_bound() - 1.0, 0.0);
    return roots.empty() ? opt.x_hat * 4.0 : roots.back();
  }();

  std::optional<std::pair<PolygonRegion, CertificateResult>> best;
  double x_hat = opt.x_hat;
  for (int retry = 0; retry < opt.max_retries;
       ++retry, x_hat = retry == 1 ? std::min(x_hat, x_hat_auto) : x_hat * 1.6) {
    if (spec.g()(x_hat) <= y3) continue;  // left wall below the fold height

    const double y1 = opt.m1 * (lam - x_hat);
    // x2 = rightmost solution of F(x) = y1 on the right branch, plus 1
    std::vector<double> shifted = right_branch.coeffs();
    shifted[0] -= y1;
    const Polynomial crossing(shifted);
    const double bound = std::max(crossing.cauchy_bound() + 1.0, geo.x_M + 1.0);
    const auto roots = crossing.roots_in(geo.x_M, bound);
    if (roots.empty())
      throw error(errc::construction_failed, "right branch never descends to y1");
    const double x2 = roots.back() + 1.0;

    const double m4_bound = (spec.g()(x_hat) - y3) / (lam - x2);
    std::vector<double> m4_trials;
    if (opt.m4) m4_trials.push_back(*opt.m4);
    else
      for (double k : {0.9, 0.7, 0.5, 0.3, 0.15}) m4_trials.push_back(k * m4_bound);

    for (double m4 : m4_trials) {
      const double y5 = m4 * (lam - x2) + y3;
      if (!(y5 > y3) || !(y5 < spec.g()(x_hat))) continue;
      PolygonRegion region;
      region.vertices = {{x_hat, 0.0}, {lam, y1}, {x2, y1}, {x2, y3}, {lam, y5}, {x_hat, y5}};
      region.x_hat = x_hat;
      region.m1 = opt.m1;
      region.m4 = m4;
      region.x2 = x2;
      region.y1 = y1;
      region.y3 = y3;
      region.y5 = y5;
      region.lambda = lam;
      region.m4_literal_bound = m4_bound;
      CertificateResult res = detail::verify_inward(spec, region.vertices, opt.samples);
      if (res.verified) return {std::move(region), std::move(res)};
      if (!best || res.min_inward_product > best->second.min_inward_product)
        best = {std::move(region), std::move(res)};
    }
  }
  if (!best)
    throw error(errc::construction_failed,
                "no admissible (x_hat, m4) pair within the search bounds");
  return *best;  // constructible but unverified; caller sees verified = false
}

// Confinement probe: random interior starts must stay inside the polygon.
template <PlanarSystem S>
bool region_confines(const S& sys, std::span<const Vec2> poly, int n_starts, double t_span,
                     double tol, unsigned seed = 20240901, double* worst_exit = nullptr) {
  std::mt19937_64 rng(seed);
  double lo_x = poly[0].x, hi_x = lo_x, lo_y = poly[0].y, hi_y = lo_y;
  for (const Vec2& v : poly) {
    lo_x = std::min(lo_x, v.x);
    hi_x = std::max(hi_x, v.x);
    lo_y = std::min(lo_y, v.y);
    hi_y = std::max(hi_y, v.y);
  }
  std::uniform_real_distribution<double> ux(lo_x, hi_x), uy(lo_y, hi_y);
  const double margin = 1e-3 * std::min(hi_x - lo_x, hi_y - lo_y);
  const double event_tol = std::max(tol, 1e-10);
  double worst = 0.0;
  bool ok = true;
  for (int i = 0; i < n_starts; ++i) {
    Vec2 p;
    do {
      p = {ux(rng), uy(rng)};
    } while (polygon_inside_depth(poly, p) < margin);
    IntegrateOptions io;
    io.t_max = t_span;
    io.tol = tol;
    io.h_max = 0.5;  // keep sample spacing tight enough for the containment check
    const Trajectory traj = integrate(sys, p, io);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const double depth = polygon_inside_depth(poly, traj.state[k]);
      if (depth < -event_tol) {
        ok = false;
        worst = std::min(worst, depth);
      }
    }
  }
  if (worst_exit) *worst_exit = worst;
  return ok;
}

// ---------------------------------------------------------------------------
// Witness regions (Poincare-Bendixson style traps bounded by a trajectory
// arc plus one straight closing segment)
// ---------------------------------------------------------------------------

enum class WitnessKind { super_explosion_V, subcritical_V_prime };

struct WitnessRegion {
  WitnessKind kind = WitnessKind::super_explosion_V;
  std::vector<Vec2> boundary;  // closed polygon; last->first edge is the closing segment
  Vec2 segment_a, segment_b;
  double y_hat = 0.0;                      // V: lower section ordinate
  double beta = 0.0, beta_prime = 0.0;     // V': entry/re-entry ordinates
};

struct WitnessOptions {
  double tol = 1e-10;
  double launch_offset = 1e-8;
  int segment_samples = 400;
  int arc_samples = 4000;
  double orbit_margin = 1e-6;  // how deep inside the region an orbit sample may sit
};

namespace detail {

// Verify that the flow crosses the closing segment outward (or tangent);
// the trajectory part of the boundary is flow-invariant by construction.
template <PlanarSystem S>
CertificateResult verify_closing_segment(const S& sys, const WitnessRegion& region,
                                         int samples) {
  CertificateResult res;
  res.min_inward_product = std::numeric_limits<double>::infinity();
  const Vec2 a = region.segment_a, b = region.segment_b;
  const Vec2 mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
  const double probe = 1e-6 * (1.0 + std::abs(mid.x) + std::abs(mid.y));
  // the segments used here are vertical, so the sides are +-x
  const bool east_inside = polygon_inside_depth(region.boundary, {mid.x + probe, mid.y}) > 0.0;
  const Vec2 outward = east_inside ? Vec2{-1.0, 0.0} : Vec2{1.0, 0.0};
  for (int j = 0; j <= samples; ++j) {
    const double t = static_cast<double>(j) / samples;
    const Vec2 p{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    const double prod = dot(sys.field(p.x, p.y), outward);
    res.samples++;
    if (prod < res.min_inward_product) res.min_inward_product = prod;
    if (prod < -1e-9 && res.failure_points.size() < 64) res.failure_points.push_back(p);
  }
  res.verified = res.min_inward_product >= -1e-9;
  return res;
}

inline std::vector<Vec2> resample(const Trajectory& traj, double t_end, int n) {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) out.push_back(traj.at(t_end * i / n));
  return out;
}

}  // namespace detail

// Launch along the strong-unstable eigenvector of the node p_lambda; the
// first return to {x = lambda, y < h(lambda)} closes a negatively
// invariant region V whose complement traps every periodic orbit.
inline std::pair<WitnessRegion, CertificateResult> superexplosion_witness(
    const SystemSpec& spec, WitnessOptions opt = {},
    const PeriodicOrbit* orbit_to_check = nullptr) {
  spec.ensure_valid();
  const CornerBifurcationReport corner = corner_classify(spec);
  if (corner.kind != CornerKind::super_explosion)
    throw error(errc::not_super_explosion, "corner classification is not a super-explosion");
  const ManifoldGeometry geo = spec.geometry();
  const double lam = spec.lambda();
  if (!(lam > 0.0 && lam < geo.x_M))
    throw error(errc::precondition_violated, "superexplosion_witness requires 0 < lambda < x_M");

  const EquilibriumReport eq = equilibrium(spec);
  if (eq.primary.kind == EquilibriumKind::focus)
    throw error(errc::precondition_violated,
                "p_lambda must be a node (lambda too close to the fold)");
  const double mu2 = std::max(eq.primary.mu_plus.real(), eq.primary.mu_minus.real());
  const double slope = spec.epsilon() / mu2;
  const double nrm = std::hypot(1.0, slope);
  const State p_lam = eq.location;
  const State start{p_lam.x + opt.launch_offset / nrm, p_lam.y + opt.launch_offset * slope / nrm};

  IntegrateOptions io;
  io.tol = opt.tol;
  io.t_max = 100.0 + 200.0 / spec.epsilon();
  const std::array<EventSpec, 1> evs{EventSpec::section(
      lam, CrossDirection::rightward, EventAction::halt, std::nullopt, p_lam.y)};
  const Trajectory traj = integrate(spec, start, io, evs);
  if (traj.status != IntegrationStatus::halted_at_event)
    throw error(errc::no_return, "strong-unstable trajectory never returned to x = lambda");

  WitnessRegion region;
  region.kind = WitnessKind::super_explosion_V;
  region.y_hat = traj.events.back().state.y;
  region.segment_a = traj.events.back().state;     // (lambda, y_hat)
  region.segment_b = p_lam;                        // (lambda, h(lambda))
  region.boundary.push_back(p_lam);
  const auto arc = detail::resample(traj, traj.events.back().t, opt.arc_samples);
  region.boundary.insert(region.boundary.end(), arc.begin(), arc.end());

  CertificateResult res = detail::verify_closing_segment(spec, region, opt.segment_samples);

  if (orbit_to_check) {
    double worst = 0.0;
    const double T = orbit_to_check->period;
    for (int i = 0; i < 2000; ++i) {
      const Vec2 p = orbit_to_check->cycle.at(T * i / 2000);
      worst = std::max(worst, polygon_inside_depth(region.boundary, p));
    }
    if (worst > opt.orbit_margin) {
      res.verified = false;
      res.failure_points.push_back({lam, worst});
    }
  }
  return {std::move(region), std::move(res)};
}

// Subcritical super-explosion coexistence: a trajectory entering at (0,
// beta) that escapes the stable focus and re-enters at (0, beta') with
// beta' > beta closes a negatively invariant V'; the stable orbit lives
// in its complement.
struct CoexistenceReport {
  bool witness_verified = false;
  bool equilibrium_stable = false;
  bool orbit_found = false;
  bool orbit_outside_witness = false;
  double beta = 0.0, beta_prime = 0.0;
  EquilibriumReport equilibrium;
  std::optional<PeriodicOrbit> orbit;
  std::vector<std::string> search_trace;

  bool coexistence() const {
    return witness_verified && equilibrium_stable && orbit_found && orbit_outside_witness;
  }
};

inline std::pair<WitnessRegion, CoexistenceReport> subcritical_witness(const SystemSpec& spec,
                                                                       WitnessOptions opt = {}) {
  spec.ensure_valid();
  const double eps = spec.epsilon();
  const double thr = 2.0 * std::sqrt(eps);
  const double h_slope = spec.branch_derivative(0.0, Side::right);
  const double g_slope = spec.branch_derivative(0.0, Side::left);
  const double lam = spec.lambda();
  if (!(h_slope > thr) || !(std::abs(g_slope) < thr) || !(lam < 0.0))
    throw error(errc::precondition_violated,
                "subcritical_witness requires h'(0) > 2*sqrt(eps), |g'(0)| < 2*sqrt(eps), lambda < 0");

  const ManifoldGeometry geo = spec.geometry();
  const double beta_lo = spec.F(lam);
  const double beta_hi = spec.F(geo.x_M);

  CoexistenceReport rep;
  rep.equilibrium = equilibrium(spec);
  rep.equilibrium_stable = rep.equilibrium.primary.stability == Stability::stable;

  struct Run {
    bool exits = false;
    bool reenters = false;
    double beta_prime = 0.0;
    Trajectory traj;
    double t_reentry = 0.0;
  };
  auto run_from = [&](double beta) {
    Run r;
    IntegrateOptions io;
    io.tol = opt.tol;
    io.t_max = 100.0 + 200.0 / eps;
    const std::array<EventSpec, 1> evs{EventSpec::splitting_line()};
    r.traj = integrate(spec, State{0.0, beta}, io, evs);
    for (const auto& e : r.traj.events) {
      if (!r.exits) {
        if (e.state.y < 0.0) r.exits = true;  // x' = -y > 0: rightward
      } else if (e.state.y > 0.0) {
        r.reenters = true;
        r.beta_prime = e.state.y;
        r.t_reentry = e.t;
        break;
      }
    }
    return r;
  };

  // threshold between capture by the focus and escape into the right plane
  double lo = beta_lo + 1e-6 * (beta_hi - beta_lo);
  double hi = beta_hi - 1e-6 * (beta_hi - beta_lo);
  if (!run_from(hi).exits) {
    rep.search_trace.push_back("no escape even at beta just below h(x_M)");
    throw error(errc::no_witness, "no beta in (g(lambda), h(x_M)) escapes the focus");
  }
  if (!run_from(lo).exits) {
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (run_from(mid).exits) hi = mid; else lo = mid;
    }
  } else {
    hi = lo;  // every beta escapes; take candidates from the bottom
  }
  rep.search_trace.push_back("escape threshold near beta = " + std::to_string(hi));

  WitnessRegion region;
  region.kind = WitnessKind::subcritical_V_prime;
  bool built = false;
  for (double frac : {0.02, 0.05, 0.1, 0.2, 0.3, 0.5}) {
    const double beta = hi + frac * (beta_hi - hi);
    if (!(beta < beta_hi)) break;
    const Run r = run_from(beta);
    std::string note = "beta = " + std::to_string(beta) + ": ";
    if (!r.exits) note += "captured by focus";
    else if (!r.reenters) note += "escaped but no re-entry within t_max";
    else if (r.beta_prime <= beta) note += "re-entered below beta";
    else {
      rep.search_trace.push_back(note + "re-entry at beta' = " + std::to_string(r.beta_prime));
      region.beta = beta;
      region.beta_prime = r.beta_prime;
      region.segment_a = {0.0, r.beta_prime};
      region.segment_b = {0.0, beta};
      region.boundary = detail::resample(r.traj, r.t_reentry, opt.arc_samples);
      region.boundary.front() = {0.0, beta};
      region.boundary.back() = {0.0, r.beta_prime};
      rep.beta = beta;
      rep.beta_prime = r.beta_prime;
      built = true;
      break;
    }
    rep.search_trace.push_back(note);
  }
  if (!built)
    throw error(errc::no_witness, "no beta produced a re-entry above itself; trace: " +
                                      [&rep] {
                                        std::string s;
                                        for (const auto& t : rep.search_trace) s += t + "; ";
                                        return s;
                                      }());

  const CertificateResult seg = detail::verify_closing_segment(spec, region, opt.segment_samples);
  rep.witness_verified = seg.verified;

  // the coexisting stable orbit wraps around V'; seed the return map below it
  double v_min_y = region.boundary.front().y;
  for (const Vec2& p : region.boundary) v_min_y = std::min(v_min_y, p.y);
  OrbitOptions oo;
  oo.tol = opt.tol;
  oo.start_y = v_min_y - 0.2 * (region.beta_prime - v_min_y);
  try {
    PeriodicOrbit orbit = locate_orbit(spec, oo);
    orbit.classification = classify_orbit(spec, orbit).label;
    rep.orbit_found = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 2000; ++i) {
      const Vec2 p = orbit.cycle.at(orbit.period * i / 2000);
      worst = std::max(worst, polygon_inside_depth(region.boundary, p));
    }
    rep.orbit_outside_witness = worst <= opt.orbit_margin;
    rep.orbit = std::move(orbit);
  } catch (const error& e) {
    rep.search_trace.push_back(std::string("orbit search: ") + e.what());
  }
  return {std::move(region), std::move(rep)};
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CertificateResult& r) {
  nlohmann::json fails = nlohmann::json::array();
  for (const Vec2& p : r.failure_points) fails.push_back({{"x", p.x}, {"y", p.y}});
  return {{"verified", r.verified},
          {"min_inward_product", r.min_inward_product},
          {"samples", r.samples},
          {"failure_points", fails}};
}

inline nlohmann::json to_json(const PolygonRegion& w) {
  nlohmann::json verts = nlohmann::json::array();
  for (const Vec2& v : w.vertices) verts.push_back({{"x", v.x}, {"y", v.y}});
  return {{"vertices", verts},
          {"x_hat", w.x_hat},
          {"m1", w.m1},
          {"m4", w.m4},
          {"m4_literal_bound", w.m4_literal_bound},
          {"x2", w.x2},
          {"y1", w.y1},
          {"y3", w.y3},
          {"y5", w.y5},
          {"lambda", w.lambda}};
}

inline nlohmann::json to_json(const WitnessRegion& w) {
  nlohmann::json j;
  j["kind"] = w.kind == WitnessKind::super_explosion_V ? "V" : "Vprime";
  j["segment"] = {{"a", {{"x", w.segment_a.x}, {"y", w.segment_a.y}}},
                  {"b", {{"x", w.segment_b.x}, {"y", w.segment_b.y}}}};
  if (w.kind == WitnessKind::super_explosion_V) {
    j["y_hat"] = w.y_hat;
  } else {
    j["beta"] = w.beta;
    j["beta_prime"] = w.beta_prime;
  }
  j["boundary_points"] = w.boundary.size();
  return j;
}

}  // namespace canard
