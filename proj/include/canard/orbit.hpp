#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "canard/error.hpp"
#include "canard/integrate.hpp"
#include "canard/system.hpp"

namespace canard {

// ---------------------------------------------------------------------------
// Poincaré section and return map.
//
// The section is the half-line {x = lambda, y < F(lambda)}, crossed
// rightward: the velocity there is (F(lambda) - y, 0) with positive x
// component, so it is transverse everywhere off the equilibrium and every
// periodic orbit (which must encircle p_lambda) crosses it.
// ---------------------------------------------------------------------------

template <PlanarSystem S>
double fast_nullcline_at(const S& sys, double x) {
  return sys.field(x, 0.0).x;  // F(x) - 0
}

// The window stops a margin short of the equilibrium: a trajectory
// converging to p_lambda slides along x = lambda and would otherwise
// register noise-level crossings as returns.
template <PlanarSystem S>
EventSpec return_section(const S& sys) {
  const double Fl = fast_nullcline_at(sys, sys.lambda());
  const double margin = 1e-6 * (1.0 + std::abs(Fl));
  return EventSpec::section(sys.lambda(), CrossDirection::rightward, EventAction::halt,
                            std::nullopt, Fl - margin);
}

struct ReturnMapOptions {
  double tol = 1e-10;
  double t_max = 0.0;  // 0 -> 100 + 200 / eps

  double resolve_t_max(double eps) const { return t_max > 0.0 ? t_max : 100.0 + 200.0 / eps; }
};

template <PlanarSystem S>
std::pair<double, double> return_map_timed(const S& sys, double y0,
                                           ReturnMapOptions opt = {}) {
  const double lam = sys.lambda();
  const double Fl = fast_nullcline_at(sys, lam);
  if (!(y0 < Fl))
    throw std::invalid_argument("return_map: y0 must lie below F(lambda)");
  const auto [state, t] = first_return(sys, return_section(sys), State{lam, y0},
                                       opt.resolve_t_max(sys.epsilon()), opt.tol);
  return {state.y, t};
}

template <PlanarSystem S>
double return_map(const S& sys, double y0, ReturnMapOptions opt = {}) {
  return return_map_timed(sys, y0, opt).first;
}

// ---------------------------------------------------------------------------
// Periodic orbits
// ---------------------------------------------------------------------------

enum class OrbitClass {
  small_cycle,
  canard_without_head,
  canard_with_head,
  relaxation_oscillation,
  ambiguous,
};

inline const char* to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::small_cycle:            return "SmallCycle";
    case OrbitClass::canard_without_head:    return "CanardWithoutHead";
    case OrbitClass::canard_with_head:       return "CanardWithHead";
    case OrbitClass::relaxation_oscillation: return "RelaxationOscillation";
    case OrbitClass::ambiguous:              return "Ambiguous";
  }
  return "?";
}

struct PeriodicOrbit {
  Trajectory cycle;  // one period, section to section
  double period = 0.0;
  double amplitude = 0.0;  // max y - min y
  double x_min = 0.0, x_max = 0.0;
  double section_y = 0.0;              // fixed point of the return map
  double stability_multiplier = 0.0;   // finite-difference return-map slope
  double closure_error = 0.0;
  OrbitClass classification = OrbitClass::ambiguous;
};

struct OrbitOptions {
  double tol = 1e-10;
  double fixpoint_tol = 1e-10;
  double closure_tol = 1e-6;
  double equilibrate_time = 0.0;  // 0 -> 50 / eps
  std::optional<double> start_y;  // section ordinate to iterate from
  int max_iterates = 64;
  ReturnMapOptions return_opts() const { return {tol, 0.0}; }
};

namespace detail {

// Iterate the return map until the iterates either contract to a fixed
// point, collapse into the equilibrium, or run out of budget.
template <PlanarSystem S>
std::vector<double> collect_iterates(const S& sys, double y_start, const OrbitOptions& opt) {
  const double Fl = fast_nullcline_at(sys, sys.lambda());
  std::vector<double> ys{y_start};
  for (int i = 0; i < opt.max_iterates; ++i) {
    double next;
    try {
      next = return_map(sys, ys.back(), opt.return_opts());
    } catch (const error& e) {
      if (e.code() == errc::no_return || e.code() == errc::diverged) break;
      throw;
    }
    ys.push_back(next);
    if (std::abs(next - ys[ys.size() - 2]) < 0.25 * opt.fixpoint_tol) break;
    if (Fl - next < 1e-9 * (1.0 + std::abs(Fl))) break;  // spiraling into p_lambda
    if (ys.size() >= 4) {
      const double d1 = std::abs(ys[ys.size() - 1] - ys[ys.size() - 2]);
      const double d2 = std::abs(ys[ys.size() - 2] - ys[ys.size() - 3]);
      if (d1 < 1e-7 * (1.0 + std::abs(next)) && d1 < 0.9 * d2) break;  // good enough to bracket
    }
  }
  return ys;
}

}  // namespace detail

// Locate a stable fixed point of the return map and reconstruct one period.
// Works for any planar system; classification is attached separately.
template <PlanarSystem S>
PeriodicOrbit locate_orbit(const S& sys, const OrbitOptions& opt = {}) {
  const double lam = sys.lambda();
  const double Fl = fast_nullcline_at(sys, lam);
  const double eps = sys.epsilon();

  // seed ordinate on the section; an unusable hint falls back to equilibration
  double y_seed;
  if (opt.start_y && *opt.start_y < Fl) {
    y_seed = *opt.start_y;
  } else {
    // nudge off the equilibrium and let the flow pick the attractor
    const double t_eq = opt.equilibrate_time > 0.0 ? opt.equilibrate_time : 50.0 / eps;
    IntegrateOptions io;
    io.t_max = t_eq;
    io.tol = opt.tol;
    io.store_dense = false;
    const State p_lam{lam, Fl};
    const Trajectory warm = integrate(sys, State{lam, Fl - 1e-3 * (1.0 + std::abs(Fl))}, io);
    if (warm.status == IntegrationStatus::diverged)
      throw error(errc::no_orbit, "flow from the equilibrium neighbourhood escapes");
    if (norm(warm.back() - p_lam) < 1e-6 * (1.0 + norm(p_lam)))
      throw error(errc::no_orbit, "flow converges to the equilibrium p_lambda");
    // carry on to the section
    EventSpec sec = return_section(sys);
    IntegrateOptions io2;
    io2.t_max = opt.return_opts().resolve_t_max(eps);
    io2.tol = opt.tol;
    io2.store_dense = false;
    const std::array<EventSpec, 1> evs{sec};
    const Trajectory to_sec = integrate(sys, warm.back(), io2, evs);
    if (to_sec.status != IntegrationStatus::halted_at_event)
      throw error(errc::no_orbit, "attractor never crosses the return section");
    y_seed = to_sec.events.back().state.y;
  }

  const std::vector<double> ys = detail::collect_iterates(sys, y_seed, opt);
  if (ys.size() < 2)
    throw error(errc::no_orbit, "return map undefined at the seed ordinate");
  if (Fl - ys.back() < 1e-8 * (1.0 + std::abs(Fl)))
    throw error(errc::no_orbit, "iterates collapse into the equilibrium");

  // phi(y) = P(y) - y; nullopt when the trajectory never comes back
  auto phi = [&](double y) -> std::optional<double> {
    try {
      return return_map(sys, y, opt.return_opts()) - y;
    } catch (const error& e) {
      if (e.code() == errc::no_return || e.code() == errc::diverged) return std::nullopt;
      throw;
    }
  };

  const double y_cap = Fl - 1e-7 * (1.0 + std::abs(Fl));
  double y_star = ys.back();
  const double d_last = ys.back() - ys[ys.size() - 2];
  double a = 0.0, b = 0.0, fa = 0.0, fb = 0.0;
  bool bracketed = false;

  if (std::abs(d_last) < 0.25 * opt.fixpoint_tol) {
    bracketed = true;  // iterates already indistinguishable from the fixed point
    a = b = y_star;
    fa = fb = 0.0;
  }

  // fast path: Aitken extrapolation of a contracting tail
  if (!bracketed && ys.size() >= 3) {
    const double d2 = ys[ys.size() - 2] - ys[ys.size() - 3];
    if (d2 != d_last && std::abs(d_last) < 0.9 * std::abs(d2)) {
      const double est = ys.back() - d_last * d_last / (d_last - d2);
      const double w = std::max({4.0 * std::abs(d_last), 4.0 * opt.fixpoint_tol, 1e-12});
      const double lo = est - w, hi = std::min(est + w, y_cap);
      if (lo < hi) {
        const auto flo = phi(lo), fhi = phi(hi);
        if (flo && fhi && std::signbit(*flo) != std::signbit(*fhi)) {
          a = lo; b = hi; fa = *flo; fb = *fhi;
          bracketed = true;
        }
      }
    }
  }

  // robust path: the iterates march monotonically toward the fixed point,
  // so probe ahead of them with doubling stride until phi changes sign
  // (P is monotone, hence phi keeps one sign until the fixed point)
  if (!bracketed) {
    const double dir = d_last > 0.0 ? 1.0 : -1.0;
    double prev = ys.back();
    double prev_phi = d_last;  // phi at the second-to-last iterate has this sign
    double stride = std::max({8.0 * std::abs(d_last), 8.0 * opt.fixpoint_tol, 1e-12});
    for (int probe = 0; probe < 48 && !bracketed; ++probe, stride *= 2.0) {
      double next = prev + dir * stride;
      if (dir > 0.0 && next > y_cap) next = y_cap;
      const auto f = phi(next);
      if (!f) break;
      if (std::signbit(*f) != std::signbit(prev_phi)) {
        a = std::min(prev, next);
        b = std::max(prev, next);
        fa = prev < next ? prev_phi : *f;
        fb = prev < next ? *f : prev_phi;
        bracketed = true;
        break;
      }
      prev = next;
      prev_phi = *f;
      if (dir > 0.0 && next >= y_cap) break;
    }
  }

  if (!bracketed)
    throw error(errc::no_orbit, "no sign change of P(y) - y ahead of the iterates");
  if (fa != 0.0 && fb != 0.0) {
    while (b - a > opt.fixpoint_tol) {
      const double m = 0.5 * (a + b);
      const auto fm = phi(m);
      if (!fm) throw error(errc::no_orbit, "return map lost inside the bracket");
      if (*fm == 0.0) { a = b = m; break; }
      if (std::signbit(*fm) == std::signbit(fa)) { a = m; fa = *fm; }
      else { b = m; fb = *fm; }
    }
    y_star = 0.5 * (a + b);
  } else {
    y_star = fa == 0.0 ? a : b;
  }

  // one full period with dense output
  PeriodicOrbit orbit;
  orbit.section_y = y_star;
  EventSpec sec = return_section(sys);
  IntegrateOptions io;
  io.t_max = opt.return_opts().resolve_t_max(eps);
  io.tol = opt.tol;
  io.store_dense = true;
  const std::array<EventSpec, 1> evs{sec};
  orbit.cycle = integrate(sys, State{lam, y_star}, io, evs);
  if (orbit.cycle.status != IntegrationStatus::halted_at_event)
    throw error(errc::no_orbit, "periodic orbit reconstruction failed to close");
  orbit.period = orbit.cycle.events.back().t;
  orbit.closure_error = norm(orbit.cycle.back() - orbit.cycle.state.front());
  if (orbit.closure_error > opt.closure_tol)
    throw error(errc::no_orbit, "cycle closure error " + std::to_string(orbit.closure_error) +
                                    " exceeds tolerance");
  orbit.amplitude = orbit.cycle.max_y() - orbit.cycle.min_y();
  orbit.x_min = orbit.cycle.min_x();
  orbit.x_max = orbit.cycle.max_x();

  // return-map derivative by central difference
  double dm = std::max(1e-6 * std::max(orbit.amplitude, 1e-3), 1e-9);
  dm = std::min(dm, 0.25 * (Fl - y_star));
  try {
    const double pp = return_map(sys, y_star + dm, opt.return_opts());
    const double pm = return_map(sys, y_star - dm, opt.return_opts());
    orbit.stability_multiplier = (pp - pm) / (2.0 * dm);
  } catch (const error&) {
    orbit.stability_multiplier = std::numeric_limits<double>::quiet_NaN();
  }
  return orbit;
}

// ---------------------------------------------------------------------------
// Classification by slow-branch tracking
// ---------------------------------------------------------------------------

struct ClassifyOptions {
  double small_fraction = 0.02;  // M^m tracking below this is "not a canard"
  double side_fraction = 0.05;   // M^l / M^r tracking threshold
  int samples = 4000;
};

struct ClassificationReport {
  OrbitClass label = OrbitClass::ambiguous;
  double tube_radius = 0.0;
  double left_fraction = 0.0, middle_fraction = 0.0, right_fraction = 0.0;
};

namespace detail {

// Squared distance from p to the graph {(u, B(u)) : u in [ulo, uhi]}.
// The nearest graph point has |u - p.x| <= distance, so only a window of
// half-width `cap` around p.x matters when testing "within cap".
inline double graph_dist2(const Polynomial& branch, double ulo, double uhi, Vec2 p,
                          double cap) {
  double lo = std::max(ulo, p.x - cap), hi = std::min(uhi, p.x + cap);
  if (!(lo <= hi)) return std::numeric_limits<double>::infinity();
  const int n = 24;
  double best = std::numeric_limits<double>::infinity(), bu = lo;
  for (int i = 0; i <= n; ++i) {
    const double u = lo + (hi - lo) * i / n;
    const double dx = p.x - u, dy = p.y - branch(u);
    const double d2 = dx * dx + dy * dy;
    if (d2 < best) { best = d2; bu = u; }
  }
  double a = std::max(lo, bu - (hi - lo) / n), b = std::min(hi, bu + (hi - lo) / n);
  for (int it = 0; it < 40 && b - a > 1e-14 * (1.0 + std::abs(b)); ++it) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    auto d2at = [&](double u) {
      const double dx = p.x - u, dy = p.y - branch(u);
      return dx * dx + dy * dy;
    };
    if (d2at(m1) < d2at(m2)) b = m2; else a = m1;
  }
  const double u = 0.5 * (a + b);
  const double dx = p.x - u, dy = p.y - branch(u);
  return std::min(best, dx * dx + dy * dy);
}

}  // namespace detail

inline ClassificationReport classify_orbit(const SystemSpec& spec, const PeriodicOrbit& orbit,
                                           ClassifyOptions opt = {}) {
  const ManifoldGeometry geo = spec.geometry();
  ClassificationReport rep;
  const double delta = 2.0 * std::sqrt(spec.epsilon()) * std::max(1.0, orbit.amplitude) / 10.0;
  rep.tube_radius = delta;

  const double left_lo = std::min(orbit.x_min - 2.0 * delta - 1.0, -1.0);
  const double right_hi = std::max(orbit.x_max + 2.0 * delta + 1.0, geo.x_M + 1.0);
  const Polynomial& right_branch = spec.f() ? *spec.f() : spec.h();

  // Tubes end delta short of the corner and the fold: near those points all
  // branches blend and proximity does not distinguish which one is tracked.
  const double l_hi = -delta;
  const double m_lo = delta, m_hi = geo.x_M - delta;
  const double r_lo = geo.x_M + delta;

  const double d2 = delta * delta;
  auto in_tube = [&](const Polynomial& b, double ulo, double uhi, Vec2 p) {
    if (!(ulo <= uhi) || p.x < ulo || p.x > uhi) return false;
    return detail::graph_dist2(b, ulo, uhi, p, delta) <= d2;
  };

  double len = 0.0, len_l = 0.0, len_m = 0.0, len_r = 0.0;
  const double T = orbit.period;
  State prev = orbit.cycle.at(0.0);
  for (int i = 1; i <= opt.samples; ++i) {
    const State cur = orbit.cycle.at(T * i / opt.samples);
    const double ds = norm(cur - prev);
    const Vec2 mid = 0.5 * (cur + prev);
    len += ds;
    if (in_tube(spec.g(), left_lo, l_hi, mid)) len_l += ds;
    if (in_tube(spec.h(), m_lo, m_hi, mid)) len_m += ds;
    if (in_tube(right_branch, r_lo, right_hi, mid)) len_r += ds;
    prev = cur;
  }
  rep.left_fraction = len_l / len;
  rep.middle_fraction = len_m / len;
  rep.right_fraction = len_r / len;

  // A cycle is a canard when it tracks the repelling branch beyond the
  // corner ball; it has a head when it reaches both far attracting
  // branches (the head is the wide excursion across the fold).
  const double fl = rep.left_fraction, fm = rep.middle_fraction, fr = rep.right_fraction;
  const bool reaches_both_sides = fl >= opt.side_fraction && fr >= opt.side_fraction;
  if (orbit.x_min >= -delta && fm < opt.small_fraction)
    rep.label = OrbitClass::small_cycle;
  else if (fm < opt.small_fraction && reaches_both_sides)
    rep.label = OrbitClass::relaxation_oscillation;
  else if (fm >= opt.small_fraction && reaches_both_sides)
    rep.label = OrbitClass::canard_with_head;
  else if (fm >= opt.small_fraction)
    rep.label = OrbitClass::canard_without_head;
  else
    rep.label = OrbitClass::ambiguous;
  return rep;
}

inline PeriodicOrbit find_periodic_orbit(const SystemSpec& spec, OrbitOptions opt = {},
                                         ClassifyOptions copt = {}) {
  spec.ensure_valid();
  PeriodicOrbit orbit = locate_orbit(spec, opt);
  orbit.classification = classify_orbit(spec, orbit, copt).label;
  return orbit;
}

// ---------------------------------------------------------------------------
// Parameter sweeps, explosion and grazing location
// ---------------------------------------------------------------------------

struct SweepRow {
  double lambda = 0.0;
  bool has_orbit = false;
  double amplitude = 0.0, x_min = 0.0, x_max = 0.0, period = 0.0;
  std::string classification = "NoOrbit";
};

struct ExplosionInterval {
  double lambda_lo = 0.0, lambda_hi = 0.0;
  double amplitude_lo = 0.0, amplitude_hi = 0.0;
  bool grows_with_lambda = false;  // orientation observed while bracketing
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<ExplosionInterval> explosion_intervals;
};

struct SweepOptions {
  double jump_threshold = 1.0;
  double refine_width = 1e-4;  // width_tol handed to locate_explosion
  bool refine = true;
  int threads = 1;  // rows are independent; warm starts chain within a block
  OrbitOptions orbit;
  ClassifyOptions classify;
};

inline ExplosionInterval locate_explosion(const SystemSpec& spec, double lambda_lo,
                                          double lambda_hi, double width_tol,
                                          double min_jump = 1.0, OrbitOptions opt = {});

namespace detail {

inline SweepRow sweep_row(const SystemSpec& spec, double lam, const SweepOptions& opt,
                          std::optional<double>& warm) {
  SweepRow row;
  row.lambda = lam;
  const SystemSpec at = spec.with_lambda(lam);
  OrbitOptions oo = opt.orbit;
  oo.start_y = warm;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const PeriodicOrbit orb = locate_orbit(at, oo);
      row.has_orbit = true;
      row.amplitude = orb.amplitude;
      row.x_min = orb.x_min;
      row.x_max = orb.x_max;
      row.period = orb.period;
      row.classification = to_string(classify_orbit(at, orb, opt.classify).label);
      warm = orb.section_y;
      break;
    } catch (const error& e) {
      if (e.code() != errc::no_orbit) throw;
      if (attempt == 0 && oo.start_y) {
        oo.start_y.reset();  // warm start failed; fall back to equilibration
        continue;
      }
      warm.reset();
    }
  }
  return row;
}

}  // namespace detail

inline SweepResult sweep(const SystemSpec& spec, double lambda_lo, double lambda_hi, int n,
                         SweepOptions opt = {}) {
  if (!(lambda_lo < lambda_hi) || n < 2)
    throw std::invalid_argument("sweep: need lambda_lo < lambda_hi and n >= 2");
  SweepResult result;
  result.rows.resize(static_cast<std::size_t>(n));
  auto lambda_of = [&](int i) { return lambda_lo + (lambda_hi - lambda_lo) * i / (n - 1); };

  const int threads = std::clamp(opt.threads, 1, n);
  if (threads <= 1) {
    std::optional<double> warm;
    for (int i = 0; i < n; ++i)
      result.rows[static_cast<std::size_t>(i)] = detail::sweep_row(spec, lambda_of(i), opt, warm);
  } else {
    std::vector<std::future<void>> jobs;
    for (int b = 0; b < threads; ++b) {
      const int lo = n * b / threads, hi = n * (b + 1) / threads;
      jobs.push_back(std::async(std::launch::async, [&, lo, hi] {
        std::optional<double> warm;
        for (int i = lo; i < hi; ++i)
          result.rows[static_cast<std::size_t>(i)] = detail::sweep_row(spec, lambda_of(i), opt, warm);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
    const SweepRow& a = result.rows[i];
    const SweepRow& b = result.rows[i + 1];
    if (!a.has_orbit || !b.has_orbit) continue;
    if (std::abs(b.amplitude - a.amplitude) > opt.jump_threshold) {
      if (opt.refine) {
        result.explosion_intervals.push_back(locate_explosion(
            spec, a.lambda, b.lambda, opt.refine_width, opt.jump_threshold, opt.orbit));
      } else {
        result.explosion_intervals.push_back(
            {a.lambda, b.lambda, a.amplitude, b.amplitude, b.amplitude > a.amplitude});
      }
    }
  }
  return result;
}

// Bisect on the amplitude jump until the bracketing interval is narrower
// than width_tol. Each probe is assigned to the small- or large-amplitude
// side by proximity.
inline ExplosionInterval locate_explosion(const SystemSpec& spec, double lambda_lo,
                                          double lambda_hi, double width_tol,
                                          double min_jump, OrbitOptions opt) {
  if (!(lambda_lo < lambda_hi))
    throw std::invalid_argument("locate_explosion: need lambda_lo < lambda_hi");

  // An attractor that is the equilibrium itself counts as amplitude zero,
  // so a bracket may touch the Hopf point where the orbit family vanishes.
  auto amplitude_at = [&](double lam,
                          std::optional<double> warm) -> std::pair<double, std::optional<double>> {
    OrbitOptions oo = opt;
    oo.start_y = warm;
    const SystemSpec at = spec.with_lambda(lam);
    for (int attempt = 0; attempt < 2; ++attempt) {
      try {
        const PeriodicOrbit orb = locate_orbit(at, oo);
        return {orb.amplitude, orb.section_y};
      } catch (const error& e) {
        if (e.code() != errc::no_orbit) throw;
        if (attempt == 0 && oo.start_y) {
          oo.start_y.reset();
          continue;
        }
      }
    }
    return {0.0, std::nullopt};
  };

  auto [amp_lo, seed_lo] = amplitude_at(lambda_lo, std::nullopt);
  auto [amp_hi, seed_hi] = amplitude_at(lambda_hi, std::nullopt);
  const double jump0 = std::abs(amp_hi - amp_lo);
  if (jump0 <= min_jump)
    throw error(errc::no_jump, "amplitude jump " + std::to_string(jump0) +
                                   " does not exceed threshold " + std::to_string(min_jump));

  double a = lambda_lo, b = lambda_hi, aa = amp_lo, ab = amp_hi;
  std::optional<double> wa = seed_lo, wb = seed_hi;
  while (b - a > width_tol) {
    const double m = 0.5 * (a + b);
    auto [am, sm] = amplitude_at(m, std::abs(m - a) < std::abs(m - b) ? wa : wb);
    if (std::abs(am - aa) <= std::abs(am - ab)) {
      a = m; aa = am; wa = sm;
    } else {
      b = m; ab = am; wb = sm;
    }
  }
  return {a, b, aa, ab, ab > aa};
}

// Bisection on the sign of the orbit's leftmost excursion.
inline double find_grazing(const SystemSpec& spec, double lambda_lo, double lambda_hi,
                           double lambda_tol = 1e-8, OrbitOptions opt = {}) {
  auto x_min_at = [&](double lam, std::optional<double> warm) {
    OrbitOptions oo = opt;
    oo.start_y = warm;
    const SystemSpec at = spec.with_lambda(lam);
    try {
      const PeriodicOrbit orb = locate_orbit(at, oo);
      return std::pair<double, double>{orb.x_min, orb.section_y};
    } catch (const error& e) {
      if (e.code() == errc::no_orbit && warm) {
        oo.start_y.reset();
        const PeriodicOrbit orb = locate_orbit(at, oo);
        return std::pair<double, double>{orb.x_min, orb.section_y};
      }
      throw;
    }
  };
  auto [xlo, wlo] = x_min_at(lambda_lo, std::nullopt);
  auto [xhi, whi] = x_min_at(lambda_hi, std::nullopt);
  if (!(xlo < 0.0 && xhi > 0.0))
    throw error(errc::not_bracketed, "orbit x_min does not change sign over the bracket");
  double a = lambda_lo, b = lambda_hi, wa = wlo, wb = whi;
  while (b - a > lambda_tol) {
    const double m = 0.5 * (a + b);
    auto [xm, sm] = x_min_at(m, std::abs(m - a) < std::abs(m - b) ? wa : wb);
    if (xm < 0.0) { a = m; wa = sm; }
    else { b = m; wb = sm; }
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline std::string sweep_csv(const SweepResult& res) {
  std::string out = "lambda,amplitude,x_min,x_max,period,classification\n";
  char buf[192];
  for (const SweepRow& r : res.rows) {
    if (r.has_orbit)
      std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g,%.15g,%.15g,%s\n", r.lambda,
                    r.amplitude, r.x_min, r.x_max, r.period, r.classification.c_str());
    else
      std::snprintf(buf, sizeof buf, "%.15g,,,,,NoOrbit\n", r.lambda);
    out += buf;
  }
  return out;
}

inline nlohmann::json to_json(const ExplosionInterval& e) {
  return {{"lambda_lo", e.lambda_lo},
          {"lambda_hi", e.lambda_hi},
          {"amplitude_lo", e.amplitude_lo},
          {"amplitude_hi", e.amplitude_hi},
          {"grows_with_lambda", e.grows_with_lambda}};
}

inline nlohmann::json explosion_intervals_json(const SweepResult& res) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : res.explosion_intervals) arr.push_back(to_json(e));
  return {{"explosion_intervals", arr}};
}

inline nlohmann::json to_json(const PeriodicOrbit& o) {
  return {{"period", o.period},
          {"amplitude", o.amplitude},
          {"x_min", o.x_min},
          {"x_max", o.x_max},
          {"section_y", o.section_y},
          {"stability_multiplier", o.stability_multiplier},
          {"closure_error", o.closure_error},
          {"classification", to_string(o.classification)}};
}

}  // namespace canard
