#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "canard/error.hpp"
#include "canard/system.hpp"

namespace canard {

// ---------------------------------------------------------------------------
// Events. All supported events are crossings of a vertical line x = c:
// the splitting line (c = 0), an arbitrary section, or the slow nullcline
// (c = lambda). Crossing direction is resolved from the sign change of
// x - c across the step.
// ---------------------------------------------------------------------------

enum class EventKind { splitting_line, vertical_section, slow_nullcline };
enum class EventAction { record, halt };
enum class CrossDirection { leftward, rightward, both };

struct EventSpec {
  EventKind kind = EventKind::splitting_line;
  EventAction action = EventAction::record;
  double x0 = 0.0;  // only used by vertical_section
  CrossDirection direction = CrossDirection::both;
  std::optional<double> y_min, y_max;

  static EventSpec splitting_line(EventAction a = EventAction::record) {
    return {EventKind::splitting_line, a, 0.0, CrossDirection::both, {}, {}};
  }
  static EventSpec slow_nullcline(EventAction a = EventAction::record) {
    return {EventKind::slow_nullcline, a, 0.0, CrossDirection::both, {}, {}};
  }
  static EventSpec section(double x0, CrossDirection dir,
                           EventAction a = EventAction::record,
                           std::optional<double> y_min = {},
                           std::optional<double> y_max = {}) {
    return {EventKind::vertical_section, a, x0, dir, y_min, y_max};
  }

  double position(double lambda) const {
    switch (kind) {
      case EventKind::splitting_line:   return 0.0;
      case EventKind::vertical_section: return x0;
      case EventKind::slow_nullcline:   return lambda;
    }
    return 0.0;
  }

  bool direction_ok(double before, double after) const {
    switch (direction) {
      case CrossDirection::rightward: return before < after;
      case CrossDirection::leftward:  return before > after;
      case CrossDirection::both:      return true;
    }
    return true;
  }

  bool window_ok(double y) const {
    if (y_min && y < *y_min) return false;
    if (y_max && y > *y_max) return false;
    return true;
  }

  const char* kind_name() const {
    switch (kind) {
      case EventKind::splitting_line:   return "splitting-line";
      case EventKind::vertical_section: return "section";
      case EventKind::slow_nullcline:   return "slow-nullcline";
    }
    return "?";
  }
};

struct TrajectoryEvent {
  double t = 0.0;
  State state;
  std::size_t event_index = 0;
};

enum class IntegrationStatus { completed, halted_at_event, diverged };

inline const char* to_string(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::completed:       return "completed";
    case IntegrationStatus::halted_at_event: return "halted-at-event";
    case IntegrationStatus::diverged:        return "diverged";
  }
  return "?";
}

// Quartic interpolant for one accepted step, valid on [t0, t_end].
struct DenseSegment {
  double t0 = 0.0, h = 1.0, t_end = 0.0;
  std::array<double, 5> cx{}, cy{};

  double eval_x(double t) const { return eval(cx, (t - t0) / h); }
  double eval_y(double t) const { return eval(cy, (t - t0) / h); }
  State eval_state(double t) const { return {eval_x(t), eval_y(t)}; }

  static double eval(const std::array<double, 5>& r, double th) {
    const double th1 = 1.0 - th;
    return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
  }
};

struct Trajectory {
  std::vector<double> t;
  std::vector<State> state;
  std::vector<TrajectoryEvent> events;
  std::vector<DenseSegment> dense;
  IntegrationStatus status = IntegrationStatus::completed;

  std::size_t size() const { return t.size(); }
  double t_back() const { return t.back(); }
  State back() const { return state.back(); }

  State at(double time) const {
    if (time <= t.front()) return state.front();
    if (time >= t.back()) return state.back();
    if (dense.empty()) {  // fall back to linear interpolation of the samples
      const auto it = std::upper_bound(t.begin(), t.end(), time);
      const std::size_t i = static_cast<std::size_t>(it - t.begin());
      const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
      return {state[i - 1].x + w * (state[i].x - state[i - 1].x),
              state[i - 1].y + w * (state[i].y - state[i - 1].y)};
    }
    auto it = std::upper_bound(dense.begin(), dense.end(), time,
                               [](double v, const DenseSegment& s) { return v < s.t_end; });
    if (it == dense.end()) return state.back();
    return it->eval_state(std::clamp(time, it->t0, it->t_end));
  }

  // Extrema of one coordinate from the dense interpolants (solver-accurate,
  // unlike sample-based extrema which miss in-step turning points).
  double min_x() const { return extremum(true, true); }
  double max_x() const { return extremum(true, false); }
  double min_y() const { return extremum(false, true); }
  double max_y() const { return extremum(false, false); }

 private:
  double extremum(bool on_x, bool want_min) const {
    double best = on_x ? state.front().x : state.front().y;
    auto consider = [&](double v) { best = want_min ? std::min(best, v) : std::max(best, v); };
    if (dense.empty()) {
      for (const State& s : state) consider(on_x ? s.x : s.y);
      return best;
    }
    for (const DenseSegment& seg : dense) {
      consider(on_x ? seg.eval_x(seg.t_end) : seg.eval_y(seg.t_end));
      // sample then ternary-polish the interior of the quartic
      const int n = 8;
      double lo = seg.t0, hi = seg.t_end, bt = lo;
      double bv = on_x ? seg.eval_x(lo) : seg.eval_y(lo);
      for (int i = 1; i <= n; ++i) {
        const double tt = seg.t0 + (seg.t_end - seg.t0) * i / n;
        const double v = on_x ? seg.eval_x(tt) : seg.eval_y(tt);
        if (want_min ? (v < bv) : (v > bv)) { bv = v; bt = tt; }
      }
      lo = std::max(seg.t0, bt - (seg.t_end - seg.t0) / n);
      hi = std::min(seg.t_end, bt + (seg.t_end - seg.t0) / n);
      for (int it = 0; it < 60 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        const double v1 = on_x ? seg.eval_x(m1) : seg.eval_y(m1);
        const double v2 = on_x ? seg.eval_x(m2) : seg.eval_y(m2);
        if (want_min ? (v1 < v2) : (v1 > v2)) hi = m2; else lo = m1;
      }
      const double tm = 0.5 * (lo + hi);
      consider(on_x ? seg.eval_x(tm) : seg.eval_y(tm));
    }
    return best;
  }
};

struct IntegrateOptions {
  double t_max = 500.0;
  double tol = 1e-9;
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-14;
  double diverge_radius = 1e8;
  bool store_dense = true;
  std::size_t max_steps = 80'000'000;

  double event_tol() const { return std::max(tol, 1e-10); }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0,
                          d7 = 69997945.0 / 29380423.0;
};

struct StepResult {
  State y1;
  Vec2 k7;
  double err = 0.0;  // scaled error estimate, accept when <= 1
  DenseSegment seg;
};

template <PlanarSystem S>
StepResult dopri5_step(const S& sys, double t, State y0, Vec2 k1, double h, double tol) {
  using T = Dopri5;
  auto f = [&sys](State s) { return sys.field(s.x, s.y); };

  const State s2{y0.x + h * T::a21 * k1.x, y0.y + h * T::a21 * k1.y};
  const Vec2 k2 = f(s2);
  const State s3{y0.x + h * (T::a31 * k1.x + T::a32 * k2.x),
                 y0.y + h * (T::a31 * k1.y + T::a32 * k2.y)};
  const Vec2 k3 = f(s3);
  const State s4{y0.x + h * (T::a41 * k1.x + T::a42 * k2.x + T::a43 * k3.x),
                 y0.y + h * (T::a41 * k1.y + T::a42 * k2.y + T::a43 * k3.y)};
  const Vec2 k4 = f(s4);
  const State s5{y0.x + h * (T::a51 * k1.x + T::a52 * k2.x + T::a53 * k3.x + T::a54 * k4.x),
                 y0.y + h * (T::a51 * k1.y + T::a52 * k2.y + T::a53 * k3.y + T::a54 * k4.y)};
  const Vec2 k5 = f(s5);
  const State s6{
      y0.x + h * (T::a61 * k1.x + T::a62 * k2.x + T::a63 * k3.x + T::a64 * k4.x + T::a65 * k5.x),
      y0.y + h * (T::a61 * k1.y + T::a62 * k2.y + T::a63 * k3.y + T::a64 * k4.y + T::a65 * k5.y)};
  const Vec2 k6 = f(s6);

  StepResult r;
  r.y1 = {y0.x + h * (T::b1 * k1.x + T::b3 * k3.x + T::b4 * k4.x + T::b5 * k5.x + T::b6 * k6.x),
          y0.y + h * (T::b1 * k1.y + T::b3 * k3.y + T::b4 * k4.y + T::b5 * k5.y + T::b6 * k6.y)};
  r.k7 = f(r.y1);

  const double ex =
      h * (T::e1 * k1.x + T::e3 * k3.x + T::e4 * k4.x + T::e5 * k5.x + T::e6 * k6.x + T::e7 * r.k7.x);
  const double ey =
      h * (T::e1 * k1.y + T::e3 * k3.y + T::e4 * k4.y + T::e5 * k5.y + T::e6 * k6.y + T::e7 * r.k7.y);
  const double scx = tol + tol * std::max(std::abs(y0.x), std::abs(r.y1.x));
  const double scy = tol + tol * std::max(std::abs(y0.y), std::abs(r.y1.y));
  r.err = std::sqrt(0.5 * ((ex / scx) * (ex / scx) + (ey / scy) * (ey / scy)));

  // dense output coefficients (Shampine interpolant)
  auto rcont = [&](double v0, double v1, double f0, double f1, double d) {
    std::array<double, 5> c{};
    const double dy = v1 - v0;
    const double bspl = h * f0 - dy;
    c[0] = v0;
    c[1] = dy;
    c[2] = bspl;
    c[3] = dy - h * f1 - bspl;
    c[4] = d;
    return c;
  };
  const double dxc = h * (T::d1 * k1.x + T::d3 * k3.x + T::d4 * k4.x + T::d5 * k5.x +
                          T::d6 * k6.x + T::d7 * r.k7.x);
  const double dyc = h * (T::d1 * k1.y + T::d3 * k3.y + T::d4 * k4.y + T::d5 * k5.y +
                          T::d6 * k6.y + T::d7 * r.k7.y);
  r.seg.t0 = t;
  r.seg.h = h;
  r.seg.t_end = t + h;
  r.seg.cx = rcont(y0.x, r.y1.x, k1.x, r.k7.x, dxc);
  r.seg.cy = rcont(y0.y, r.y1.y, k1.y, r.k7.y, dyc);
  return r;
}

struct EventHit {
  double t = 0.0;
  State state;
  std::size_t index = 0;
  bool halt = false;
};

// Scan one accepted step for the earliest admissible crossing of each event
// line. Sign changes are detected on a subsample grid of the dense output
// and refined by safeguarded bisection; a subsample that sits exactly on
// the line (a snapped restart point) carries no sign and is skipped.
inline std::optional<EventHit> scan_events(const DenseSegment& seg,
                                           std::span<const EventSpec> events, double lambda,
                                           double event_tol) {
  constexpr int kGrid = 32;
  std::optional<EventHit> best;
  for (std::size_t ei = 0; ei < events.size(); ++ei) {
    const EventSpec& ev = events[ei];
    const double c = ev.position(lambda);
    double prev_t = seg.t0;
    double prev_s = seg.eval_x(seg.t0) - c;
    for (int j = 1; j <= kGrid; ++j) {
      const double tt = seg.t0 + (seg.t_end - seg.t0) * j / kGrid;
      const double ss = seg.eval_x(tt) - c;
      if (prev_s != 0.0 && ss != 0.0 && std::signbit(prev_s) != std::signbit(ss)) {
        if (ev.direction_ok(prev_s, ss)) {
          // refine on [prev_t, tt]
          double a = prev_t, b = tt, fa = prev_s;
          for (int it = 0; it < 80 && b - a > 0.0; ++it) {
            double m = 0.5 * (a + b);
            const double fb = seg.eval_x(b) - c;
            if (fb != fa) {
              const double sct = a - fa * (b - a) / (fb - fa);
              const double guard = 1e-3 * (b - a);
              if (sct > a + guard && sct < b - guard) m = sct;
            }
            const double fm = seg.eval_x(m) - c;
            if (fm == 0.0) { a = b = m; break; }
            if (std::signbit(fm) == std::signbit(fa)) { a = m; fa = fm; }
            else b = m;
            if (std::abs(fm) <= 1e-3 * event_tol) { a = b = m; break; }
          }
          const double te = 0.5 * (a + b);
          State se = seg.eval_state(te);
          if (std::abs(se.x - c) <= event_tol && ev.window_ok(se.y)) {
            se.x = c;  // snap; the residual is below event_tol by construction
            if (!best || te < best->t)
              best = EventHit{te, se, ei, ev.action == EventAction::halt};
            break;  // earliest crossing of this event within the step
          }
        }
      }
      if (ss != 0.0) { prev_t = tt; prev_s = ss; }
    }
  }
  return best;
}

}  // namespace detail

// Adaptive integration of a planar fast/slow field with event location.
// The step is split at every located event and the integration restarted
// there, so a step never straddles the splitting line by more than the
// event residual. Throws on step underflow; divergence is reported in the
// returned status.
template <PlanarSystem S>
Trajectory integrate(const S& sys, State init, const IntegrateOptions& opt,
                     std::span<const EventSpec> events = {}) {
  if (!(opt.tol >= 1e-13 && opt.tol <= 1e-3))
    throw std::invalid_argument("integrate: tol must lie in [1e-13, 1e-3]");
  if (!std::isfinite(init.x) || !std::isfinite(init.y))
    throw std::invalid_argument("integrate: non-finite initial state");

  Trajectory traj;
  traj.t.push_back(0.0);
  traj.state.push_back(init);

  double t = 0.0;
  State s = init;
  Vec2 k1 = sys.field(s.x, s.y);

  // conservative first step from the field magnitude
  double h = std::min({0.01 * (1.0 + norm(s)) / (1.0 + norm(k1)), opt.h_max, opt.t_max});
  h = std::max(h, opt.h_min);

  const double etol = opt.event_tol();
  std::size_t steps = 0;

  while (t < opt.t_max) {
    if (++steps > opt.max_steps)
      throw error(errc::step_underflow, "step budget exhausted before t_max");
    h = std::min({h, opt.t_max - t, opt.h_max});

    const detail::StepResult st = detail::dopri5_step(sys, t, s, k1, h, opt.tol);
    if (!std::isfinite(st.err) || st.err > 1.0) {
      const double shrink = std::isfinite(st.err)
                                ? std::max(0.2, 0.9 * std::pow(st.err, -0.2))
                                : 0.2;
      h *= shrink;
      if (h < opt.h_min)
        throw error(errc::step_underflow, "step size underflow at t = " + std::to_string(t));
      continue;
    }

    // accepted: look for events inside the step
    const auto hit = detail::scan_events(st.seg, events, sys.lambda(), etol);
    if (hit && hit->t > t) {
      DenseSegment seg = st.seg;
      seg.t_end = hit->t;
      traj.t.push_back(hit->t);
      traj.state.push_back(hit->state);
      if (opt.store_dense) traj.dense.push_back(seg);
      traj.events.push_back({hit->t, hit->state, hit->index});
      if (hit->halt) {
        traj.status = IntegrationStatus::halted_at_event;
        return traj;
      }
      t = hit->t;
      s = hit->state;
      k1 = sys.field(s.x, s.y);  // FSAL broken across the split
      continue;
    }

    t += h;
    s = st.y1;
    k1 = st.k7;
    traj.t.push_back(t);
    traj.state.push_back(s);
    if (opt.store_dense) traj.dense.push_back(st.seg);

    if (norm(s) > opt.diverge_radius) {
      traj.status = IntegrationStatus::diverged;
      return traj;
    }

    const double grow = st.err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(st.err, -0.2), 0.2, 5.0);
    h = std::max(h * grow, opt.h_min);
  }
  traj.status = IntegrationStatus::completed;
  return traj;
}

// First subsequent crossing of a section starting on it. The start point
// carries no sign at the line, so the trivial t = 0 hit is not reported.
template <PlanarSystem S>
std::pair<State, double> first_return(const S& sys, const EventSpec& section, State start,
                                      double t_max, double tol) {
  const double c = section.position(sys.lambda());
  if (std::abs(start.x - c) > std::max(tol, 1e-10))
    throw std::invalid_argument("first_return: start does not lie on the section");
  start.x = c;  // a sub-residual offset would register as an instant crossing
  EventSpec halt_section = section;
  halt_section.action = EventAction::halt;
  IntegrateOptions opt;
  opt.t_max = t_max;
  opt.tol = tol;
  opt.store_dense = false;
  const std::array<EventSpec, 1> evs{halt_section};
  const Trajectory traj = integrate(sys, start, opt, evs);
  if (traj.status == IntegrationStatus::diverged)
    throw error(errc::diverged, "trajectory escaped before returning to the section");
  if (traj.status != IntegrationStatus::halted_at_event)
    throw error(errc::no_return, "no section return within t_max = " + std::to_string(t_max));
  return {traj.events.back().state, traj.events.back().t};
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,x,y\n";
  char buf[96];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.15g,%.15g,%.15g\n", traj.t[i], traj.state[i].x,
                  traj.state[i].y);
    out += buf;
  }
  return out;
}

inline nlohmann::json event_log_json(const Trajectory& traj,
                                     std::span<const EventSpec> events) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : traj.events) {
    nlohmann::json j;
    j["t"] = e.t;
    j["x"] = e.state.x;
    j["y"] = e.state.y;
    j["event"] = e.event_index < events.size() ? events[e.event_index].kind_name() : "?";
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace canard
