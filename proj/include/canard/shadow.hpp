#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "canard/error.hpp"
#include "canard/integrate.hpp"
#include "canard/orbit.hpp"
#include "canard/system.hpp"

namespace canard {

// Shadow systems agree with the piecewise field on x >= 0 and replace the
// left branch: either by extending h across the splitting line (the smooth
// shadow) or by substituting a shallower branch g~ with g~'(0) > g'(0).

enum class ShadowKind { extend_h, replace_g };

inline SmoothField extend_h_shadow(const SystemSpec& spec) {
  return SmoothField(spec.epsilon(), spec.lambda(), spec.h());
}

inline PiecewiseField replace_g_shadow(const SystemSpec& spec, Polynomial g_tilde) {
  return PiecewiseField(spec.epsilon(), spec.lambda(), std::move(g_tilde), spec.h(),
                        spec.f(), spec.x_split2());
}

struct ShadowBoundReport {
  double entry_y = 0.0;       // y_c
  double max_R_excess = 0.0;  // max over matched rays of R_n - R_s
  bool bounded = false;
  double max_diff_inequality = 0.0;  // max of x (g(x) - b(x)) along gamma_s, <= 0
  double hypothesis_margin = 0.0;    // min of g - b over the visited range
  int samples = 0;
  double exit_y_nonsmooth = 0.0, exit_y_shadow = 0.0;
};

struct ShadowCompareOptions {
  double tol = 1e-10;
  int samples = 12000;
  double t_max = 0.0;  // 0 -> 100 + 200/eps
};

namespace detail {

// Polar angle in [pi/2, 3pi/2]; continuous on the closed left half-plane.
inline double left_angle(Vec2 p) {
  double th = std::atan2(p.y, p.x);
  if (th < 0.0) th += 2.0 * std::acos(-1.0);
  return th;
}

// Left-half-plane arc from (0, y_c) until re-entry, resampled uniformly.
template <PlanarSystem S>
std::vector<Vec2> left_arc(const S& sys, double y_c, const ShadowCompareOptions& opt) {
  IntegrateOptions io;
  io.tol = opt.tol;
  io.t_max = opt.t_max > 0.0 ? opt.t_max : 100.0 + 200.0 / sys.epsilon();
  const std::array<EventSpec, 1> evs{
      EventSpec::section(0.0, CrossDirection::rightward, EventAction::halt)};
  const Trajectory traj = integrate(sys, State{0.0, y_c}, io, evs);
  if (traj.status != IntegrationStatus::halted_at_event)
    throw error(errc::no_return, "left half-plane arc never re-enters x >= 0");
  const double T = traj.events.back().t;
  std::vector<Vec2> arc;
  arc.reserve(static_cast<std::size_t>(opt.samples) + 1);
  for (int i = 0; i <= opt.samples; ++i) arc.push_back(traj.at(T * i / opt.samples));
  arc.front() = {0.0, y_c};
  arc.back() = traj.events.back().state;
  return arc;
}

// Outermost radius at which the polyline crosses the ray of angle theta.
// Segments are indexed into angle bins so each query is near O(1).
class RayTable {
 public:
  explicit RayTable(const std::vector<Vec2>& poly) : poly_(poly) {
    const double pi = std::acos(-1.0);
    lo_ = pi / 2.0;
    span_ = pi;
    bins_.resize(kBins);
    angles_.resize(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) angles_[i] = left_angle(poly[i]);
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
      const int b0 = bin(std::min(angles_[i], angles_[i + 1]));
      const int b1 = bin(std::max(angles_[i], angles_[i + 1]));
      for (int b = b0; b <= b1; ++b) bins_[static_cast<std::size_t>(b)].push_back(i);
    }
  }

  std::optional<double> outermost_radius(double theta) const {
    const Vec2 u{std::cos(theta), std::sin(theta)};
    std::optional<double> best;
    const int b = bin(theta);
    for (int nb = std::max(0, b - 1); nb <= std::min(kBins - 1, b + 1); ++nb) {
      for (std::size_t i : bins_[static_cast<std::size_t>(nb)]) {
        const double ta = angles_[i], tb = angles_[i + 1];
        if (theta < std::min(ta, tb) - 1e-12 || theta > std::max(ta, tb) + 1e-12) continue;
        const Vec2 p = poly_[i], q = poly_[i + 1];
        const Vec2 d{q.x - p.x, q.y - p.y};
        const double denom = u.x * d.y - u.y * d.x;
        double r;
        if (std::abs(denom) < 1e-300) {
          r = std::max(std::hypot(p.x, p.y), std::hypot(q.x, q.y));
        } else {
          const double s = (u.y * p.x - u.x * p.y) / denom;
          const double sc = std::clamp(s, 0.0, 1.0);
          r = (p.x + sc * d.x) * u.x + (p.y + sc * d.y) * u.y;
        }
        if (r >= 0.0 && (!best || r > *best)) best = r;
      }
    }
    return best;
  }

 private:
  static constexpr int kBins = 2048;
  int bin(double th) const {
    return std::clamp(static_cast<int>((th - lo_) / span_ * kBins), 0, kBins - 1);
  }
  const std::vector<Vec2>& poly_;
  std::vector<double> angles_;
  std::vector<std::vector<std::size_t>> bins_;
  double lo_ = 0.0, span_ = 1.0;
};

}  // namespace detail

// Radial-bound comparison of the nonsmooth arc against its shadow: both
// systems are released at (0, y_c), followed through the left half-plane,
// and the nonsmooth radius is matched against the outermost shadow radius
// along each ray from the origin.
inline ShadowBoundReport shadow_compare(const SystemSpec& spec, ShadowKind kind,
                                        std::optional<Polynomial> g_tilde, double y_c,
                                        double tol, ShadowCompareOptions opt = {}) {
  spec.ensure_valid();
  if (!(y_c > 0.0)) throw std::invalid_argument("shadow_compare: y_c must be positive");

  const Polynomial shadow_branch =
      kind == ShadowKind::extend_h
          ? spec.h()
          : (g_tilde ? *g_tilde
                     : throw std::invalid_argument("shadow_compare: replace_g needs a branch"));
  if (kind == ShadowKind::replace_g &&
      !(shadow_branch.derivative()(0.0) >= spec.g().derivative()(0.0)))
    throw error(errc::hypothesis_violated, "replacement branch must have g~'(0) >= g'(0)");

  ShadowBoundReport rep;
  rep.entry_y = y_c;
  rep.samples = opt.samples;

  const std::vector<Vec2> arc_n = detail::left_arc(spec, y_c, opt);
  std::vector<Vec2> arc_s;
  if (kind == ShadowKind::extend_h)
    arc_s = detail::left_arc(extend_h_shadow(spec), y_c, opt);
  else
    arc_s = detail::left_arc(replace_g_shadow(spec, shadow_branch), y_c, opt);
  rep.exit_y_nonsmooth = arc_n.back().y;
  rep.exit_y_shadow = arc_s.back().y;

  // hypothesis g >= b on the visited range, certified via polynomial extrema
  double reach = 0.0;
  for (const Vec2& p : arc_n) reach = std::min(reach, p.x);
  for (const Vec2& p : arc_s) reach = std::min(reach, p.x);
  std::vector<double> diff_coeffs = spec.g().coeffs();
  const auto& bc = shadow_branch.coeffs();
  diff_coeffs.resize(std::max(diff_coeffs.size(), bc.size()), 0.0);
  for (std::size_t i = 0; i < bc.size(); ++i) diff_coeffs[i] -= bc[i];
  const Polynomial diff(diff_coeffs);
  const auto min_diff = diff.min_on(reach - 1e-9, 0.0);
  rep.hypothesis_margin = min_diff.value;
  if (min_diff.value < -1e-10 * (1.0 + std::abs(min_diff.value)))
    throw error(errc::hypothesis_violated,
                "g - shadow branch attains " + std::to_string(min_diff.value) + " at x = " +
                    std::to_string(min_diff.x));

  // pointwise differential inequality along the shadow arc
  double max_ineq = -std::numeric_limits<double>::infinity();
  for (const Vec2& p : arc_s) max_ineq = std::max(max_ineq, p.x * diff(p.x));
  rep.max_diff_inequality = max_ineq;

  // radial comparison
  const detail::RayTable table(arc_s);
  double max_excess = -std::numeric_limits<double>::infinity();
  for (const Vec2& p : arc_n) {
    const double rn = std::hypot(p.x, p.y);
    if (const auto rs = table.outermost_radius(detail::left_angle(p)))
      max_excess = std::max(max_excess, 0.5 * (rn * rn - *rs * *rs));
  }
  rep.max_R_excess = max_excess;
  rep.bounded = max_excess <= tol;
  return rep;
}

inline nlohmann::json to_json(const ShadowBoundReport& r) {
  return {{"entry_y", r.entry_y},
          {"max_R_excess", r.max_R_excess},
          {"bounded", r.bounded},
          {"max_diff_inequality", r.max_diff_inequality},
          {"hypothesis_margin", r.hypothesis_margin},
          {"exit_y_nonsmooth", r.exit_y_nonsmooth},
          {"exit_y_shadow", r.exit_y_shadow},
          {"samples", r.samples}};
}

}  // namespace canard
