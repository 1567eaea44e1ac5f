#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "canard/bifurcation.hpp"
#include "canard/error.hpp"
#include "canard/system.hpp"

namespace canard {

// Nondimensional Stommel box model with the forcing mu promoted to a slow
// variable:
//     y'  = mu - y - K |1 - y| y
//     mu' = eps (lambda - y)
// K > 1 is the bistable regime; the critical curve has a corner at y = 1.

struct StommelParams {
  double K = 1.2;
  double epsilon = 0.01;
  double lambda = 1.0;
};

struct StommelState {
  double y = 0.0;   // circulation variable (fast)
  double mu = 0.0;  // forcing (slow)
};

inline void validate(const StommelParams& p) {
  if (!(p.K > 1.0)) throw error(errc::config_error, "Stommel model requires K > 1");
  if (!(p.epsilon > 0.0)) throw error(errc::config_error, "epsilon must be positive");
}

inline std::pair<double, double> stommel_field(const StommelParams& p, const StommelState& s) {
  const double dy = s.mu - s.y - p.K * std::abs(1.0 - s.y) * s.y;
  const double dmu = p.epsilon * (p.lambda - s.y);
  return {dy, dmu};
}

// PlanarSystem adapter over (y, mu); the slow nullcline is the vertical
// line y = lambda, so section events work unchanged.
class StommelField {
 public:
  explicit StommelField(StommelParams p) : p_(p) { validate(p_); }

  double epsilon() const { return p_.epsilon; }
  double lambda() const { return p_.lambda; }
  Vec2 field(double y, double mu) const {
    const auto [dy, dmu] = stommel_field(p_, {y, mu});
    return {dy, dmu};
  }
  const StommelParams& params() const { return p_; }

 private:
  StommelParams p_;
};

static_assert(PlanarSystem<StommelField>);

// Exact change of variables onto the corner normal form: X = 1 - y flips
// the fast axis so the repelling branch lands on X > 0, Y = mu - 1 centers
// the corner, and the slow target becomes 1 - lambda.
struct StommelMap {
  State to_general(const StommelState& s) const { return {1.0 - s.y, s.mu - 1.0}; }
  StommelState from_general(const State& s) const { return {1.0 - s.x, s.y + 1.0}; }
};

inline SystemSpec to_general_form(const StommelParams& p) {
  validate(p);
  // X >= 0 (y <= 1):  X' = -Y + (K-1) X - K X^2
  // X <= 0 (y >= 1):  X' = -Y - (K+1) X + K X^2
  return SystemSpec(p.epsilon, 1.0 - p.lambda,
                    Polynomial{0.0, -(1.0 + p.K), p.K},
                    Polynomial{0.0, p.K - 1.0, -p.K});
}

// Regime classification straight from (K, eps); the general-form corner
// classifier must agree (checked as a property).
struct StommelRegime {
  CornerKind kind = CornerKind::degenerate;
  Criticality criticality = Criticality::degenerate;
  double slope_gap = 0.0;  // K - 1 = h'(0)
  double two_sqrt_eps = 0.0;
  double corner_lambda = 1.0;  // bifurcation as lambda decreases through 1
};

inline StommelRegime classify_regime(const StommelParams& p) {
  validate(p);
  StommelRegime r;
  r.slope_gap = p.K - 1.0;
  r.two_sqrt_eps = 2.0 * std::sqrt(p.epsilon);
  if (std::abs(r.slope_gap - r.two_sqrt_eps) <= 1e-12) {
    r.kind = CornerKind::degenerate;
    r.criticality = Criticality::degenerate;
    return r;
  }
  r.kind = r.slope_gap < r.two_sqrt_eps ? CornerKind::hopf_like : CornerKind::super_explosion;
  // |g'(0)| = K + 1 exceeds both K - 1 and 2 sqrt(eps) in either regime
  r.criticality = Criticality::supercritical;
  return r;
}

inline nlohmann::json to_json(const StommelRegime& r) {
  return {{"kind", to_string(r.kind)},
          {"criticality", to_string(r.criticality)},
          {"h_slope", r.slope_gap},
          {"two_sqrt_eps", r.two_sqrt_eps},
          {"corner_lambda", r.corner_lambda}};
}

inline nlohmann::json to_json(const StommelParams& p) {
  return {{"K", p.K}, {"epsilon", p.epsilon}, {"lambda", p.lambda}};
}

}  // namespace canard
