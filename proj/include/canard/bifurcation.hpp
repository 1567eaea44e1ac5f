#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include <json.hpp>

#include "canard/error.hpp"
#include "canard/system.hpp"

namespace canard {

enum class EquilibriumKind { node, focus, degenerate_node };
enum class Stability { stable, unstable, neutral };

inline const char* to_string(EquilibriumKind k) {
  switch (k) {
    case EquilibriumKind::node:            return "node";
    case EquilibriumKind::focus:           return "focus";
    case EquilibriumKind::degenerate_node: return "degenerate";
  }
  return "?";
}

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable:   return "stable";
    case Stability::unstable: return "unstable";
    case Stability::neutral:  return "neutral";
  }
  return "?";
}

// Linearization at p_lambda = (lambda, F(lambda)). The Jacobian is
// [[F'(lambda), -1], [eps, 0]], so mu+ mu- = eps and mu+ + mu- = F'(lambda).
struct EigenPair {
  std::complex<double> mu_plus, mu_minus;
  double slope = 0.0;  // F'(lambda) used
  EquilibriumKind kind = EquilibriumKind::focus;
  Stability stability = Stability::neutral;
  std::optional<double> strong_eigvec_slope;  // eps / mu2 for a node
};

struct EquilibriumReport {
  State location;
  EigenPair primary;                  // branch containing lambda
  std::optional<EigenPair> left_sided;  // reported when lambda == 0
};

inline EigenPair eigen_from_slope(double slope, double eps) {
  EigenPair p;
  p.slope = slope;
  const double disc = slope * slope - 4.0 * eps;
  if (disc > 0.0) {
    const double r = std::sqrt(disc);
    p.mu_plus = (slope + r) / 2.0;
    p.mu_minus = (slope - r) / 2.0;
    p.kind = EquilibriumKind::node;
    const double mu2 = std::abs(p.mu_plus.real()) >= std::abs(p.mu_minus.real())
                           ? p.mu_plus.real()
                           : p.mu_minus.real();
    p.strong_eigvec_slope = eps / mu2;
  } else if (disc < 0.0) {
    const double w = std::sqrt(-disc) / 2.0;
    p.mu_plus = {slope / 2.0, w};
    p.mu_minus = {slope / 2.0, -w};
    p.kind = EquilibriumKind::focus;
  } else {
    p.mu_plus = p.mu_minus = slope / 2.0;
    p.kind = EquilibriumKind::degenerate_node;
    p.strong_eigvec_slope = eps / (slope / 2.0);
  }
  p.stability = slope < 0.0 ? Stability::stable
              : slope > 0.0 ? Stability::unstable
                            : Stability::neutral;
  return p;
}

inline EquilibriumReport equilibrium(const SystemSpec& spec) {
  spec.ensure_valid();
  const double lam = spec.lambda();
  EquilibriumReport rep;
  rep.location = {lam, spec.F(lam)};
  const Side side = lam < 0.0 ? Side::left : Side::right;
  rep.primary = eigen_from_slope(spec.branch_derivative(lam, side), spec.epsilon());
  if (lam == 0.0)
    rep.left_sided = eigen_from_slope(spec.branch_derivative(0.0, Side::left), spec.epsilon());
  return rep;
}

// ---------------------------------------------------------------------------
// Corner bifurcation (lambda = 0)
// ---------------------------------------------------------------------------

enum class CornerKind { hopf_like, super_explosion, degenerate };
enum class Criticality { supercritical, subcritical, degenerate };

inline const char* to_string(CornerKind k) {
  switch (k) {
    case CornerKind::hopf_like:       return "HopfLike";
    case CornerKind::super_explosion: return "SuperExplosion";
    case CornerKind::degenerate:      return "Degenerate";
  }
  return "?";
}

inline const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::supercritical: return "supercritical";
    case Criticality::subcritical:   return "subcritical";
    case Criticality::degenerate:    return "degenerate";
  }
  return "?";
}

// Focus-focus criticality quantity Lambda = mu_u/omega_u - mu_s/omega_s.
// Sign convention used throughout: supercritical iff Lambda < 0, matching
// the slope rule |g'(0)| > |h'(0)| (the round-trip multiplier exp(pi
// Lambda) contracts exactly when Lambda < 0).
inline double lambda_quantity(double g_slope, double h_slope, double epsilon) {
  const double thr = 2.0 * std::sqrt(epsilon);
  if (!(std::abs(g_slope) < thr) || !(h_slope > 0.0 && h_slope < thr))
    throw error(errc::not_focus_focus,
                "lambda_quantity requires |g'(0)| < 2*sqrt(eps) and 0 < h'(0) < 2*sqrt(eps)");
  const double omega_u = std::sqrt(4.0 * epsilon - h_slope * h_slope);
  const double omega_s = std::sqrt(4.0 * epsilon - g_slope * g_slope);
  return h_slope / omega_u - std::abs(g_slope) / omega_s;
}

struct CornerBifurcationReport {
  CornerKind kind = CornerKind::degenerate;
  Criticality criticality = Criticality::degenerate;
  double two_sqrt_eps = 0.0;
  double h_slope = 0.0;
  double g_slope = 0.0;
  std::optional<double> lambda_quantity;  // reported in the focus-focus regime
};

inline CornerBifurcationReport corner_classify(const SystemSpec& spec) {
  spec.ensure_valid();
  CornerBifurcationReport rep;
  rep.two_sqrt_eps = 2.0 * std::sqrt(spec.epsilon());
  rep.g_slope = spec.branch_derivative(0.0, Side::left);
  rep.h_slope = spec.branch_derivative(0.0, Side::right);
  const double hs = rep.h_slope, ga = std::abs(rep.g_slope), thr = rep.two_sqrt_eps;

  if (std::abs(hs - thr) <= 1e-12) {
    rep.kind = CornerKind::degenerate;
    rep.criticality = Criticality::degenerate;
    return rep;
  }
  if (hs < thr) {
    rep.kind = CornerKind::hopf_like;
    if (std::abs(ga - hs) <= 1e-12)
      rep.criticality = Criticality::degenerate;
    else
      rep.criticality = ga > hs ? Criticality::supercritical : Criticality::subcritical;
    if (ga < thr) rep.lambda_quantity = lambda_quantity(rep.g_slope, hs, spec.epsilon());
  } else {
    rep.kind = CornerKind::super_explosion;
    rep.criticality = ga >= thr ? Criticality::supercritical : Criticality::subcritical;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Hopf bifurcation at the smooth fold (lambda = x_M)
// ---------------------------------------------------------------------------

struct FoldHopfReport {
  double lambda_H = 0.0;
  Criticality criticality = Criticality::degenerate;
  double lyapunov_sign_source = 0.0;  // h'''(x_M)
};

// At lambda = x_M the trace vanishes and the eigenvalues are +-i sqrt(eps).
// For x' = -y + h(x), y' = eps(x - lambda) the Guckenheimer-Holmes first
// Lyapunov coefficient reduces to 16 a = h'''(x_M) (all mixed terms vanish
// because the y-equation is linear and h''(x_M) enters only through the
// f_xy-weighted products, which are zero).
inline FoldHopfReport fold_hopf(const SystemSpec& spec) {
  spec.ensure_valid();
  if (spec.has_second_corner())
    throw error(errc::no_fold, "fold_hopf requires a smooth fold (no second corner)");
  const ManifoldGeometry geo = spec.geometry();
  FoldHopfReport rep;
  rep.lambda_H = geo.x_M;
  rep.lyapunov_sign_source = spec.h().derivative().derivative().derivative()(geo.x_M);
  if (std::abs(rep.lyapunov_sign_source) <= 1e-12)
    rep.criticality = Criticality::degenerate;
  else
    rep.criticality = rep.lyapunov_sign_source < 0.0 ? Criticality::supercritical
                                                     : Criticality::subcritical;
  return rep;
}

// ---------------------------------------------------------------------------
// Nonexistence threshold (Dulac-type bound)
// ---------------------------------------------------------------------------

struct NonexistenceThreshold {
  double K = 0.0;  // no periodic orbits for lambda < -K
  double k = 0.0;  // max of h' on [0, x_M]
  double m = 0.0;  // sup of g' on (-inf, 0), certified negative
  double x_M = 0.0;
  bool hypothesis_ok = false;
};

inline NonexistenceThreshold nonexistence_threshold(const SystemSpec& spec) {
  spec.ensure_valid();
  const ManifoldGeometry geo = spec.geometry();
  NonexistenceThreshold th;
  th.x_M = geo.x_M;
  th.k = spec.h().derivative().max_on(0.0, geo.x_M).value;

  const auto sup = detail::sup_on_negative_axis(spec.g().derivative());
  if (!sup || *sup >= 0.0)
    throw error(errc::hypothesis_not_satisfied,
                "g' is not bounded away from zero on the negative axis");
  th.m = *sup;
  th.hypothesis_ok = true;
  th.K = 2.0 * th.k * geo.x_M / std::abs(th.m);
  return th;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EigenPair& p) {
  nlohmann::json j;
  j["mu_plus"] = {{"re", p.mu_plus.real()}, {"im", p.mu_plus.imag()}};
  j["mu_minus"] = {{"re", p.mu_minus.real()}, {"im", p.mu_minus.imag()}};
  j["slope"] = p.slope;
  j["kind"] = to_string(p.kind);
  j["stability"] = to_string(p.stability);
  if (p.strong_eigvec_slope) j["strong_eigvec_slope"] = *p.strong_eigvec_slope;
  return j;
}

inline nlohmann::json to_json(const EquilibriumReport& r) {
  nlohmann::json j;
  j["location"] = {{"x", r.location.x}, {"y", r.location.y}};
  j["eigen"] = to_json(r.primary);
  if (r.left_sided) j["eigen_left"] = to_json(*r.left_sided);
  return j;
}

inline nlohmann::json to_json(const CornerBifurcationReport& r) {
  nlohmann::json j;
  j["kind"] = to_string(r.kind);
  j["criticality"] = to_string(r.criticality);
  j["thresholds"] = {{"two_sqrt_eps", r.two_sqrt_eps},
                     {"h_slope", r.h_slope},
                     {"g_slope", r.g_slope}};
  if (r.lambda_quantity) j["thresholds"]["Lambda"] = *r.lambda_quantity;
  // the slope rule and the Lambda sign rule are equivalent on the
  // focus-focus domain; the slope comparison is authoritative here
  j["criticality_rule"] = "supercritical iff |g'(0)| > |h'(0)| (equivalently Lambda < 0)";
  return j;
}

inline nlohmann::json to_json(const FoldHopfReport& r) {
  return {{"lambda_H", r.lambda_H},
          {"criticality", to_string(r.criticality)},
          {"h3_at_fold", r.lyapunov_sign_source}};
}

inline nlohmann::json to_json(const NonexistenceThreshold& t) {
  return {{"K", t.K}, {"k", t.k}, {"m", t.m}, {"x_M", t.x_M}, {"hypothesis_ok", t.hypothesis_ok}};
}

}  // namespace canard
