#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "canard/error.hpp"
#include "canard/polynomial.hpp"

namespace canard {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};
using State = Vec2;

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Planar fast/slow vector field with a distinguished fast coordinate x.
// Section and nullcline events are vertical lines x = const, so the
// integrator only needs the field plus the two scalar parameters.
template <typename S>
concept PlanarSystem = requires(const S& s, double x, double y) {
  { s.field(x, y) } -> std::convertible_to<Vec2>;
  { s.epsilon() } -> std::convertible_to<double>;
  { s.lambda() } -> std::convertible_to<double>;
};

enum class Side { left, right };
enum class FoldKind { smooth, corner };
enum class BranchStability { attracting, repelling, mixed };

inline const char* to_string(BranchStability s) {
  switch (s) {
    case BranchStability::attracting: return "attracting";
    case BranchStability::repelling:  return "repelling";
    case BranchStability::mixed:      return "mixed";
  }
  return "?";
}

struct BranchInfo {
  double x_lo = 0.0;   // -inf encoded as a large negative bound
  double x_hi = 0.0;
  BranchStability stability = BranchStability::mixed;
};

struct ManifoldGeometry {
  double x_M = 0.0;
  FoldKind fold_kind = FoldKind::smooth;
  BranchInfo left, middle, right;
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  errc violation = errc::config_error;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const ValidationCheck* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks)
      os << (c.pass ? "  ok   " : "  FAIL ") << c.name << "  (value " << c.value << ")"
         << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
    return os.str();
  }
};

// Liénard field  x' = F(x) - y,  y' = eps (x - lambda)  with F given by
// raw polynomial branches. No invariants are enforced; shadow systems and
// Z-shaped variants that fail SystemSpec validation still integrate fine.
class PiecewiseField {
 public:
  PiecewiseField(double eps, double lam, Polynomial g, Polynomial h,
                 std::optional<Polynomial> f = std::nullopt,
                 double x_split2 = std::numeric_limits<double>::quiet_NaN())
      : eps_(eps), lambda_(lam), g_(std::move(g)), h_(std::move(h)),
        f_(std::move(f)), x_split2_(x_split2) {}

  double epsilon() const { return eps_; }
  double lambda() const { return lambda_; }

  double F(double x) const {
    if (x < 0.0) return g_(x);
    if (f_ && x > x_split2_) return (*f_)(x);
    return h_(x);  // ties at x = 0 resolve to the right branch
  }

  Vec2 field(double x, double y) const { return {F(x) - y, eps_ * (x - lambda_)}; }
  Vec2 field(State s) const { return field(s.x, s.y); }

  const Polynomial& g() const { return g_; }
  const Polynomial& h() const { return h_; }
  const std::optional<Polynomial>& f() const { return f_; }
  double x_split2() const { return x_split2_; }

 protected:
  double eps_;
  double lambda_;
  Polynomial g_, h_;
  std::optional<Polynomial> f_;
  double x_split2_;
};

// Smooth Liénard field y' = eps (x - lambda), x' = F(x) - y with a single
// polynomial branch; used as the shadow of a piecewise system.
class SmoothField {
 public:
  SmoothField(double eps, double lam, Polynomial F)
      : eps_(eps), lambda_(lam), F_(std::move(F)) {}

  double epsilon() const { return eps_; }
  double lambda() const { return lambda_; }
  double F(double x) const { return F_(x); }
  Vec2 field(double x, double y) const { return {F_(x) - y, eps_ * (x - lambda_)}; }
  Vec2 field(State s) const { return field(s.x, s.y); }
  const Polynomial& branch() const { return F_; }

 private:
  double eps_;
  double lambda_;
  Polynomial F_;
};

namespace detail {

// Supremum of p over (-inf, 0]: the candidates are x = 0, interior
// critical points, and the sign of the leading term at -inf.
inline std::optional<double> sup_on_negative_axis(const Polynomial& p) {
  const int d = p.degree();
  if (d >= 1) {
    const double at_minus_inf = p.leading() * ((d % 2 == 0) ? 1.0 : -1.0);
    if (at_minus_inf > 0.0) return std::nullopt;  // unbounded above
  }
  const double bound = p.cauchy_bound() + 1.0;
  double best = p(0.0);
  for (double r : p.derivative().roots_in(-bound, 0.0)) best = std::max(best, p(r));
  return best;
}

inline BranchStability stability_from_range(const Polynomial& dF, double lo, double hi) {
  const auto mn = dF.min_on(lo, hi);
  const auto mx = dF.max_on(lo, hi);
  const double scale = 1e-10 * (1.0 + std::max(std::abs(mn.value), std::abs(mx.value)));
  if (mx.value <= scale) return BranchStability::attracting;
  if (mn.value >= -scale) return BranchStability::repelling;
  return BranchStability::mixed;
}

}  // namespace detail

// Validated '2'-shaped (or, with a second corner, 'Z'-shaped) system.
class SystemSpec : public PiecewiseField {
 public:
  SystemSpec(double eps, double lam, Polynomial g, Polynomial h)
      : PiecewiseField(eps, lam, std::move(g), std::move(h)) {}

  SystemSpec(double eps, double lam, Polynomial g, Polynomial h, Polynomial f,
             double x_split2)
      : PiecewiseField(eps, lam, std::move(g), std::move(h), std::move(f), x_split2) {}

  SystemSpec with_lambda(double lam) const {
    SystemSpec s = *this;
    s.lambda_ = lam;
    return s;
  }

  SystemSpec with_epsilon(double eps) const {
    SystemSpec s = *this;
    s.eps_ = eps;
    return s;
  }

  bool has_second_corner() const { return f_.has_value(); }

  // One-sided branch derivative. At x = 0 and at the second corner the
  // side argument picks the branch; elsewhere it is determined by x.
  double branch_derivative(double x, Side side) const {
    const Polynomial* b;
    if (x < 0.0 || (x == 0.0 && side == Side::left)) {
      b = &g_;
    } else if (!f_ || x < x_split2_ || (x == x_split2_ && side == Side::left)) {
      b = &h_;
    } else {
      b = &f_.value();
    }
    return b->derivative()(x);
  }

  // Derivative of F with the right-branch tie-break at the splits.
  double Fprime(double x) const {
    return branch_derivative(x, x < 0.0 ? Side::left : Side::right);
  }

  ValidationReport validate() const {
    ValidationReport rep;
    auto add = [&rep](std::string name, bool pass, double value, errc viol,
                      std::string detail = "") {
      rep.checks.push_back({std::move(name), pass, value, viol, std::move(detail)});
    };

    add("epsilon > 0", eps_ > 0.0, eps_, errc::config_error);

    const double g0 = g_(0.0), h0 = h_(0.0);
    const double gs = g_.eval_with_scale(0.0).second, hs = h_.eval_with_scale(0.0).second;
    add("g(0) = 0", std::abs(g0) <= 1e-12 * std::max(1.0, gs), g0, errc::continuity_violation);
    add("h(0) = 0", std::abs(h0) <= 1e-12 * std::max(1.0, hs), h0, errc::continuity_violation);

    const double gp0 = g_.derivative()(0.0), hp0 = h_.derivative()(0.0);
    add("g'(0) < 0", gp0 < 0.0, gp0, errc::slope_sign_violation);
    add("h'(0) > 0", hp0 > 0.0, hp0, errc::slope_sign_violation);

    const Polynomial hp = h_.derivative();
    if (f_) {
      add("x_split2 > 0", x_split2_ > 0.0, x_split2_, errc::config_error);
      const double fh = (*f_)(x_split2_) - h_(x_split2_);
      const double fsc = f_->eval_with_scale(x_split2_).second;
      add("f(x_split2) = h(x_split2)", std::abs(fh) <= 1e-12 * std::max(1.0, fsc), fh,
          errc::continuity_violation);
      const double fp = f_->derivative()(x_split2_);
      add("f'(x_split2) < 0", fp < 0.0, fp, errc::slope_sign_violation);
      add("h' > 0 on (0, x_split2)", positive_between(hp, 0.0, x_split2_), hp.min_on(0.0, x_split2_).value,
          errc::slope_sign_violation);
    } else {
      const double bound = hp.cauchy_bound() + 1.0;
      const auto roots = hp.roots_in(1e-14, bound);
      const bool has_fold = !roots.empty();
      add("h' has a positive root (fold)", has_fold, has_fold ? roots.front() : 0.0,
          errc::no_fold, has_fold ? "" : "h' never vanishes for x > 0");
      if (has_fold) {
        const double xm = roots.front();
        add("h' > 0 on (0, x_M)", positive_between(hp, 0.0, xm), hp.min_on(0.0, xm).value,
            errc::slope_sign_violation);
      }
    }
    return rep;
  }

  void ensure_valid() const {
    const ValidationReport rep = validate();
    if (const ValidationCheck* c = rep.first_failure()) {
      std::ostringstream os;
      os << c->name << " fails (value " << c->value << ")";
      throw error(c->violation, os.str());
    }
  }

  ManifoldGeometry geometry() const {
    ManifoldGeometry geo;
    const double big = 1e6;
    const Polynomial gp = g_.derivative();
    const Polynomial hp = h_.derivative();

    if (f_) {
      geo.x_M = x_split2_;
      geo.fold_kind = FoldKind::corner;
    } else {
      const double bound = hp.cauchy_bound() + 1.0;
      const auto roots = hp.roots_in(1e-14, bound);
      if (roots.empty()) throw error(errc::no_fold, "h' has no positive root");
      geo.x_M = roots.front();
      geo.fold_kind = FoldKind::smooth;
    }

    geo.left = {-big, 0.0, BranchStability::mixed};
    if (auto sup = detail::sup_on_negative_axis(gp); sup && *sup < 0.0)
      geo.left.stability = BranchStability::attracting;
    else
      geo.left.stability = detail::stability_from_range(gp, -gp.cauchy_bound() - 1.0, 0.0);

    geo.middle = {0.0, geo.x_M, BranchStability::repelling};

    geo.right.x_lo = geo.x_M;
    geo.right.x_hi = big;
    const Polynomial& rb = f_ ? *f_ : h_;
    const Polynomial rp = rb.derivative();
    const double rbound = std::max(rp.cauchy_bound() + 1.0, geo.x_M + 1.0);
    geo.right.stability = detail::stability_from_range(rp, geo.x_M + 1e-9 * (1.0 + geo.x_M), rbound);
    // beyond all critical points the sign of the leading term decides
    if (geo.right.stability == BranchStability::attracting &&
        rp.leading() > 0.0 && rp.degree() >= 1)
      geo.right.stability = BranchStability::mixed;
    return geo;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["epsilon"] = eps_;
    j["lambda"] = lambda_;
    j["g"] = {{"coeffs", g_.coeffs()}};
    j["h"] = {{"coeffs", h_.coeffs()}};
    if (f_) j["f"] = {{"coeffs", f_->coeffs()}, {"split", x_split2_}};
    return j;
  }

  static SystemSpec from_json(const nlohmann::json& j) {
    try {
      if (j.contains("preset")) {
        SystemSpec s = preset(j.at("preset").get<std::string>());
        if (j.contains("epsilon")) s.eps_ = j.at("epsilon").get<double>();
        if (j.contains("lambda")) s.lambda_ = j.at("lambda").get<double>();
        return s;
      }
      const double eps = j.at("epsilon").get<double>();
      const double lam = j.at("lambda").get<double>();
      Polynomial g(j.at("g").at("coeffs").get<std::vector<double>>());
      Polynomial h(j.at("h").at("coeffs").get<std::vector<double>>());
      if (j.contains("f")) {
        Polynomial f(j.at("f").at("coeffs").get<std::vector<double>>());
        return SystemSpec(eps, lam, std::move(g), std::move(h), std::move(f),
                          j.at("f").at("split").get<double>());
      }
      return SystemSpec(eps, lam, std::move(g), std::move(h));
    } catch (const nlohmann::json::exception& e) {
      throw error(errc::config_error, std::string("bad system config: ") + e.what());
    }
  }

  // Built-in systems with exact rational coefficients:
  //   fig4:  g(x) = (x-1)^2 - 1,  h(x) = -(x+1/15)^2 (x-73/30) - 73/6750
  //   fig6:  g(x) = (x-1)^2 - 1,  h(x) = -(x+1)^2 (x-3/2) - 3/2
  static SystemSpec preset(const std::string& name, double eps = 0.2, double lam = 0.1) {
    if (name == "fig4")
      return SystemSpec(eps, lam, Polynomial{0.0, -2.0, 1.0},
                        Polynomial{0.0, 8.0 / 25.0, 23.0 / 10.0, -1.0});
    if (name == "fig6")
      return SystemSpec(eps, lam, Polynomial{0.0, -2.0, 1.0},
                        Polynomial{0.0, 2.0, -1.0 / 2.0, -1.0});
    throw error(errc::config_error, "unknown preset '" + name + "' (expected fig4 or fig6)");
  }

 private:
  static bool positive_between(const Polynomial& p, double lo, double hi) {
    // exact: no interior root and positive at samples
    const double pad = 1e-9 * (1.0 + hi - lo);
    if (!p.roots_in(lo + pad, hi - pad).empty()) return false;
    for (int i = 0; i < 1024; ++i) {
      const double x = lo + (hi - lo) * (i + 0.5) / 1024.0;
      if (p(x) <= 0.0) return false;
    }
    return true;
  }
};

static_assert(PlanarSystem<SystemSpec>);
static_assert(PlanarSystem<PiecewiseField>);
static_assert(PlanarSystem<SmoothField>);

}  // namespace canard
