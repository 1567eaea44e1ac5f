#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace canard {

// Real polynomial with coefficients stored in ascending degree order.
// Roots are isolated by recursing on the derivative: between consecutive
// critical points the polynomial is monotone, so each bracket holds at
// most one root and bisection is certifiable.
class Polynomial {
 public:
  Polynomial() : coeffs_{0.0} {}

  explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("Polynomial: empty coefficient list");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw std::invalid_argument("Polynomial: non-finite coefficient");
  }

  Polynomial(std::initializer_list<double> coeffs)
      : Polynomial(std::vector<double>(coeffs)) {}

  const std::vector<double>& coeffs() const { return coeffs_; }

  // Degree after trimming trailing zeros; the zero polynomial has degree 0.
  int degree() const {
    for (std::size_t i = coeffs_.size(); i-- > 0;)
      if (coeffs_[i] != 0.0) return static_cast<int>(i);
    return 0;
  }

  double leading() const { return coeffs_[static_cast<std::size_t>(degree())]; }

  double operator()(double x) const {
    double v = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;) v = v * x + coeffs_[i];
    return v;
  }

  // Horner value together with sum(|c_i| |x|^i), the evaluation scale used
  // for zero tests.
  std::pair<double, double> eval_with_scale(double x) const {
    double v = 0.0, s = 0.0;
    const double ax = std::abs(x);
    for (std::size_t i = coeffs_.size(); i-- > 0;) {
      v = v * x + coeffs_[i];
      s = s * ax + std::abs(coeffs_[i]);
    }
    return {v, s};
  }

  Polynomial derivative() const {
    if (coeffs_.size() <= 1) return Polynomial({0.0});
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i)
      d[i - 1] = coeffs_[i] * static_cast<double>(i);
    return Polynomial(std::move(d));
  }

  bool is_zero() const {
    for (double c : coeffs_)
      if (c != 0.0) return false;
    return true;
  }

  // Every real root lies in [-B, B].
  double cauchy_bound() const {
    const int d = degree();
    if (d == 0) return 1.0;
    const double lc = std::abs(coeffs_[static_cast<std::size_t>(d)]);
    double m = 0.0;
    for (int i = 0; i < d; ++i) m = std::max(m, std::abs(coeffs_[static_cast<std::size_t>(i)]));
    return 1.0 + m / lc;
  }

  // All real roots in [lo, hi], ascending, deduplicated. Roots of even
  // multiplicity are caught through the near-zero test at critical points.
  std::vector<double> roots_in(double lo, double hi) const {
    std::vector<double> out;
    if (!(lo <= hi) || is_zero()) return out;
    const int d = degree();
    if (d == 0) return out;
    if (d == 1) {
      const double r = -coeffs_[0] / coeffs_[1];
      if (r >= lo && r <= hi) out.push_back(r);
      return out;
    }

    std::vector<double> knots = derivative().roots_in(lo, hi);
    knots.insert(knots.begin(), lo);
    knots.push_back(hi);

    auto push_unique = [&out](double r) {
      const double tol = 1e-11 * (1.0 + std::abs(r));
      if (out.empty() || std::abs(out.back() - r) > tol) out.push_back(r);
    };

    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
      const double a = knots[i], b = knots[i + 1];
      if (!(a < b)) continue;
      if (near_zero(a)) push_unique(a);
      const double fa = (*this)(a), fb = (*this)(b);
      if (!near_zero(a) && !near_zero(b) && std::signbit(fa) != std::signbit(fb) &&
          fa != 0.0 && fb != 0.0) {
        push_unique(bisect_root(a, b));
      }
    }
    if (near_zero(hi)) push_unique(hi);
    return out;
  }

  std::vector<double> real_roots() const {
    const double b = cauchy_bound();
    return roots_in(-b, b);
  }

  struct Extremum {
    double x = 0.0;
    double value = 0.0;
  };

  // Exact extrema on [lo, hi] via critical-point enumeration.
  Extremum max_on(double lo, double hi) const { return extremum_on(lo, hi, true); }
  Extremum min_on(double lo, double hi) const { return extremum_on(lo, hi, false); }

  bool near_zero(double x) const {
    auto [v, s] = eval_with_scale(x);
    return std::abs(v) <= 1e-13 * std::max(1.0, s);
  }

  std::string str(const std::string& var = "x") const {
    std::string out;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (coeffs_[i] == 0.0 && coeffs_.size() > 1) continue;
      if (!out.empty()) out += coeffs_[i] < 0 ? " - " : " + ";
      else if (coeffs_[i] < 0) out += "-";
      out += std::to_string(std::abs(coeffs_[i]));
      if (i >= 1) out += "*" + var;
      if (i >= 2) out += "^" + std::to_string(i);
    }
    return out.empty() ? "0" : out;
  }

 private:
  Extremum extremum_on(double lo, double hi, bool want_max) const {
    if (!(lo <= hi)) throw std::invalid_argument("Polynomial::extremum_on: empty interval");
    std::vector<double> cand = derivative().roots_in(lo, hi);
    cand.push_back(lo);
    cand.push_back(hi);
    Extremum best{cand.front(), (*this)(cand.front())};
    for (double x : cand) {
      const double v = (*this)(x);
      if (want_max ? (v > best.value) : (v < best.value)) best = {x, v};
    }
    return best;
  }

  // Monotone bracket [a, b] with a strict sign change: safeguarded
  // bisection with a secant candidate, then a Newton polish.
  double bisect_root(double a, double b) const {
    double fa = (*this)(a), fb = (*this)(b);
    for (int it = 0; it < 200 && b - a > 1e-16 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
      double m = 0.5 * (a + b);
      if (fb != fa) {
        const double s = a - fa * (b - a) / (fb - fa);
        const double guard = 0.01 * (b - a);
        if (s > a + guard && s < b - guard) m = s;
      }
      const double fm = (*this)(m);
      if (fm == 0.0) return m;
      if (std::signbit(fm) == std::signbit(fa)) {
        a = m;
        fa = fm;
      } else {
        b = m;
        fb = fm;
      }
    }
    double r = 0.5 * (a + b);
    const Polynomial dp = derivative();
    for (int it = 0; it < 3; ++it) {
      const double d = dp(r);
      if (d == 0.0) break;
      const double step = (*this)(r) / d;
      const double rn = r - step;
      if (rn < a || rn > b) break;
      r = rn;
    }
    return r;
  }

  std::vector<double> coeffs_;
};

}  // namespace canard
