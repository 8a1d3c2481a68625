#pragma once

// Bounded C^2 test functionals phi : L^2 -> R with closed-form derivatives.

#include <cmath>
#include <stdexcept>
#include <string>

#include "sburgers/spectral.hpp"

namespace sburgers {

enum class FunctionalKind { cosine, gaussian_exp };

inline std::string to_string(FunctionalKind k) { return k == FunctionalKind::cosine ? "cosine" : "gaussian-exp"; }

inline FunctionalKind parse_functional_kind(const std::string& s) {
  if (s == "cosine") return FunctionalKind::cosine;
  if (s == "gaussian-exp") return FunctionalKind::gaussian_exp;
  throw std::invalid_argument("unknown functional '" + s + "'");
}

/// cosine:        phi(x) = cos<x, v>
/// gaussian-exp:  phi(x) = exp(-|x|^2 / s^2)
class TestFunctional {
 public:
  static TestFunctional cosine(SpectralField v) { return TestFunctional(FunctionalKind::cosine, std::move(v), 1.0); }

  static TestFunctional gaussian_exp(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("gaussian-exp: length scale must be positive");
    return TestFunctional(FunctionalKind::gaussian_exp, SpectralField(1), s);
  }

  FunctionalKind kind() const noexcept { return kind_; }
  const SpectralField& direction() const noexcept { return v_; }
  double length_scale() const noexcept { return s_; }

  double eval(const SpectralField& x) const {
    if (kind_ == FunctionalKind::cosine) return std::cos(inner(x, v_));
    return std::exp(-inner(x, x) / (s_ * s_));
  }

  /// Riesz representative of D phi(x), in the dimension of x.
  SpectralField grad(const SpectralField& x) const {
    if (kind_ == FunctionalKind::cosine) {
      SpectralField g = embed(v_, x.dim());
      g *= -std::sin(inner(x, v_));
      return g;
    }
    SpectralField g = x;
    g *= -2.0 / (s_ * s_) * eval(x);
    return g;
  }

  /// D phi(x) . h
  double deriv(const SpectralField& x, const SpectralField& h) const { return inner(grad(x), h); }

  /// D^2 phi(x) h as a field, so that <hess_vec(x, h), g> = D^2 phi(x).(g, h).
  SpectralField hess_vec(const SpectralField& x, const SpectralField& h) const {
    if (kind_ == FunctionalKind::cosine) {
      SpectralField out = embed(v_, x.dim());
      out *= -std::cos(inner(x, v_)) * inner(v_, h);
      return out;
    }
    const double s2 = s_ * s_;
    const double e = eval(x);
    SpectralField out = embed(h, x.dim());
    out *= -2.0 / s2 * e;
    SpectralField xx = x;
    xx *= 4.0 / (s2 * s2) * e * inner(x, h);
    out += xx;
    return out;
  }

  double second_deriv(const SpectralField& x, const SpectralField& g, const SpectralField& h) const {
    // written out so that swapping g and h is exact in floating point
    const double e = eval(x);
    if (kind_ == FunctionalKind::cosine) return -std::cos(inner(x, v_)) * (inner(v_, g) * inner(v_, h));
    const double s2 = s_ * s_;
    return -2.0 / s2 * e * inner(g, h) + 4.0 / (s2 * s2) * e * (inner(x, g) * inner(x, h));
  }

  /// Upper bound on |D phi| over L^2.
  double gradient_bound() const {
    return kind_ == FunctionalKind::cosine ? l2_norm(v_) : std::sqrt(2.0 / std::exp(1.0)) / s_;
  }

  friend bool operator==(const TestFunctional&, const TestFunctional&) = default;

 private:
  TestFunctional(FunctionalKind k, SpectralField v, double s) : kind_(k), v_(std::move(v)), s_(s) {}

  FunctionalKind kind_;
  SpectralField v_;
  double s_;
};

}  // namespace sburgers
