#pragma once

// Sine eigenbasis of the Dirichlet Laplacian on (0,1).
//
// A field in H_M is stored as coefficients a_1..a_M against the orthonormal
// basis h_k(z) = sqrt(2) sin(k pi z). The Laplacian acts diagonally,
// A h_k = -(pi k)^2 h_k, so fractional powers, the semigroup and the spectral
// Sobolev norms are all modewise multiplications.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sburgers {

inline constexpr double pi = std::numbers::pi;
inline constexpr double sqrt2 = std::numbers::sqrt2;

/// Eigenvalue magnitude (pi k)^2 of -A for mode k >= 1.
constexpr double laplace_eigenvalue(std::size_t k) noexcept {
  const double w = pi * static_cast<double>(k);
  return w * w;
}

/// Exponent of the fractional power (-A)^alpha. May be negative.
struct FractionalExponent {
  double value = 0.0;

  constexpr FractionalExponent() = default;
  constexpr explicit FractionalExponent(double alpha) : value(alpha) {}
};

class SpectralField {
 public:
  SpectralField() : coeffs_(1, 0.0) {}

  /// Zero field of dimension M.
  explicit SpectralField(std::size_t M) : coeffs_(M, 0.0) {
    if (M == 0) throw std::invalid_argument("SpectralField: dimension must be >= 1");
  }

  explicit SpectralField(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw std::invalid_argument("SpectralField: dimension must be >= 1");
    validate();
  }

  SpectralField(std::initializer_list<double> coeffs) : SpectralField(std::vector<double>(coeffs)) {}

  explicit SpectralField(std::span<const double> coeffs)
      : SpectralField(std::vector<double>(coeffs.begin(), coeffs.end())) {}

  /// The basis function h_k embedded in H_M.
  static SpectralField basis(std::size_t k, std::size_t M) {
    if (k == 0 || k > M) throw std::out_of_range("SpectralField::basis: mode outside 1..M");
    SpectralField f(M);
    f.coeffs_[k - 1] = 1.0;
    return f;
  }

  std::size_t dim() const noexcept { return coeffs_.size(); }

  /// 0-based storage access; index i holds mode k = i + 1.
  double operator[](std::size_t i) const noexcept { return coeffs_[i]; }
  double& operator[](std::size_t i) noexcept { return coeffs_[i]; }

  /// 1-based mode access.
  double mode(std::size_t k) const { return coeffs_.at(k - 1); }

  std::span<const double> coeffs() const noexcept { return coeffs_; }
  std::span<double> coeffs() noexcept { return coeffs_; }
  const std::vector<double>& vector() const noexcept { return coeffs_; }

  bool is_finite() const noexcept {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double v) { return std::isfinite(v); });
  }

  void validate() const {
    if (!is_finite()) throw std::domain_error("SpectralField: non-finite coefficient");
  }

  SpectralField& operator+=(const SpectralField& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SpectralField& operator-=(const SpectralField& o) {
    require_same_dim(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
    return *this;
  }
  SpectralField& operator*=(double s) noexcept {
    for (double& v : coeffs_) v *= s;
    return *this;
  }

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }

  friend bool operator==(const SpectralField&, const SpectralField&) = default;

 private:
  void require_same_dim(const SpectralField& o) const {
    if (o.dim() != dim()) {
      throw std::invalid_argument("SpectralField: dimension mismatch (" + std::to_string(dim()) +
                                  " vs " + std::to_string(o.dim()) + ")");
    }
  }

  std::vector<double> coeffs_;
};

/// L2 inner product. Fields of different dimension are compared on the
/// common modes (the missing coefficients are zero).
inline double inner(const SpectralField& a, const SpectralField& b) noexcept {
  const std::size_t n = std::min(a.dim(), b.dim());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(const SpectralField& x) noexcept { return std::sqrt(inner(x, x)); }

/// Zero-pad or truncate to dimension M.
inline SpectralField embed(const SpectralField& x, std::size_t M) {
  SpectralField out(M);
  const std::size_t n = std::min(M, x.dim());
  std::copy_n(x.coeffs().begin(), n, out.coeffs().begin());
  return out;
}

/// Orthogonal projection P_N. The dimension is kept; modes above N are zeroed.
inline SpectralField project(const SpectralField& x, std::size_t N) {
  SpectralField out = x;
  for (std::size_t i = std::min(N, x.dim()); i < x.dim(); ++i) out[i] = 0.0;
  return out;
}

/// P_N followed by truncation to dimension N.
inline SpectralField truncate(const SpectralField& x, std::size_t N) { return embed(x, std::min(N, x.dim())); }

inline SpectralField fractional_power(const SpectralField& x, FractionalExponent alpha) {
  SpectralField out = x;
  if (alpha.value == 0.0) return out;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    out[i] *= std::pow(laplace_eigenvalue(i + 1), alpha.value);
  }
  return out;
}

/// ||(-A)^alpha x||_{L2}.
inline double fractional_norm(const SpectralField& x, FractionalExponent alpha) {
  if (alpha.value == 0.0) return l2_norm(x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double w = std::pow(laplace_eigenvalue(i + 1), alpha.value) * x[i];
    s += w * w;
  }
  return std::sqrt(s);
}

/// Gradient norm ||grad x|| = ||(-A)^{1/2} x||.
inline double gradient_norm(const SpectralField& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) s += laplace_eigenvalue(i + 1) * x[i] * x[i];
  return std::sqrt(s);
}

/// e^{tA} x.
inline SpectralField semigroup(const SpectralField& x, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("semigroup: time must be nonnegative");
  SpectralField out = x;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] *= std::exp(-laplace_eigenvalue(i + 1) * t);
  return out;
}

namespace detail {

// out_m = (m pi / sqrt2) [ sum_{j+l=m} a_j b_l - sum_{|j-l|=m} a_j b_l ],
// the h_m coefficient of grad(x1 x2). Indices 1-based in the formula.
inline void convolve_gradient_product(std::span<const double> a, std::span<const double> b,
                                      std::span<double> out) noexcept {
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  for (std::size_t m = 1; m <= out.size(); ++m) {
    double sum = 0.0;
    // j + l = m
    const std::size_t jmax = std::min(na, m - 1);
    for (std::size_t j = 1; j <= jmax; ++j) {
      const std::size_t l = m - j;
      if (l <= nb) sum += a[j - 1] * b[l - 1];
    }
    // l = j + m and j = l + m
    for (std::size_t j = 1; j + m <= nb && j <= na; ++j) sum -= a[j - 1] * b[j + m - 1];
    for (std::size_t l = 1; l + m <= na && l <= nb; ++l) sum -= a[l + m - 1] * b[l - 1];
    out[m - 1] = static_cast<double>(m) * pi / sqrt2 * sum;
  }
}

}  // namespace detail

/// P_{M_out} grad(x1 x2) by exact mode-space convolution, O(M * M_out).
inline SpectralField bilinear_conv(const SpectralField& x1, const SpectralField& x2, std::size_t M_out) {
  SpectralField out(M_out);
  detail::convolve_gradient_product(x1.coeffs(), x2.coeffs(), out.coeffs());
  return out;
}

/// P_{M_out} B(x) = P_{M_out} grad(x^2) by exact convolution.
inline SpectralField nonlinearity_conv(const SpectralField& x, std::size_t M_out) {
  return bilinear_conv(x, x, M_out);
}

}  // namespace sburgers
