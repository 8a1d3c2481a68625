#pragma once

// Time stepping of the Galerkin system
//
//   dX = (A X + P_M B(X)) dt + P_M dW,   X(0) = P_M x0,
//
// together with its first variation eta^h (dX/dx0 . h) and second variation
// zeta^{g,h} along the same path.
//
// The default scheme is the exponential integrator
//
//   X_{n+1} = e^{dt A} X_n + (-A)^{-1}(I - e^{dt A}) B_M(X_n) + O_n,
//
// where O_n is the stochastic convolution over the step, sampled exactly.
// The linear part is therefore exact for every mode, including the stiff
// ones with (pi k)^2 dt >> 1. Quadrature::left_point selects the cruder
// e^{dt A}(X_n + dt B_M(X_n) + dW_n) variant.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sburgers/noise.hpp"
#include "sburgers/spectral.hpp"
#include "sburgers/transform.hpp"

namespace sburgers {

enum class Scheme { exponential_euler, tamed_exponential_euler };
enum class Quadrature { exponential, left_point };

inline std::string to_string(Scheme s) {
  return s == Scheme::exponential_euler ? "exponential-euler" : "tamed-exponential-euler";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "exponential-euler") return Scheme::exponential_euler;
  if (s == "tamed-exponential-euler") return Scheme::tamed_exponential_euler;
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

inline std::string to_string(Quadrature q) { return q == Quadrature::exponential ? "exponential" : "left-point"; }

inline Quadrature parse_quadrature(const std::string& s) {
  if (s == "exponential") return Quadrature::exponential;
  if (s == "left-point") return Quadrature::left_point;
  throw std::invalid_argument("unknown quadrature '" + s + "'");
}

struct SchemeConfig {
  double dt = 0.5 / 16384.0;
  double T = 0.5;
  std::size_t M = 16;
  Scheme scheme = Scheme::exponential_euler;
  Quadrature quadrature = Quadrature::exponential;
  /// false drops B_M entirely (linear stochastic heat equation).
  bool nonlinear = true;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SchemeConfig: dt must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("SchemeConfig: T must be nonnegative");
    if (M == 0) throw std::invalid_argument("SchemeConfig: M must be >= 1");
    const double n = std::round(T / dt);
    if (std::abs(n * dt - T) > 1e-12 * std::max(T, dt)) {
      throw std::invalid_argument("SchemeConfig: dt must divide T");
    }
  }
};

/// Raised when a step produces a non-finite state.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(std::size_t step, double time)
      : std::runtime_error("non-finite state at step " + std::to_string(step) + " (t=" + std::to_string(time) + ")"),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct SolverState {
  SpectralField X;
  std::vector<SpectralField> eta;
  /// zeta[p] is the second variation for g = eta[pairs[p].first], h = eta[pairs[p].second].
  std::vector<SpectralField> zeta;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t n = 0;
  double t = 0.0;

  static SolverState initial(const SpectralField& x0, std::size_t M) { return SolverState{embed(x0, M)}; }
};

/// One-step map for a fixed configuration. Owns its scratch space, so one
/// instance per thread.
class Integrator {
 public:
  explicit Integrator(SchemeConfig cfg) : cfg_(cfg), kernel_(cfg.M) {
    cfg_.validate();
    const std::size_t M = cfg_.M;
    decay_.resize(M);
    drift_weight_.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
      const double lambda = laplace_eigenvalue(i + 1);
      decay_[i] = std::exp(-lambda * cfg_.dt);
      drift_weight_[i] = cfg_.quadrature == Quadrature::exponential ? -std::expm1(-lambda * cfg_.dt) / lambda
                                                                     : decay_[i] * cfg_.dt;
    }
    drift_.resize(M);
    scratch_.resize(M);
    scratch2_.resize(M);
  }

  const SchemeConfig& config() const noexcept { return cfg_; }
  std::size_t dim() const noexcept { return cfg_.M; }

  /// Advances X, every eta and zeta by one step. Noise spans must hold at
  /// least M entries; only the first M are used.
  void advance(SolverState& s, std::span<const double> brownian, std::span<const double> convolved) {
    const std::size_t M = cfg_.M;
    require_dims(s);
    const bool exponential = cfg_.quadrature == Quadrature::exponential;
    if ((exponential ? convolved.size() : brownian.size()) < M) {
      throw std::invalid_argument("Integrator: noise increment has fewer than M modes");
    }
    auto X = s.X.coeffs();

    double taming = 1.0;
    double bnorm = 0.0;
    if (cfg_.nonlinear) {
      kernel_.gradient_product(X, X, drift_);
      if (cfg_.scheme == Scheme::tamed_exponential_euler) {
        for (double v : drift_) bnorm += v * v;
        bnorm = std::sqrt(bnorm);
        taming = 1.0 / (1.0 + cfg_.dt * bnorm);
      }
    } else {
      std::fill(drift_.begin(), drift_.end(), 0.0);
    }

    // second variation reads eta_n and X_n, so it goes first
    if (!s.zeta.empty() && cfg_.scheme == Scheme::tamed_exponential_euler) {
      throw std::logic_error("Integrator: second variation requires the untamed scheme");
    }
    for (std::size_t p = 0; p < s.zeta.size(); ++p) {
      auto Z = s.zeta[p].coeffs();
      if (cfg_.nonlinear) {
        kernel_.gradient_product(X, Z, scratch_);
        kernel_.gradient_product(s.eta[s.pairs[p].first].coeffs(), s.eta[s.pairs[p].second].coeffs(), scratch2_);
        for (std::size_t i = 0; i < M; ++i) {
          Z[i] = decay_[i] * Z[i] + drift_weight_[i] * 2.0 * (scratch_[i] + scratch2_[i]);
        }
      } else {
        for (std::size_t i = 0; i < M; ++i) Z[i] *= decay_[i];
      }
    }

    for (auto& eta : s.eta) {
      auto E = eta.coeffs();
      if (!cfg_.nonlinear) {
        for (std::size_t i = 0; i < M; ++i) E[i] *= decay_[i];
        continue;
      }
      kernel_.gradient_product(X, E, scratch_);  // DB(X).eta = 2 B[X, eta]
      if (cfg_.scheme == Scheme::tamed_exponential_euler && bnorm > 0.0) {
        // derivative of B / (1 + dt |B|)
        double proj = 0.0;
        for (std::size_t i = 0; i < M; ++i) proj += drift_[i] * 2.0 * scratch_[i];
        const double c = cfg_.dt * proj / bnorm * taming * taming;
        for (std::size_t i = 0; i < M; ++i) {
          E[i] = decay_[i] * E[i] + drift_weight_[i] * (taming * 2.0 * scratch_[i] - c * drift_[i]);
        }
      } else {
        for (std::size_t i = 0; i < M; ++i) E[i] = decay_[i] * E[i] + drift_weight_[i] * 2.0 * scratch_[i];
      }
    }

    bool finite = true;
    for (std::size_t i = 0; i < M; ++i) {
      const double noise = exponential ? convolved[i] : decay_[i] * brownian[i];
      X[i] = decay_[i] * X[i] + drift_weight_[i] * taming * drift_[i] + noise;
      finite = finite && std::isfinite(X[i]);
    }
    ++s.n;
    s.t = static_cast<double>(s.n) * cfg_.dt;
    if (!finite) throw BlowUpError(s.n, s.t);
  }

  void advance(SolverState& s, const NoiseIncrement& inc) { advance(s, inc.brownian.coeffs(), inc.convolved.coeffs()); }

 private:
  void require_dims(const SolverState& s) const {
    const std::size_t M = cfg_.M;
    bool ok = s.X.dim() == M;
    for (const auto& e : s.eta) ok = ok && e.dim() == M;
    ok = ok && s.zeta.size() == s.pairs.size();
    for (const auto& z : s.zeta) ok = ok && z.dim() == M;
    for (const auto& [g, h] : s.pairs) ok = ok && g < s.eta.size() && h < s.eta.size();
    if (!ok) throw std::invalid_argument("Integrator: state dimensions do not match M");
  }

  SchemeConfig cfg_;
  NonlinearityKernel kernel_;
  std::vector<double> decay_;
  std::vector<double> drift_weight_;
  std::vector<double> drift_;
  std::vector<double> scratch_;
  std::vector<double> scratch2_;
};

/// X_n -> X_{n+1}; tangents and second variations are carried unchanged.
inline SolverState step(const SolverState& state, const SchemeConfig& cfg, const NoiseIncrement& dW) {
  SolverState x_only{state.X, {}, {}, {}, state.n, state.t};
  Integrator(cfg).advance(x_only, dW);
  SolverState out = state;
  out.X = std::move(x_only.X);
  out.n = x_only.n;
  out.t = x_only.t;
  return out;
}

/// eta_n -> eta_{n+1} for every tracked direction, frozen at X_n.
inline SolverState step_tangent(const SolverState& state, const SchemeConfig& cfg) {
  if (state.eta.empty()) throw std::invalid_argument("step_tangent: no tracked directions");
  SolverState work{state.X, state.eta, {}, {}, state.n, state.t};
  const std::vector<double> zero(cfg.M, 0.0);
  Integrator(cfg).advance(work, zero, zero);
  SolverState out = state;
  out.eta = std::move(work.eta);
  return out;
}

/// zeta_n -> zeta_{n+1}, frozen at X_n, eta^g_n, eta^h_n.
inline SolverState step_second_variation(const SolverState& state, const SchemeConfig& cfg) {
  if (state.zeta.empty()) throw std::invalid_argument("step_second_variation: zeta not tracked");
  SolverState work = state;
  const std::vector<double> zero(cfg.M, 0.0);
  Integrator(cfg).advance(work, zero, zero);
  SolverState out = state;
  out.zeta = std::move(work.zeta);
  return out;
}

}  // namespace sburgers
