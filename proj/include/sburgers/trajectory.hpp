#pragma once

// Whole-path drivers: one resolution with observables (evolve), or several
// resolutions in lockstep on one Brownian path (evolve_coupled).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sburgers/integrator.hpp"
#include "sburgers/noise.hpp"
#include "sburgers/spectral.hpp"
#include "sburgers/transform.hpp"

namespace sburgers {

struct Directions {
  std::vector<SpectralField> tangents;
  /// Index pairs (g, h) into tangents whose second variations are tracked.
  std::vector<std::pair<std::size_t, std::size_t>> second_variations;

  static Directions pair(SpectralField g, SpectralField h) {
    return Directions{{std::move(g), std::move(h)}, {{0, 1}}};
  }
};

struct EvolveOptions {
  /// Observables are sampled every record_every steps (and at t=0 and T).
  std::size_t record_every = 256;
  std::vector<double> fractional_alphas;
  bool grid_sup = false;
  /// Grid points per mode for the L-infinity estimate (n = factor * M).
  std::size_t grid_factor = 8;
  bool keep_mesh_states = false;
  /// Steps at which the full solver state is copied out.
  std::vector<std::size_t> snapshot_steps;
  /// Accumulate sum_n <X_n, dW_n>. Off skips drawing dW under the exponential quadrature.
  bool ito_sum = true;
};

struct Snapshot {
  std::size_t step = 0;
  double t = 0.0;
  SolverState state;
};

struct TrajectoryRecord {
  SolverState terminal;
  bool failed = false;
  std::string diagnostic;

  std::vector<double> times;
  std::vector<double> l2_norm;
  std::vector<double> gradient_norm;
  std::vector<std::vector<double>> fractional_norm;  // [alpha][mesh point]
  std::vector<double> grid_sup;
  std::vector<double> dissipation;  // int_0^t ||grad X||^2 ds at mesh points
  std::vector<SpectralField> mesh_states;
  std::vector<Snapshot> snapshots;

  double sup_l2 = 0.0;    // max over all steps of ||X(t_n)||
  double sup_grid = 0.0;  // max over mesh points of the grid sup norm
  double dissipation_total = 0.0;
  double ito_sum = 0.0;   // sum_n <X_n, dW_n>
  double initial_l2_sq = 0.0;

  friend bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b) {
    return a.terminal.X == b.terminal.X && a.terminal.eta == b.terminal.eta && a.terminal.zeta == b.terminal.zeta &&
           a.failed == b.failed && a.times == b.times && a.l2_norm == b.l2_norm &&
           a.gradient_norm == b.gradient_norm && a.fractional_norm == b.fractional_norm &&
           a.grid_sup == b.grid_sup && a.dissipation == b.dissipation && a.sup_l2 == b.sup_l2 &&
           a.sup_grid == b.sup_grid && a.dissipation_total == b.dissipation_total && a.ito_sum == b.ito_sum;
  }
};

namespace detail {

inline double squared_gradient_norm(std::span<const double> x) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += laplace_eigenvalue(i + 1) * x[i] * x[i];
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// One sample path at resolution cfg.M using a prebuilt sampler.
inline TrajectoryRecord evolve(const SpectralField& x0, const SchemeConfig& cfg, const NoiseSampler& sampler,
                               std::uint64_t seed, std::uint64_t sample, const Directions& directions = {},
                               const EvolveOptions& options = {}) {
  cfg.validate();
  const std::size_t M = cfg.M;
  const std::size_t steps = cfg.steps();
  const std::size_t stride = std::max<std::size_t>(1, options.record_every);

  TrajectoryRecord rec;
  SolverState state = SolverState::initial(x0, M);
  for (const auto& h : directions.tangents) state.eta.push_back(embed(h, M));
  for (const auto& [g, h] : directions.second_variations) {
    if (g >= state.eta.size() || h >= state.eta.size()) {
      throw std::invalid_argument("evolve: second-variation pair refers to a missing direction");
    }
    state.pairs.emplace_back(g, h);
    state.zeta.emplace_back(M);
  }

  Integrator integrator(cfg);
  std::optional<TransformWorkspace> grid;
  if (options.grid_sup && options.grid_factor * M % 2 == 0) grid.emplace(options.grid_factor * M / 2);
  rec.fractional_norm.resize(options.fractional_alphas.size());

  auto record = [&](const SolverState& s, double dissipation) {
    const auto X = s.X.coeffs();
    rec.times.push_back(s.t);
    rec.l2_norm.push_back(l2_norm(s.X));
    rec.gradient_norm.push_back(gradient_norm(s.X));
    for (std::size_t a = 0; a < options.fractional_alphas.size(); ++a) {
      rec.fractional_norm[a].push_back(fractional_norm(s.X, FractionalExponent(options.fractional_alphas[a])));
    }
    if (options.grid_sup) {
      double m = 0.0;
      if (grid) {
        for (double v : grid->interior_values(X)) m = std::max(m, std::abs(v));
      } else {
        m = grid_sup_norm(s.X, options.grid_factor * M);
      }
      rec.grid_sup.push_back(m);
      rec.sup_grid = std::max(rec.sup_grid, m);
    }
    rec.dissipation.push_back(dissipation);
    if (options.keep_mesh_states) rec.mesh_states.push_back(s.X);
  };
  auto snapshot_due = [&](std::size_t n) {
    return std::find(options.snapshot_steps.begin(), options.snapshot_steps.end(), n) != options.snapshot_steps.end();
  };

  rec.initial_l2_sq = detail::dot(state.X.coeffs(), state.X.coeffs());
  rec.sup_l2 = std::sqrt(rec.initial_l2_sq);
  double dissipation = 0.0;
  record(state, dissipation);
  if (snapshot_due(0)) rec.snapshots.push_back({0, 0.0, state});

  std::vector<std::vector<double>> normals;
  const bool with_brownian = options.ito_sum || cfg.quadrature == Quadrature::left_point;
  std::vector<double> brownian(with_brownian ? M : 0, 0.0);
  std::vector<double> convolved(M, 0.0);
  try {
    for (std::size_t n = 0; n < steps; ++n) {
      sampler.draw_normals(NoiseStream{seed, sample, n}, normals, with_brownian);
      sampler.assemble(normals, brownian, convolved);
      const auto X = state.X.coeffs();
      if (with_brownian) rec.ito_sum += detail::dot(X, brownian);
      dissipation += cfg.dt * detail::squared_gradient_norm(X);
      integrator.advance(state, brownian, convolved);
      rec.sup_l2 = std::max(rec.sup_l2, l2_norm(state.X));
      if (state.n % stride == 0 || state.n == steps) record(state, dissipation);
      if (snapshot_due(state.n)) rec.snapshots.push_back({state.n, state.t, state});
    }
  } catch (const BlowUpError& e) {
    rec.failed = true;
    rec.diagnostic = "sample " + std::to_string(sample) + ": " + e.what();
  }
  rec.dissipation_total = dissipation;
  rec.terminal = std::move(state);
  return rec;
}

/// Convenience overload building the sampler for (model, cfg.dt).
inline TrajectoryRecord evolve(const SpectralField& x0, const SchemeConfig& cfg, const CovarianceModel& model,
                               std::uint64_t seed, std::uint64_t sample, const Directions& directions = {},
                               const EvolveOptions& options = {}) {
  return evolve(x0, cfg, NoiseSampler(model, cfg.dt), seed, sample, directions, options);
}

struct CoupledResult {
  std::vector<SpectralField> terminal;  // one per level, at that level's dimension
  bool failed = false;
  std::string diagnostic;
};

/// Evolves every level in `levels` on the same Brownian path. Level M
/// receives P_M of the increments the finest level sees, and starts from P_M x0.
inline CoupledResult evolve_coupled(const SpectralField& x0, const std::vector<std::size_t>& levels,
                                    const SchemeConfig& base, const NoiseSampler& sampler, std::uint64_t seed,
                                    std::uint64_t sample) {
  if (levels.empty()) throw std::invalid_argument("evolve_coupled: no levels");
  const std::size_t finest = *std::max_element(levels.begin(), levels.end());
  std::vector<Integrator> integrators;
  std::vector<SolverState> states;
  integrators.reserve(levels.size());
  for (std::size_t M : levels) {
    SchemeConfig cfg = base;
    cfg.M = M;
    integrators.emplace_back(cfg);
    states.push_back(SolverState::initial(x0, M));
  }

  CoupledResult out;
  std::vector<std::vector<double>> normals;
  const bool with_brownian = base.quadrature == Quadrature::left_point;
  std::vector<double> brownian(with_brownian ? finest : 0, 0.0);
  std::vector<double> convolved(finest, 0.0);
  const std::size_t steps = base.steps();
  try {
    for (std::size_t n = 0; n < steps; ++n) {
      sampler.draw_normals(NoiseStream{seed, sample, n}, normals, with_brownian);
      sampler.assemble(normals, brownian, convolved);
      for (std::size_t l = 0; l < levels.size(); ++l) integrators[l].advance(states[l], brownian, convolved);
    }
  } catch (const BlowUpError& e) {
    out.failed = true;
    out.diagnostic = "sample " + std::to_string(sample) + ": " + e.what();
  }
  for (auto& s : states) out.terminal.push_back(std::move(s.X));
  return out;
}

}  // namespace sburgers
