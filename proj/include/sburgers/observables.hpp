#pragma once

// Monte Carlo estimators for u_M(t, x) = E phi(X_M^x(t)) and its first and
// second directional derivatives, plus path statistics (moments, L-infinity,
// time regularity) and the derivative bound scan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sburgers/functional.hpp"
#include "sburgers/integrator.hpp"
#include "sburgers/noise.hpp"
#include "sburgers/parallel.hpp"
#include "sburgers/spectral.hpp"
#include "sburgers/stats.hpp"
#include "sburgers/trajectory.hpp"

namespace sburgers {

/// Everything a single-resolution Monte Carlo run needs.
struct MonteCarloInputs {
  SchemeConfig scheme;
  CovarianceModel model;
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
  std::size_t threads = 1;
};

namespace detail {

inline NoiseSampler sampler_for(const MonteCarloInputs& in) {
  return NoiseSampler(in.model.restricted(in.scheme.M), in.scheme.dt);
}

inline void require_samples(const MonteCarloInputs& in) {
  if (in.samples == 0) throw std::invalid_argument("Monte Carlo estimate needs at least one sample");
}

/// Runs `per_sample(record)` on every sample path and summarizes the
/// returned values; failed paths are excluded and counted.
template <class PerSample>
MomentReport path_average(std::string name, const SpectralField& x0, const MonteCarloInputs& in,
                          const Directions& directions, PerSample per_sample) {
  require_samples(in);
  const NoiseSampler sampler = sampler_for(in);
  struct Out {
    bool failed;
    double value;
  };
  const auto outs = parallel_map(in.samples, in.threads, [&](std::size_t s) {
    const auto rec = evolve(x0, in.scheme, sampler, in.seed, s, directions, EvolveOptions{.record_every = in.scheme.steps() + 1, .ito_sum = false});
    return rec.failed ? Out{true, 0.0} : Out{false, per_sample(rec.terminal)};
  });
  std::vector<double> values;
  std::size_t failures = 0;
  for (const auto& o : outs) {
    if (o.failed) {
      ++failures;
    } else {
      values.push_back(o.value);
    }
  }
  auto r = summarize(std::move(name), values);
  r.failures = failures;
  return r;
}

}  // namespace detail

/// E phi(X_M^{x0}(T)).
inline MomentReport weak_value(const TestFunctional& f, const SpectralField& x0, const MonteCarloInputs& in) {
  return detail::path_average("u", x0, in, {}, [&](const SolverState& s) { return f.eval(s.X); });
}

/// E D phi(X(T)).eta^h(T).
inline MomentReport du_estimate(const TestFunctional& f, const SpectralField& x0, const SpectralField& h,
                                const MonteCarloInputs& in) {
  if (l2_norm(h) == 0.0) throw std::invalid_argument("du_estimate: direction must be nonzero");
  return detail::path_average("Du", x0, in, Directions{{h}, {}},
                              [&](const SolverState& s) { return f.deriv(s.X, s.eta[0]); });
}

/// E [D^2 phi(X(T)).(eta^g, eta^h) + D phi(X(T)).zeta^{g,h}].
inline MomentReport d2u_estimate(const TestFunctional& f, const SpectralField& x0, const SpectralField& g,
                                 const SpectralField& h, const MonteCarloInputs& in) {
  if (l2_norm(g) == 0.0 || l2_norm(h) == 0.0) throw std::invalid_argument("d2u_estimate: directions must be nonzero");
  return detail::path_average("D2u", x0, in, Directions::pair(g, h), [&](const SolverState& s) {
    return f.second_deriv(s.X, s.eta[0], s.eta[1]) + f.deriv(s.X, s.zeta[0]);
  });
}

// ---------------------------------------------------------------------------
// Path moments

struct MomentParameters {
  std::vector<double> powers{4.0, 8.0};
  /// Exponential-moment weight; <= 0 selects 0.2 / Tr(Q).
  double beta = 0.0;
  double grid_power = 4.0;
  double holder_lambda = 0.25;
  double holder_gamma = 0.25;
  /// Hoelder pairs closer than this many steps are skipped.
  std::size_t holder_min_steps = 4;
  std::size_t record_every = 256;
  friend bool operator==(const MomentParameters&, const MomentParameters&) = default;
};

inline double effective_beta(const MomentParameters& p, const CovarianceModel& model) {
  if (p.beta > 0.0) return p.beta;
  const double tr = trace(model);
  return tr > 0.0 ? 0.2 / tr : 0.0;
}

struct LevelMoments {
  std::size_t M = 0;
  std::vector<MomentReport> reports;

  const MomentReport& get(const std::string& name) const {
    for (const auto& r : reports) {
      if (r.name == name) return r;
    }
    throw std::out_of_range("no statistic named " + name);
  }
  friend bool operator==(const LevelMoments&, const LevelMoments&) = default;
};

inline std::string power_stat_name(double p) {
  return "sup_l2^" + std::to_string(static_cast<long long>(std::llround(p)));
}

/// sup over mesh pairs |t_i - t_j| >= min_gap of |(-A)^lambda (X_i - X_j)| / |t_i - t_j|^gamma.
inline double holder_quotient(const std::vector<SpectralField>& states, const std::vector<double>& times,
                              double lambda, double gamma, double min_gap) {
  double best = 0.0;
  std::vector<double> w;
  if (!states.empty()) {
    w.resize(states.front().dim());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(laplace_eigenvalue(i + 1), 2.0 * lambda);
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      const double gap = times[j] - times[i];
      if (gap < min_gap * (1.0 - 1e-12)) continue;
      double s = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double d = states[j][k] - states[i][k];
        s += w[k] * d * d;
      }
      best = std::max(best, std::sqrt(s) / std::pow(gap, gamma));
    }
  }
  return best;
}

/// Moment statistics at each Galerkin level, all levels on the same seeds.
inline std::vector<LevelMoments> moment_statistics(const SpectralField& x0, const std::vector<std::size_t>& levels,
                                                   const MonteCarloInputs& in, const MomentParameters& params) {
  detail::require_samples(in);
  const double beta = effective_beta(params, in.model);
  std::vector<LevelMoments> out;
  for (std::size_t M : levels) {
    MonteCarloInputs level_in = in;
    level_in.scheme.M = M;
    const NoiseSampler sampler = detail::sampler_for(level_in);
    EvolveOptions opts;
    opts.record_every = params.record_every;
    opts.grid_sup = true;
    opts.keep_mesh_states = true;
    opts.ito_sum = false;
    const std::size_t nstat = params.powers.size() + 3;
    struct Out {
      bool failed;
      std::vector<double> stats;
    };
    const auto outs = parallel_map(in.samples, in.threads, [&](std::size_t s) {
      const auto rec = evolve(x0, level_in.scheme, sampler, in.seed, s, {}, opts);
      if (rec.failed) return Out{true, {}};
      std::vector<double> v;
      v.reserve(nstat);
      for (double p : params.powers) v.push_back(std::pow(rec.sup_l2, p));
      v.push_back(std::exp(beta * (rec.sup_l2 * rec.sup_l2 + rec.dissipation_total)));
      v.push_back(std::pow(rec.sup_grid, params.grid_power));
      v.push_back(holder_quotient(rec.mesh_states, rec.times, params.holder_lambda, params.holder_gamma,
                                  static_cast<double>(params.holder_min_steps) * level_in.scheme.dt));
      return Out{false, std::move(v)};
    });
    std::vector<std::string> names;
    for (double p : params.powers) names.push_back(power_stat_name(p));
    names.push_back("exp_moment");
    names.push_back("sup_grid^" + std::to_string(static_cast<long long>(std::llround(params.grid_power))));
    names.push_back("holder");
    LevelMoments lm;
    lm.M = M;
    std::size_t failures = 0;
    for (const auto& o : outs) failures += o.failed ? 1 : 0;
    for (std::size_t k = 0; k < nstat; ++k) {
      std::vector<double> vals;
      vals.reserve(outs.size());
      for (const auto& o : outs) {
        if (!o.failed) vals.push_back(o.stats[k]);
      }
      auto r = summarize(names[k], vals);
      r.failures = failures;
      // heavy tails matter for the exponential moment; others just carry the flag
      lm.reports.push_back(std::move(r));
    }
    out.push_back(std::move(lm));
  }
  return out;
}

/// Largest |difference| / combined SE between consecutive levels.
inline double max_level_discrepancy(const std::vector<LevelMoments>& levels, const std::string& stat) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    const auto& a = levels[i].get(stat);
    const auto& b = levels[i + 1].get(stat);
    const double se = std::hypot(a.std_error, b.std_error);
    const double d = std::abs(a.estimate - b.estimate);
    worst = std::max(worst, se > 0.0 ? d / se : (d > 0.0 ? INFINITY : 0.0));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Derivative bound scan

struct BoundParameters {
  std::vector<double> alphas{0.0, 0.5, 0.75};
  /// (alpha, beta) pairs for the second-derivative ratio, alpha + beta < 1.
  std::vector<std::pair<double, double>> second_order{{0.0, 0.0}, {0.25, 0.25}, {0.45, 0.45}};
  double delta = 0.05;
  double epsilon = 0.01;
  std::vector<std::size_t> modes{1, 2, 4, 8};
  /// Evaluation times as fractions of T.
  std::vector<double> time_fractions{1.0, 0.5, 0.25, 0.125};
  double level = 0.05;
  friend bool operator==(const BoundParameters&, const BoundParameters&) = default;

  void validate() const {
    for (double a : alphas) {
      if (!(a >= 0.0 && a < 1.0)) throw std::invalid_argument("bound scan: alpha must lie in [0,1)");
    }
    for (auto [a, b] : second_order) {
      if (!(a >= 0.0 && b >= 0.0 && a + b < 1.0)) {
        throw std::invalid_argument("bound scan: second-order exponents need alpha, beta >= 0 and alpha + beta < 1");
      }
    }
    if (!(delta > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("bound scan: delta and epsilon must be positive");
    if (modes.empty() || time_fractions.empty()) throw std::invalid_argument("bound scan: empty mode or time grid");
    for (double f : time_fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("bound scan: time fractions must lie in (0,1]");
    }
  }
};

struct ScanRow {
  double alpha = 0.0;
  double beta = 0.0;  // second-order rows only
  double t = 0.0;
  std::size_t k = 0;
  MomentReport estimate;
  double ratio = 0.0;         // stated polynomial power (6 or 16)
  double ratio_half_width = 0.0;
  double ratio_power0 = 0.0;  // polynomial factor dropped
  friend bool operator==(const ScanRow&, const ScanRow&) = default;
};

struct ScanTrend {
  double alpha = 0.0;
  double beta = 0.0;
  bool second_order = false;
  TrendTest versus_inverse_t;
  TrendTest versus_k;
  double max_ratio = 0.0;
  friend bool operator==(const ScanTrend& a, const ScanTrend& b) {
    return a.alpha == b.alpha && a.beta == b.beta && a.second_order == b.second_order &&
           a.versus_inverse_t.rho == b.versus_inverse_t.rho && a.versus_k.rho == b.versus_k.rho &&
           a.max_ratio == b.max_ratio;
  }
};

struct BoundScanReport {
  std::size_t M = 0;
  std::size_t samples = 0;
  std::size_t failures = 0;
  std::vector<ScanRow> first_order;
  std::vector<ScanRow> second_order;
  std::vector<ScanTrend> trends;
  /// No first-order trend test flags growth.
  bool bounded = true;
  friend bool operator==(const BoundScanReport&, const BoundScanReport&) = default;
};

/// Tracks eta^{h_k} and zeta^{h_k,h_k} for every k along each path and
/// evaluates the normalized derivative ratios at each scan time.
inline BoundScanReport derivative_bound_scan(const TestFunctional& f, const SpectralField& x0,
                                             const BoundParameters& params, const MonteCarloInputs& in) {
  params.validate();
  detail::require_samples(in);
  const std::size_t M = in.scheme.M;
  const double T = in.scheme.T;
  std::vector<std::size_t> steps;
  for (double frac : params.time_fractions) {
    const double n = frac * T / in.scheme.dt;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1.0) {
      throw std::invalid_argument("bound scan: every scan time must be a positive multiple of dt");
    }
    steps.push_back(static_cast<std::size_t>(std::llround(n)));
  }
  Directions dirs;
  for (std::size_t i = 0; i < params.modes.size(); ++i) {
    const std::size_t k = params.modes[i];
    if (k == 0 || k > M) throw std::invalid_argument("bound scan: direction modes must lie in 1..M");
    dirs.tangents.push_back(SpectralField::basis(k, M));
    dirs.second_variations.emplace_back(i, i);
  }
  const bool track_second = in.scheme.scheme == Scheme::exponential_euler && !params.second_order.empty();
  if (!track_second) dirs.second_variations.clear();

  const NoiseSampler sampler = detail::sampler_for(in);
  EvolveOptions opts;
  opts.record_every = in.scheme.steps() + 1;
  opts.snapshot_steps = steps;
  opts.ito_sum = false;
  const std::size_t nk = params.modes.size();
  const std::size_t nt = steps.size();
  struct Out {
    bool failed;
    std::vector<double> du;  // [t][k]
    std::vector<double> d2;
  };
  const auto outs = parallel_map(in.samples, in.threads, [&](std::size_t s) {
    const auto rec = evolve(x0, in.scheme, sampler, in.seed, s, dirs, opts);
    Out o{rec.failed, std::vector<double>(nt * nk), std::vector<double>(nt * nk)};
    if (rec.failed) return o;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const auto it = std::find_if(rec.snapshots.begin(), rec.snapshots.end(),
                                   [&](const Snapshot& sn) { return sn.step == steps[ti]; });
      const SolverState& st = it->state;
      const SpectralField grad = f.grad(st.X);
      for (std::size_t ki = 0; ki < nk; ++ki) {
        o.du[ti * nk + ki] = inner(grad, st.eta[ki]);
        if (track_second) {
          o.d2[ti * nk + ki] = f.second_deriv(st.X, st.eta[ki], st.eta[ki]) + inner(grad, st.zeta[ki]);
        }
      }
    }
    return o;
  });

  BoundScanReport rep;
  rep.M = M;
  rep.samples = in.samples;
  for (const auto& o : outs) rep.failures += o.failed ? 1 : 0;
  auto collect = [&](bool second, std::size_t idx) {
    std::vector<double> v;
    for (const auto& o : outs) {
      if (!o.failed) v.push_back(second ? o.d2[idx] : o.du[idx]);
    }
    return v;
  };

  const double weight = std::exp(params.epsilon * inner(x0, x0));
  const double xnorm = fractional_norm(x0, FractionalExponent(0.25 + params.delta));
  const double poly6 = 1.0 + std::pow(xnorm, 6.0);
  const double poly16 = 1.0 + std::pow(xnorm, 16.0);

  for (double alpha : params.alphas) {
    ScanTrend trend{alpha, 0.0, false};
    std::vector<double> inv_t, ks, ratios;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const double t = static_cast<double>(steps[ti]) * in.scheme.dt;
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const std::size_t k = params.modes[ki];
        ScanRow row;
        row.alpha = alpha;
        row.t = t;
        row.k = k;
        row.estimate = summarize("Du", collect(false, ti * nk + ki));
        row.estimate.failures = rep.failures;
        const double base = std::pow(t, -alpha) * weight * std::pow(pi * static_cast<double>(k), -2.0 * alpha);
        row.ratio = std::abs(row.estimate.estimate) / (base * poly6);
        row.ratio_half_width = row.estimate.half_width / (base * poly6);
        row.ratio_power0 = std::abs(row.estimate.estimate) / base;
        trend.max_ratio = std::max(trend.max_ratio, row.ratio);
        inv_t.push_back(1.0 / t);
        ks.push_back(static_cast<double>(k));
        ratios.push_back(row.ratio);
        rep.first_order.push_back(std::move(row));
      }
    }
    trend.versus_inverse_t = spearman_increasing(inv_t, ratios, params.level);
    trend.versus_k = spearman_increasing(ks, ratios, params.level);
    rep.bounded = rep.bounded && !trend.versus_inverse_t.increasing && !trend.versus_k.increasing;
    rep.trends.push_back(trend);
  }

  if (track_second) {
    for (auto [alpha, beta] : params.second_order) {
      ScanTrend trend{alpha, beta, true};
      std::vector<double> inv_t, ks, ratios;
      for (std::size_t ti = 0; ti < nt; ++ti) {
        const double t = static_cast<double>(steps[ti]) * in.scheme.dt;
        for (std::size_t ki = 0; ki < nk; ++ki) {
          const std::size_t k = params.modes[ki];
          ScanRow row;
          row.alpha = alpha;
          row.beta = beta;
          row.t = t;
          row.k = k;
          row.estimate = summarize("D2u", collect(true, ti * nk + ki));
          row.estimate.failures = rep.failures;
          const double wk = pi * static_cast<double>(k);
          const double base = std::pow(t, -(alpha + beta)) * weight * std::pow(wk, -2.0 * alpha) * std::pow(wk, -2.0 * beta);
          row.ratio = std::abs(row.estimate.estimate) / (base * poly16);
          row.ratio_half_width = row.estimate.half_width / (base * poly16);
          row.ratio_power0 = std::abs(row.estimate.estimate) / base;
          trend.max_ratio = std::max(trend.max_ratio, row.ratio);
          inv_t.push_back(1.0 / t);
          ks.push_back(static_cast<double>(k));
          ratios.push_back(row.ratio);
          rep.second_order.push_back(std::move(row));
        }
      }
      trend.versus_inverse_t = spearman_increasing(inv_t, ratios, params.level);
      trend.versus_k = spearman_increasing(ks, ratios, params.level);
      rep.trends.push_back(trend);
    }
  }
  return rep;
}

}  // namespace sburgers
