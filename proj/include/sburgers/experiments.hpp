#pragma once

// Strong and weak spatial error studies against a reference level M_ref,
// with every level driven by the projection of one noise path per sample.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sburgers/functional.hpp"
#include "sburgers/integrator.hpp"
#include "sburgers/noise.hpp"
#include "sburgers/observables.hpp"
#include "sburgers/parallel.hpp"
#include "sburgers/spectral.hpp"
#include "sburgers/stats.hpp"
#include "sburgers/trajectory.hpp"

namespace sburgers {

/// Deterministic coefficients plus an optional Gaussian perturbation
/// scale * sum_k k^{-decay} xi_k h_k drawn per sample.
struct InitialCondition {
  std::vector<double> coeffs{0.5, 0.25};
  double random_scale = 0.0;
  double random_decay = 2.0;

  static InitialCondition low_regularity(std::size_t modes) {
    InitialCondition ic;
    ic.coeffs.resize(modes);
    for (std::size_t k = 1; k <= modes; ++k) ic.coeffs[k - 1] = std::pow(static_cast<double>(k), -1.1);
    return ic;
  }

  bool is_random() const noexcept { return random_scale != 0.0; }

  SpectralField mean(std::size_t M) const { return embed(SpectralField(coeffs), M); }

  SpectralField draw(std::uint64_t seed, std::uint64_t sample, std::size_t M) const {
    SpectralField x = mean(M);
    if (!is_random()) return x;
    std::vector<double> xi(M);
    fill_standard_normals(NoiseStream{seed, sample, 0}.engine(NoiseStream::kInitialDataLane), xi);
    for (std::size_t k = 1; k <= M; ++k) x[k - 1] += random_scale * std::pow(static_cast<double>(k), -random_decay) * xi[k - 1];
    return x;
  }

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

struct StudyConfig {
  std::vector<std::size_t> levels{8, 16, 32, 64};
  std::size_t M_ref = 256;
  double T = 0.5;
  double dt = 0.5 / 16384.0;
  std::size_t samples_strong = 1000;
  std::size_t samples_weak = 10000;
  std::uint64_t seed = 20240611;
  CovarianceModel covariance{2.0, 1.0, 256};
  InitialCondition x0;
  TestFunctional functional = TestFunctional::cosine(SpectralField{1.0});
  double strong_p = 2.0;
  Scheme scheme = Scheme::exponential_euler;
  Quadrature quadrature = Quadrature::exponential;
  bool nonlinear = true;
  std::size_t bootstrap = 400;

  std::size_t moment_samples = 1000;
  std::vector<std::size_t> moment_levels{8, 16, 32, 64};
  MomentParameters moments;

  std::size_t scan_samples = 1000;
  std::size_t scan_M = 32;
  BoundParameters scan;

  /// Finite-difference steps for the derivative consistency checks.
  double fd_epsilon = 1e-4;
  double fd_epsilon_second = 1e-3;
  std::size_t fd_M = 16;

  SchemeConfig scheme_config(std::size_t M) const {
    SchemeConfig c;
    c.dt = dt;
    c.T = T;
    c.M = M;
    c.scheme = scheme;
    c.quadrature = quadrature;
    c.nonlinear = nonlinear;
    return c;
  }

  MonteCarloInputs inputs(std::size_t M, std::size_t samples, std::size_t threads) const {
    return MonteCarloInputs{scheme_config(M), covariance, seed, samples, threads};
  }

  /// Invariants of a rate study; throws naming the offending field.
  void validate() const {
    if (levels.empty()) throw std::invalid_argument("levels: at least one level is required");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const std::size_t M = levels[i];
      if (M == 0 || (M & (M - 1)) != 0) throw std::invalid_argument("levels: entries must be powers of two");
      if (i > 0 && M != 2 * levels[i - 1]) throw std::invalid_argument("levels: entries must double from one to the next");
    }
    if (M_ref < 4 * levels.back()) throw std::invalid_argument("M_ref: must be at least 4 * max(levels)");
    if (strong_p < 1.0) throw std::invalid_argument("strong_p: must be >= 1");
    scheme_config(M_ref).validate();
    if (functional.kind() == FunctionalKind::cosine && functional.direction().dim() > M_ref) {
      throw std::invalid_argument("functional_direction: more modes than M_ref");
    }
  }

  friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

// ---------------------------------------------------------------------------

struct LevelPoint {
  std::size_t M = 0;
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double half_width = 0.0;  // of the underlying sample mean
  bool resolved = true;
  friend bool operator==(const LevelPoint&, const LevelPoint&) = default;
};

struct RateEstimate {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  double slope_ci_lo = std::numeric_limits<double>::quiet_NaN();
  double slope_ci_hi = std::numeric_limits<double>::quiet_NaN();
  std::vector<LevelPoint> points;
  /// Levels that entered the fit.
  std::vector<std::size_t> fitted;
  bool sufficient = true;
  std::string note;
  std::size_t samples = 0;
  std::size_t failures = 0;

  bool has_slope() const noexcept { return sufficient && std::isfinite(slope); }

  friend bool operator==(const RateEstimate& a, const RateEstimate& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return same(a.slope, b.slope) && same(a.intercept, b.intercept) && same(a.residual, b.residual) &&
           same(a.slope_ci_lo, b.slope_ci_lo) && same(a.slope_ci_hi, b.slope_ci_hi) && a.points == b.points &&
           a.fitted == b.fitted && a.sufficient == b.sufficient && a.note == b.note && a.samples == b.samples &&
           a.failures == b.failures;
  }
};

/// OLS of log(error) on log(M). Non-positive errors are skipped and noted.
inline RateEstimate fit_rate(const std::vector<LevelPoint>& points) {
  RateEstimate r;
  r.points = points;
  std::vector<double> x, y;
  std::vector<std::size_t> skipped;
  for (const auto& p : points) {
    if (p.estimate > 0.0 && std::isfinite(p.estimate) && p.M > 0) {
      x.push_back(std::log(static_cast<double>(p.M)));
      y.push_back(std::log(p.estimate));
      r.fitted.push_back(p.M);
    } else {
      skipped.push_back(p.M);
    }
  }
  if (!skipped.empty()) {
    r.note = "excluded non-positive errors at M =";
    for (auto M : skipped) r.note += " " + std::to_string(M);
  }
  if (x.size() < 2) {
    r.sufficient = false;
    if (!r.note.empty()) r.note += "; ";
    r.note += "fewer than 2 positive points";
    return r;
  }
  const auto f = least_squares(x, y);
  r.slope = f.slope;
  r.intercept = f.intercept;
  r.residual = f.residual;
  return r;
}

struct SampleOutcome {
  bool failed = false;
  std::string diagnostic;
  std::vector<double> strong;    // |X_ref - X_M|^p per level
  std::vector<double> weak;      // phi(X_ref) - phi(X_M) per level
  double phi_ref = 0.0;
};

/// Evolves the levels and M_ref together for samples [0, n).
inline std::vector<SampleOutcome> coupled_samples(const StudyConfig& cfg, const std::vector<std::size_t>& levels,
                                                  std::size_t n, std::size_t threads) {
  std::vector<std::size_t> all = levels;
  all.push_back(cfg.M_ref);
  const SchemeConfig base = cfg.scheme_config(cfg.M_ref);
  const NoiseSampler sampler(cfg.covariance.restricted(cfg.M_ref), cfg.dt);
  return parallel_map(n, threads, [&](std::size_t s) {
    const SpectralField x0 = cfg.x0.draw(cfg.seed, s, cfg.M_ref);
    const auto res = evolve_coupled(x0, all, base, sampler, cfg.seed, s);
    SampleOutcome o;
    o.failed = res.failed;
    o.diagnostic = res.diagnostic;
    if (res.failed) return o;
    const SpectralField& ref = res.terminal.back();
    o.phi_ref = cfg.functional.eval(ref);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const SpectralField& xm = res.terminal[l];
      double sq = 0.0;
      for (std::size_t i = 0; i < ref.dim(); ++i) {
        const double d = ref[i] - (i < xm.dim() ? xm[i] : 0.0);
        sq += d * d;
      }
      o.strong.push_back(cfg.strong_p == 2.0 ? sq : std::pow(std::sqrt(sq), cfg.strong_p));
      o.weak.push_back(o.phi_ref - cfg.functional.eval(xm));
    }
    return o;
  });
}

class StudyAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<const SampleOutcome*> usable(const std::vector<SampleOutcome>& outs, std::size_t n,
                                                std::size_t& failures) {
  std::vector<const SampleOutcome*> ok;
  failures = 0;
  for (std::size_t s = 0; s < std::min(n, outs.size()); ++s) {
    if (outs[s].failed) {
      ++failures;
    } else {
      ok.push_back(&outs[s]);
    }
  }
  return ok;
}

/// Percentile bootstrap of a slope. `stat(level, idx)` returns the level
/// estimate on a resampled index set; indices come from a Philox stream.
template <class Stat>
std::pair<double, double> bootstrap_slope(std::size_t n, const std::vector<std::size_t>& fit_levels,
                                          const std::vector<std::size_t>& Ms, std::size_t replicates,
                                          std::uint64_t seed, Stat stat) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (replicates == 0 || n < 2 || fit_levels.size() < 2) return {nan, nan};
  std::vector<double> slopes;
  std::vector<std::size_t> idx(n);
  std::vector<double> x, y;
  for (std::size_t b = 0; b < replicates; ++b) {
    PhiloxEngine eng = NoiseStream{seed, b, 0}.engine(NoiseStream::kBootstrapLane);
    for (auto& i : idx) i = static_cast<std::size_t>(eng() % n);
    x.clear();
    y.clear();
    for (std::size_t l : fit_levels) {
      const double e = stat(l, idx);
      if (!(e > 0.0) || !std::isfinite(e)) continue;
      x.push_back(std::log(static_cast<double>(Ms[l])));
      y.push_back(std::log(e));
    }
    if (x.size() >= 2) slopes.push_back(least_squares(x, y).slope);
  }
  if (slopes.empty()) return {nan, nan};
  return {quantile(slopes, 0.025), quantile(slopes, 0.975)};
}

inline void check_failures(std::size_t failures, std::size_t n, const std::vector<SampleOutcome>& outs,
                           const char* what) {
  if (n > 0 && static_cast<double>(failures) > 0.01 * static_cast<double>(n)) {
    std::string first;
    for (const auto& o : outs) {
      if (o.failed) {
        first = o.diagnostic;
        break;
      }
    }
    throw StudyAborted(std::string(what) + ": " + std::to_string(failures) + " of " + std::to_string(n) +
                       " samples failed (more than 1%); first: " + first);
  }
}

}  // namespace detail

/// Strong error (E|X_ref - X_M|^p)^{1/p} from the first n outcomes.
inline RateEstimate strong_from_samples(const StudyConfig& cfg, const std::vector<std::size_t>& levels,
                                        const std::vector<SampleOutcome>& outs, std::size_t n) {
  std::size_t failures = 0;
  const auto ok = detail::usable(outs, n, failures);
  detail::check_failures(failures, n, outs, "strong study");
  const double p = cfg.strong_p;
  std::vector<LevelPoint> pts;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<double> v;
    v.reserve(ok.size());
    for (const auto* o : ok) v.push_back(o->strong[l]);
    const auto m = summarize("strong", v);
    LevelPoint pt;
    pt.M = levels[l];
    pt.estimate = std::pow(m.estimate, 1.0 / p);
    pt.ci_lo = std::pow(std::max(0.0, m.estimate - m.half_width), 1.0 / p);
    pt.ci_hi = std::pow(m.estimate + m.half_width, 1.0 / p);
    pt.half_width = m.half_width;
    pts.push_back(pt);
  }
  RateEstimate r = fit_rate(pts);
  r.samples = n;
  r.failures = failures;
  if (r.has_slope()) {
    std::vector<std::size_t> fit_idx;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      if (std::find(r.fitted.begin(), r.fitted.end(), levels[l]) != r.fitted.end()) fit_idx.push_back(l);
    }
    std::tie(r.slope_ci_lo, r.slope_ci_hi) = detail::bootstrap_slope(
        ok.size(), fit_idx, levels, cfg.bootstrap, cfg.seed, [&](std::size_t l, const std::vector<std::size_t>& idx) {
          double s = 0.0;
          for (auto i : idx) s += ok[i]->strong[l];
          return std::pow(s / static_cast<double>(idx.size()), 1.0 / p);
        });
  }
  return r;
}

/// Weak error E[phi(X_ref) - phi(X_M)], fitted over resolved levels only.
inline RateEstimate weak_from_samples(const StudyConfig& cfg, const std::vector<std::size_t>& levels,
                                      const std::vector<SampleOutcome>& outs, std::size_t n) {
  std::size_t failures = 0;
  const auto ok = detail::usable(outs, n, failures);
  detail::check_failures(failures, n, outs, "weak study");
  std::vector<LevelPoint> pts;
  std::vector<LevelPoint> resolved;
  std::vector<std::size_t> fit_idx;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::vector<double> v;
    v.reserve(ok.size());
    for (const auto* o : ok) v.push_back(o->weak[l]);
    const auto m = summarize("weak", v);
    LevelPoint pt;
    pt.M = levels[l];
    pt.estimate = m.estimate;
    pt.ci_lo = m.estimate - m.half_width;
    pt.ci_hi = m.estimate + m.half_width;
    pt.half_width = m.half_width;
    pt.resolved = std::abs(m.estimate) > 2.0 * m.half_width;
    pts.push_back(pt);
    if (pt.resolved) {
      LevelPoint abs_pt = pt;
      abs_pt.estimate = std::abs(pt.estimate);
      resolved.push_back(abs_pt);
      fit_idx.push_back(l);
    }
  }
  RateEstimate r;
  if (resolved.size() >= 3) {
    r = fit_rate(resolved);
    std::tie(r.slope_ci_lo, r.slope_ci_hi) = detail::bootstrap_slope(
        ok.size(), fit_idx, levels, cfg.bootstrap, cfg.seed, [&](std::size_t l, const std::vector<std::size_t>& idx) {
          double s = 0.0;
          for (auto i : idx) s += ok[i]->weak[l];
          return std::abs(s / static_cast<double>(idx.size()));
        });
  } else {
    r.sufficient = false;
    r.note = "insufficient resolution: " + std::to_string(resolved.size()) +
             " of " + std::to_string(levels.size()) + " levels have |estimate| > 2 x CI half-width";
  }
  r.points = pts;
  r.samples = n;
  r.failures = failures;
  return r;
}

inline RateEstimate strong_error_study(const StudyConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  if (cfg.samples_strong == 0) throw std::invalid_argument("samples_strong: must be positive");
  const auto outs = coupled_samples(cfg, cfg.levels, cfg.samples_strong, threads);
  return strong_from_samples(cfg, cfg.levels, outs, cfg.samples_strong);
}

inline RateEstimate weak_error_study(const StudyConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  if (cfg.samples_weak == 0) throw std::invalid_argument("samples_weak: must be positive");
  const auto outs = coupled_samples(cfg, cfg.levels, cfg.samples_weak, threads);
  return weak_from_samples(cfg, cfg.levels, outs, cfg.samples_weak);
}

/// Both rates from one pass: sample s has the same path in either study,
/// so the strong study reuses the first samples_strong weak samples.
inline std::pair<RateEstimate, RateEstimate> rate_studies(const StudyConfig& cfg, std::size_t threads = 1) {
  cfg.validate();
  if (cfg.samples_strong == 0 || cfg.samples_weak == 0) throw std::invalid_argument("sample counts must be positive");
  const std::size_t n = std::max(cfg.samples_strong, cfg.samples_weak);
  const auto outs = coupled_samples(cfg, cfg.levels, n, threads);
  return {strong_from_samples(cfg, cfg.levels, outs, cfg.samples_strong),
          weak_from_samples(cfg, cfg.levels, outs, cfg.samples_weak)};
}

// ---------------------------------------------------------------------------
// Closed forms for the linear equation with e_k = h_k

/// Var of mode k of the stochastic convolution at time t.
inline double ou_variance(const CovarianceModel& model, std::size_t k, double t) {
  if (k > model.truncation()) return 0.0;
  const double lambda = laplace_eigenvalue(k);
  return model.eigenvalue(k) * -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

/// E|X_ref(T) - X_M(T)|^2 for the linear equation: the mode tail M < k <= M_ref.
inline double linear_strong_error_sq(const CovarianceModel& model, std::size_t M, std::size_t M_ref, double T) {
  double s = 0.0;
  for (std::size_t k = M + 1; k <= M_ref; ++k) s += ou_variance(model, k, T);
  return s;
}

/// E cos<X_M(T), v> for the linear equation started at x0.
inline double linear_cosine_value(const CovarianceModel& model, const SpectralField& x0, const SpectralField& v,
                                  std::size_t M, double T) {
  double mean = 0.0, var = 0.0;
  for (std::size_t k = 1; k <= std::min(M, v.dim()); ++k) {
    const double m = k <= x0.dim() ? x0[k - 1] * std::exp(-laplace_eigenvalue(k) * T) : 0.0;
    mean += m * v[k - 1];
    var += v[k - 1] * v[k - 1] * ou_variance(model, k, T);
  }
  return std::cos(mean) * std::exp(-0.5 * var);
}

}  // namespace sburgers
