#pragma once

// Named pass/fail checks shared by the `invariants` subcommand and the
// acceptance suite. Each returns the measured value next to its threshold.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sburgers/experiments.hpp"
#include "sburgers/integrator.hpp"
#include "sburgers/noise.hpp"
#include "sburgers/observables.hpp"
#include "sburgers/parallel.hpp"
#include "sburgers/spectral.hpp"
#include "sburgers/stats.hpp"
#include "sburgers/trajectory.hpp"
#include "sburgers/transform.hpp"

namespace sburgers {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

/// Coefficients xi_k * k^{-decay}, xi standard normal from an auxiliary stream.
inline SpectralField random_field(std::size_t M, std::uint64_t seed, std::uint64_t index, double decay = 0.0) {
  std::vector<double> xi(M);
  fill_standard_normals(NoiseStream{seed, index, 0}.engine(NoiseStream::kAuxiliaryLane), xi);
  for (std::size_t k = 1; k <= M; ++k) xi[k - 1] *= std::pow(static_cast<double>(k), -decay);
  return SpectralField(std::move(xi));
}

// ---------------------------------------------------------------------------
// Algebraic identities and inequalities on random fields

inline std::vector<CheckResult> algebraic_checks(std::size_t fields = 1000, std::uint64_t seed = 1) {
  const std::vector<std::size_t> dims{4, 8, 16, 32, 64, 128};
  double orth = 0.0, antisym = 0.0, fast = 0.0, parseval = 0.0;
  double tail = 0.0, inverse = 0.0, poincare = 0.0, smoothing = 0.0, difference = 0.0;
  std::vector<double> gn_max(dims.size(), 0.0);
  std::vector<TransformWorkspace> ws;
  for (std::size_t M : dims) ws.emplace_back(M);

  for (std::size_t i = 0; i < fields; ++i) {
    const std::size_t di = i % dims.size();
    const std::size_t M = dims[di];
    const double decay = 0.5 * static_cast<double>(i % 4);
    const SpectralField x = random_field(M, seed, 2 * i, decay);
    const SpectralField y = random_field(M, seed, 2 * i + 1, decay);
    const double nx = l2_norm(x);
    const double ny = l2_norm(y);

    const SpectralField Bx = nonlinearity_conv(x, M);
    orth = std::max(orth, std::abs(inner(Bx, x)) / (nx * nx * nx));
    const double a = inner(x, bilinear_conv(x, y, M)) + 0.5 * inner(y, Bx);
    antisym = std::max(antisym, std::abs(a) / (nx * nx * ny));

    SpectralField Bf(M);
    ws[di].gradient_product(x.coeffs(), x.coeffs(), Bf.coeffs());
    double dmax = 0.0;
    for (std::size_t k = 0; k < M; ++k) dmax = std::max(dmax, std::abs(Bf[k] - Bx[k]));
    fast = std::max(fast, dmax / (nx * nx));

    double s = 0.0;
    for (double c : x.coeffs()) s += c * c;
    parseval = std::max(parseval, std::abs(fractional_norm(x, FractionalExponent(0.0)) * fractional_norm(x, FractionalExponent(0.0)) - s) / s);

    // |(-A)^{-alpha}(P_M - P_N) x| <= (pi N)^{-2 alpha} |(P_M - P_N) x|
    const std::size_t N = std::max<std::size_t>(1, M / 4);
    const double alpha = 0.1 + 0.8 * static_cast<double>(i % 9) / 8.0;
    SpectralField high = x;
    high -= project(x, N);
    const double lhs_t = fractional_norm(high, FractionalExponent(-alpha));
    const double rhs_t = std::pow(pi * static_cast<double>(N), -2.0 * alpha) * l2_norm(high);
    tail = std::max(tail, lhs_t / rhs_t);

    // |(-A)^{1/2} x| <= (pi M)^{2 beta} |(-A)^{1/2 - beta} x| on H_M
    const double beta = 0.05 + 0.4 * static_cast<double>(i % 7) / 6.0;
    const double lhs_i = fractional_norm(x, FractionalExponent(0.5));
    const double rhs_i = std::pow(pi * static_cast<double>(M), 2.0 * beta) * fractional_norm(x, FractionalExponent(0.5 - beta));
    inverse = std::max(inverse, lhs_i / rhs_i);

    poincare = std::max(poincare, nx / (fractional_norm(x, FractionalExponent(0.5)) / sqrt2));

    const double t = std::pow(10.0, -4.0 + 4.0 * static_cast<double>(i % 11) / 10.0);
    const double al = 0.1 + 0.9 * static_cast<double>(i % 5) / 4.0;
    const double bound = std::exp(al * (std::log(al) - 1.0)) * std::pow(t, -al) * nx;
    smoothing = std::max(smoothing, fractional_norm(semigroup(x, t), FractionalExponent(al)) / bound);

    SpectralField diff = semigroup(x, t);
    diff -= x;
    const double be = static_cast<double>(i % 6) / 5.0;
    difference = std::max(difference, fractional_norm(diff, FractionalExponent(-be)) / (std::pow(t, be) * nx));

    // L4 norm from grid values: |x|_4 <= C |x|^{3/4} |x|_{W^{1,2}}^{1/4}
    const std::size_t n = 8 * M;
    const auto vals = eval_on_grid(x, n);
    double l4 = 0.0;
    for (std::size_t j = 0; j < n; ++j) l4 += std::pow(vals[j], 4.0);
    l4 = std::pow(l4 / static_cast<double>(n), 0.25);
    const double w12 = std::sqrt(nx * nx + std::pow(gradient_norm(x), 2.0));
    gn_max[di] = std::max(gn_max[di], l4 / (std::pow(nx, 0.75) * std::pow(w12, 0.25)));
  }

  const std::string n = std::to_string(fields) + " random fields, M in 4..128";
  auto check = [&](std::string name, double v, double thr, std::string what) {
    return CheckResult{std::move(name), v <= thr, v, thr, what + " (" + n + ")"};
  };
  std::vector<CheckResult> out;
  out.push_back(check("B_orthogonality", orth, 1e-12, "max |<B_M(x),x>| / |x|^3"));
  out.push_back(check("B_antisymmetry", antisym, 1e-12, "max |<x1,B_M[x1,x2]> + <x2,B_M(x1)>/2| / (|x1|^2 |x2|)"));
  out.push_back(check("fast_vs_conv", fast, 1e-12, "max coefficient gap between transform and convolution / |x|^2"));
  out.push_back(check("parseval", parseval, 1e-14, "relative gap between |x|^2 and sum a_k^2"));
  out.push_back(check("projection_tail", tail, 1.0 + 1e-12, "max tail norm / (pi N)^{-2 alpha} bound"));
  out.push_back(check("inverse_inequality", inverse, 1.0 + 1e-12, "max ratio to the inverse-inequality bound"));
  out.push_back(check("poincare", poincare, 1.0 + 1e-12, "max |x| / (|grad x| / sqrt 2)"));
  out.push_back(check("semigroup_smoothing", smoothing, 1.0 + 1e-12, "max ratio to e^{a(log a - 1)} t^{-a} |x|"));
  out.push_back(check("semigroup_difference", difference, 1.0 + 1e-12, "max ratio to t^b |x|"));
  const auto [lo, hi] = std::minmax_element(gn_max.begin(), gn_max.end());
  out.push_back(CheckResult{"gagliardo_nirenberg", *hi / *lo <= 2.0, *hi / *lo, 2.0,
                            "spread max/min of the fitted constant across M (" + n + "), C_max = " + std::to_string(*hi)});
  return out;
}

// ---------------------------------------------------------------------------
// Linear equation against its Gaussian closed forms

/// Terminal variance per mode and the strong-error tail sum, B switched off
/// and e_k = h_k. Both compared within `z` standard errors.
inline std::vector<CheckResult> linear_oracle_checks(const StudyConfig& base, std::size_t samples, std::size_t threads,
                                                     std::size_t variance_modes = 16, double z = 3.0) {
  StudyConfig cfg = base;
  cfg.nonlinear = false;
  cfg.covariance = CovarianceModel(base.covariance.rho(), base.covariance.scale(), base.covariance.truncation());
  cfg.samples_strong = samples;
  const SpectralField x0 = cfg.x0.mean(cfg.M_ref);

  // terminal variance per mode, centred at the exact mean
  const auto in = cfg.inputs(variance_modes, samples, threads);
  const NoiseSampler sampler(cfg.covariance.restricted(variance_modes), cfg.dt);
  const auto terminals = parallel_map(samples, threads, [&](std::size_t s) {
    EvolveOptions o;
    o.record_every = in.scheme.steps() + 1;
    o.ito_sum = false;
    return evolve(x0, in.scheme, sampler, cfg.seed, s, {}, o).terminal.X;
  });
  double worst_var = 0.0;
  std::size_t worst_k = 0;
  for (std::size_t k = 1; k <= variance_modes; ++k) {
    const double m = (k <= x0.dim() ? x0[k - 1] : 0.0) * std::exp(-laplace_eigenvalue(k) * cfg.T);
    std::vector<double> sq;
    for (const auto& X : terminals) sq.push_back((X[k - 1] - m) * (X[k - 1] - m));
    const auto r = summarize("var", sq);
    const double exact = ou_variance(cfg.covariance, k, cfg.T);
    const double zk = std::abs(r.estimate - exact) / r.std_error;
    if (zk > worst_var) {
      worst_var = zk;
      worst_k = k;
    }
  }

  // strong error tail sum, on the squared scale where the CLT applies
  const auto outs = coupled_samples(cfg, cfg.levels, samples, threads);
  double worst_tail = 0.0;
  std::size_t worst_M = 0;
  for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
    std::vector<double> v;
    for (const auto& o : outs) v.push_back(o.strong[l]);
    const auto r = summarize("tail", v);
    const double exact = linear_strong_error_sq(cfg.covariance, cfg.levels[l], cfg.M_ref, cfg.T);
    const double zl = std::abs(r.estimate - exact) / r.std_error;
    if (zl > worst_tail) {
      worst_tail = zl;
      worst_M = cfg.levels[l];
    }
  }
  const std::string n = std::to_string(samples) + " samples";
  return {
      CheckResult{"linear_terminal_variance", worst_var <= z, worst_var, z,
                  "max |MC - exact| / SE over modes 1.." + std::to_string(variance_modes) + " (worst k=" +
                      std::to_string(worst_k) + ", " + n + ")"},
      CheckResult{"linear_strong_tail_sum", worst_tail <= z, worst_tail, z,
                  "max |MC - exact| / SE of E|X_ref - X_M|^2 over levels (worst M=" + std::to_string(worst_M) + ", " +
                      n + ")"},
  };
}

// ---------------------------------------------------------------------------
// Tangent and second variation against finite differences on one path

struct FiniteDifferenceReport {
  double first_rel_error = 0.0;
  double second_rel_error = 0.0;
};

inline FiniteDifferenceReport finite_difference_errors(const StudyConfig& cfg, std::size_t samples) {
  const std::size_t M = cfg.fd_M;
  const SchemeConfig sc = cfg.scheme_config(M);
  const NoiseSampler sampler(cfg.covariance.restricted(M), cfg.dt);
  const SpectralField x = cfg.x0.mean(M);
  SpectralField h(M), g = SpectralField::basis(1, M);
  for (std::size_t k = 1; k <= M; ++k) h[k - 1] = 1.0 / static_cast<double>(k);
  h *= 1.0 / l2_norm(h);
  SpectralField h2 = SpectralField::basis(3, M);
  EvolveOptions o;
  o.record_every = sc.steps() + 1;
  o.ito_sum = false;
  auto run = [&](const SpectralField& start, std::size_t s, const Directions& d = {}) {
    return evolve(start, sc, sampler, cfg.seed, s, d, o).terminal;
  };
  auto shifted = [](SpectralField base, const SpectralField& dir, double eps) {
    SpectralField step = dir;
    step *= eps;
    base += step;
    return base;
  };
  FiniteDifferenceReport rep;
  for (std::size_t s = 0; s < samples; ++s) {
    const double e1 = cfg.fd_epsilon;
    const auto base = run(x, s, Directions{{h}, {}});
    SpectralField fd = run(shifted(x, h, e1), s).X;
    fd -= base.X;
    fd *= 1.0 / e1;
    SpectralField gap = fd;
    gap -= base.eta[0];
    rep.first_rel_error = std::max(rep.first_rel_error, l2_norm(gap) / l2_norm(base.eta[0]));

    const double e2 = cfg.fd_epsilon_second;
    const auto pair = run(x, s, Directions::pair(g, h2));
    SpectralField sd = run(shifted(shifted(x, g, e2), h2, e2), s).X;
    sd -= run(shifted(x, g, e2), s).X;
    sd -= run(shifted(x, h2, e2), s).X;
    sd += pair.X;
    sd *= 1.0 / (e2 * e2);
    SpectralField gap2 = sd;
    gap2 -= pair.zeta[0];
    rep.second_rel_error = std::max(rep.second_rel_error, l2_norm(gap2) / l2_norm(pair.zeta[0]));
  }
  return rep;
}

inline std::vector<CheckResult> tangent_checks(const StudyConfig& cfg, std::size_t samples = 5) {
  const auto r = finite_difference_errors(cfg, samples);
  const std::string where = "M=" + std::to_string(cfg.fd_M) + ", " + std::to_string(samples) + " paths";
  return {
      CheckResult{"tangent_finite_difference", r.first_rel_error <= 1e-3, r.first_rel_error, 1e-3,
                  "max |FD - eta^h| / |eta^h|, eps=" + std::to_string(cfg.fd_epsilon) + ", " + where},
      CheckResult{"second_variation_finite_difference", r.second_rel_error <= 5e-2, r.second_rel_error, 5e-2,
                  "max |second difference - zeta| / |zeta|, eps=" + std::to_string(cfg.fd_epsilon_second) + ", " + where},
  };
}

/// Du and D^2u estimators against central differences of weak_value with
/// common random numbers. Tolerance: sum of both CI half-widths + eps^2.
inline std::vector<CheckResult> crn_derivative_checks(const StudyConfig& cfg, std::size_t samples, std::size_t threads,
                                                      double eps = 1e-3) {
  const std::size_t M = cfg.fd_M;
  const auto in = cfg.inputs(M, samples, threads);
  const SpectralField x = cfg.x0.mean(M);
  const SpectralField g = SpectralField::basis(1, M);
  const SpectralField h = SpectralField::basis(2, M);
  const TestFunctional& f = cfg.functional;
  auto at = [&](double a, double b) {
    SpectralField y = x, dg = g, dh = h;
    dg *= a * eps;
    dh *= b * eps;
    y += dg;
    y += dh;
    return weak_value(f, y, in);
  };
  std::vector<CheckResult> out;

  const auto du = du_estimate(f, x, g, in);
  const auto up = at(1, 0), dn = at(-1, 0);
  const double fd = (up.estimate - dn.estimate) / (2.0 * eps);
  const double fd_hw = (up.half_width + dn.half_width) / (2.0 * eps);
  const double gap1 = std::abs(du.estimate - fd);
  const double tol1 = du.half_width + fd_hw + eps * eps;
  out.push_back(CheckResult{"du_vs_crn_difference", gap1 <= tol1, gap1, tol1,
                            "Du.h_1 = " + std::to_string(du.estimate) + " vs central difference " + std::to_string(fd)});

  const auto d2 = d2u_estimate(f, x, g, h, in);
  const auto pp = at(1, 1), pm = at(1, -1), mp = at(-1, 1), mm = at(-1, -1);
  const double fd2 = (pp.estimate - pm.estimate - mp.estimate + mm.estimate) / (4.0 * eps * eps);
  const double fd2_hw = (pp.half_width + pm.half_width + mp.half_width + mm.half_width) / (4.0 * eps * eps);
  const double gap2 = std::abs(d2.estimate - fd2);
  const double tol2 = d2.half_width + fd2_hw + eps * eps;
  out.push_back(CheckResult{"d2u_vs_crn_difference", gap2 <= tol2, gap2, tol2,
                            "D2u.(h_1,h_2) = " + std::to_string(d2.estimate) + " vs central difference " +
                                std::to_string(fd2)});
  return out;
}

// ---------------------------------------------------------------------------
// Runs at several step sizes on one Brownian path

struct DyadicRun {
  double dt = 0.0;
  SpectralField X;
  double dissipation = 0.0;  // left-endpoint int |grad X|^2
  double ito_sum = 0.0;      // sum <X_n, dW_n>
};

/// Evolves dt = T / 2^j for j in [j_min, j_max] on one path. Increments at
/// the coarser sizes are assembled from the finest ones, which is exact for
/// the joint law of (dW, stochastic convolution).
inline std::vector<DyadicRun> dyadic_time_runs(const StudyConfig& cfg, std::size_t M, std::size_t j_min,
                                               std::size_t j_max, std::uint64_t sample) {
  const std::size_t fine_steps = std::size_t{1} << j_max;
  const double dt_f = cfg.T / static_cast<double>(fine_steps);
  const NoiseSampler sampler(cfg.covariance.restricted(M), dt_f);
  const std::size_t nlev = j_max - j_min + 1;
  const SpectralField x0 = cfg.x0.mean(M);
  std::vector<Integrator> ints;
  std::vector<SolverState> states;
  std::vector<DyadicRun> runs(nlev);
  std::vector<std::vector<double>> acc_b(nlev, std::vector<double>(M)), acc_z(nlev, std::vector<double>(M));
  std::vector<std::size_t> ratio(nlev);
  for (std::size_t l = 0; l < nlev; ++l) {
    SchemeConfig sc = cfg.scheme_config(M);
    ratio[l] = std::size_t{1} << (j_max - (j_min + l));
    sc.dt = dt_f * static_cast<double>(ratio[l]);
    runs[l].dt = sc.dt;
    ints.emplace_back(sc);
    states.push_back(SolverState::initial(x0, M));
  }
  std::vector<double> fdecay(M);
  for (std::size_t k = 0; k < M; ++k) fdecay[k] = std::exp(-laplace_eigenvalue(k + 1) * dt_f);
  std::vector<std::vector<double>> normals;
  std::vector<double> b(M), z(M);
  for (std::size_t n = 0; n < fine_steps; ++n) {
    sampler.draw_normals(NoiseStream{cfg.seed, sample, n}, normals);
    sampler.assemble(normals, b, z);
    for (std::size_t l = 0; l < nlev; ++l) {
      for (std::size_t k = 0; k < M; ++k) {
        acc_b[l][k] += b[k];
        acc_z[l][k] = fdecay[k] * acc_z[l][k] + z[k];
      }
      if ((n + 1) % ratio[l] != 0) continue;
      const auto X = states[l].X.coeffs();
      runs[l].ito_sum += detail::dot(X, acc_b[l]);
      runs[l].dissipation += runs[l].dt * detail::squared_gradient_norm(X);
      ints[l].advance(states[l], acc_b[l], acc_z[l]);
      std::fill(acc_b[l].begin(), acc_b[l].end(), 0.0);
      std::fill(acc_z[l].begin(), acc_z[l].end(), 0.0);
    }
  }
  for (std::size_t l = 0; l < nlev; ++l) runs[l].X = std::move(states[l].X);
  return runs;
}

/// RMS |X_dt(T) - X_{dt/2}(T)| for dt = T / 2^j, j in [j_min, j_max).
inline std::vector<double> time_self_differences(const StudyConfig& cfg, std::size_t M, std::size_t j_min,
                                                 std::size_t j_max, std::size_t samples, std::size_t threads) {
  const auto per_sample = parallel_map(samples, threads, [&](std::size_t s) {
    const auto runs = dyadic_time_runs(cfg, M, j_min, j_max, s);
    std::vector<double> d(runs.size() - 1);
    for (std::size_t l = 0; l + 1 < runs.size(); ++l) {
      SpectralField diff = runs[l].X;
      diff -= runs[l + 1].X;
      d[l] = inner(diff, diff);
    }
    return d;
  });
  std::vector<double> rms(j_max - j_min, 0.0);
  for (const auto& d : per_sample) {
    for (std::size_t l = 0; l < d.size(); ++l) rms[l] += d[l];
  }
  for (auto& r : rms) r = std::sqrt(r / static_cast<double>(samples));
  return rms;
}

inline CheckResult time_self_convergence_check(const StudyConfig& cfg, std::size_t samples = 20, std::size_t M = 16,
                                               std::size_t threads = 1) {
  const std::size_t j_min = 8, j_max = 12;
  const auto rms = time_self_differences(cfg, M, j_min, j_max, samples, threads);
  std::vector<double> x, y;
  for (std::size_t l = 0; l < rms.size(); ++l) {
    x.push_back(std::log(cfg.T / std::ldexp(1.0, static_cast<int>(j_min + l))));
    y.push_back(std::log(rms[l]));
  }
  const double order = least_squares(x, y).slope;
  return CheckResult{"time_self_convergence", order >= 0.9, order, 0.9,
                     "fitted order of |X_dt - X_{dt/2}| over dt = T/2^8..T/2^11 (M=" + std::to_string(M) + ")"};
}

/// Energy residual RMS over samples at dt = T / 2^j for j in [j_min, j_max],
/// all on one path per sample. The residual is
/// |X_N|^2 + 2 int |grad X|^2 - |P_M x0|^2 - 2 sum <X_n, dW_n> - T Tr(P_M Q P_M).
inline std::vector<double> energy_residual_rms(const StudyConfig& cfg, std::size_t M, std::size_t j_min,
                                               std::size_t j_max, std::size_t samples, std::size_t threads) {
  const double tr = projected_trace(cfg.covariance, M);
  const SpectralField x0 = cfg.x0.mean(M);
  const double e0 = inner(x0, x0);
  const auto per_sample = parallel_map(samples, threads, [&](std::size_t s) {
    const auto runs = dyadic_time_runs(cfg, M, j_min, j_max, s);
    std::vector<double> r;
    for (const auto& run : runs) {
      const double v = inner(run.X, run.X) + 2.0 * run.dissipation - e0 - 2.0 * run.ito_sum - cfg.T * tr;
      r.push_back(v * v);
    }
    return r;
  });
  std::vector<double> rms(j_max - j_min + 1, 0.0);
  for (const auto& r : per_sample) {
    for (std::size_t l = 0; l < r.size(); ++l) rms[l] += r[l];
  }
  for (auto& v : rms) v = std::sqrt(v / static_cast<double>(samples));
  return rms;
}

/// Residual RMS at the configured dt against dt/2 on the same paths.
inline CheckResult energy_identity_check(const StudyConfig& cfg, std::size_t samples = 100, std::size_t M = 32,
                                         std::size_t threads = 1) {
  const double steps = cfg.T / cfg.dt;
  const auto j = static_cast<std::size_t>(std::llround(std::log2(steps)));
  if (std::abs(std::ldexp(1.0, static_cast<int>(j)) - steps) > 1e-9 * steps) {
    throw std::invalid_argument("energy identity check: T/dt must be a power of two");
  }
  const auto rms = energy_residual_rms(cfg, M, j, j + 1, samples, threads);
  const double ratio = rms[0] / rms[1];
  return CheckResult{"energy_identity_dt_halving", ratio >= 1.3, ratio, 1.3,
                     "residual RMS " + std::to_string(rms[0]) + " at dt, " + std::to_string(rms[1]) +
                         " at dt/2 on the same paths (M=" + std::to_string(M) + ", " + std::to_string(samples) +
                         " samples)"};
}

// ---------------------------------------------------------------------------
// Noise coupling

/// The increment fed to level M equals the projection of the finest one.
inline CheckResult coupling_check(const StudyConfig& cfg, std::size_t steps = 64) {
  const NoiseSampler sampler(cfg.covariance.restricted(cfg.M_ref), cfg.dt);
  bool exact = true;
  for (std::size_t n = 0; n < steps; ++n) {
    const NoiseStream st{cfg.seed, n % 7, n};
    const auto fine = sampler.sample(st, cfg.M_ref);
    for (std::size_t M : cfg.levels) {
      const auto coarse = sampler.sample(st, M);
      exact = exact && coarse.brownian == truncate(fine.brownian, M) && coarse.convolved == truncate(fine.convolved, M);
    }
    const auto inc = sample_increment(cfg.covariance, cfg.dt, st, cfg.M_ref);
    for (std::size_t M : cfg.levels) {
      exact = exact && project(inc, M) == embed(sample_increment(cfg.covariance, cfg.dt, st, M), cfg.M_ref);
    }
  }
  return CheckResult{"noise_coupling", exact, exact ? 0.0 : 1.0, 0.0,
                     "level increments are exact projections of the reference increment (" + std::to_string(steps) +
                         " steps)"};
}

inline CheckResult moment_uniformity_check(const std::vector<LevelMoments>& levels, const std::string& stat,
                                           double z = 3.0) {
  const double worst = max_level_discrepancy(levels, stat);
  return CheckResult{"moment_uniformity_" + stat, worst < z, worst, z,
                     "max |difference| / combined SE between consecutive M"};
}

}  // namespace sburgers
