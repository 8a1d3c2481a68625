// Batch driver for the stochastic Burgers Galerkin studies.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sburgers/checks.hpp"
#include "sburgers/experiments.hpp"
#include "sburgers/io.hpp"
#include "sburgers/observables.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sburgers;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitChecksFailed = 3;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string format = "both";
};

// "default" (or no --config) selects the built-in configuration.
StudyConfig resolve_config(const Common& c) {
  StudyConfig cfg;
  if (!c.config.empty() && !(c.config == "default" && !fs::exists(c.config))) cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void print_checks(const std::vector<CheckResult>& checks) {
  for (const auto& r : checks) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << format_double(r.value)
              << " threshold=" << format_double(r.threshold) << "\n";
  }
}

void print_rate(const char* label, const RateEstimate& r) {
  std::cout << label << ": ";
  if (r.has_slope()) {
    std::cout << "slope " << format_double(r.slope) << " [" << format_double(r.slope_ci_lo) << ", "
              << format_double(r.slope_ci_hi) << "]";
  } else {
    std::cout << "no slope";
  }
  if (!r.note.empty()) std::cout << " (" << r.note << ")";
  std::cout << "\n";
  for (const auto& p : r.points) {
    std::cout << "  M=" << p.M << " estimate=" << format_double(p.estimate) << " ci=[" << format_double(p.ci_lo) << ", "
              << format_double(p.ci_hi) << "]" << (p.resolved ? "" : " unresolved") << "\n";
  }
}

int finish(ResultBundle& b, const Common& c) {
  const auto files = emit(b, c.out, parse_format(c.format));
  for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
  return 0;
}

int run_simulate(const Common& c, std::uint64_t sample, std::size_t M_opt, std::size_t record_every) {
  const StudyConfig cfg = resolve_config(c);
  cfg.validate();
  const std::size_t M = M_opt ? M_opt : cfg.M_ref;
  const auto in = cfg.inputs(M, 1, 1);
  EvolveOptions opt;
  opt.record_every = record_every;
  const auto rec = evolve(cfg.x0.draw(cfg.seed, sample, cfg.M_ref), in.scheme, detail::sampler_for(in), cfg.seed,
                          sample, {}, opt);
  if (rec.failed) throw std::runtime_error("trajectory failed: " + rec.diagnostic);

  ResultBundle b;
  b.kind = "simulate";
  b.manifest = make_manifest(cfg, 1);
  b.manifest.counts["simulate"] = {1, 0};
  b.series["t"] = rec.times;
  b.series["l2_norm"] = rec.l2_norm;
  b.series["gradient_norm"] = rec.gradient_norm;
  b.series["dissipation"] = rec.dissipation;
  const auto coeffs = rec.terminal.X.coeffs();
  b.series["terminal"] = std::vector<double>(coeffs.begin(), coeffs.end());
  std::cout << "sample " << sample << " at M=" << M << ": |X(T)| = " << format_double(rec.l2_norm.back())
            << ", sup_t |X| = " << format_double(rec.sup_l2) << "\n";
  return finish(b, c);
}

int run_rate(const Common& c, bool strong) {
  const StudyConfig cfg = resolve_config(c);
  ResultBundle b;
  b.manifest = make_manifest(cfg, c.threads);
  if (strong) {
    b.kind = "strong-rate";
    b.strong = strong_error_study(cfg, c.threads);
    b.manifest.counts["strong"] = {b.strong->samples, b.strong->failures};
    print_rate("strong", *b.strong);
  } else {
    b.kind = "weak-rate";
    b.weak = weak_error_study(cfg, c.threads);
    b.manifest.counts["weak"] = {b.weak->samples, b.weak->failures};
    print_rate("weak", *b.weak);
  }
  return finish(b, c);
}

int run_moments(const Common& c) {
  const StudyConfig cfg = resolve_config(c);
  cfg.validate();
  ResultBundle b;
  b.kind = "moments";
  b.manifest = make_manifest(cfg, c.threads);
  const std::size_t top = cfg.moment_levels.back();
  b.moments = moment_statistics(cfg.x0.mean(top), cfg.moment_levels, cfg.inputs(top, cfg.moment_samples, c.threads),
                                cfg.moments);
  std::size_t failures = 0;
  for (const auto& lm : b.moments) {
    for (const auto& r : lm.reports) failures = std::max(failures, r.failures);
  }
  b.manifest.counts["moments"] = {cfg.moment_samples, failures};
  b.checks.push_back(moment_uniformity_check(b.moments, power_stat_name(4.0)));
  b.checks.push_back(moment_uniformity_check(b.moments, "exp_moment"));
  for (const auto& lm : b.moments) {
    std::cout << "M=" << lm.M;
    for (const auto& r : lm.reports) std::cout << " " << r.name << "=" << format_double(r.estimate);
    std::cout << "\n";
  }
  print_checks(b.checks);
  return finish(b, c);
}

int run_derivative_check(const Common& c, std::size_t crn_samples) {
  const StudyConfig cfg = resolve_config(c);
  cfg.validate();
  ResultBundle b;
  b.kind = "derivative-check";
  b.manifest = make_manifest(cfg, c.threads);
  b.checks = tangent_checks(cfg);
  for (auto& r : crn_derivative_checks(cfg, crn_samples, c.threads)) b.checks.push_back(std::move(r));
  b.scan = derivative_bound_scan(cfg.functional, cfg.x0.mean(cfg.scan_M), cfg.scan,
                                 cfg.inputs(cfg.scan_M, cfg.scan_samples, c.threads));
  b.manifest.counts["crn"] = {crn_samples, 0};
  b.manifest.counts["scan"] = {b.scan->samples, b.scan->failures};
  for (const auto& t : b.scan->trends) {
    std::cout << (t.second_order ? "D2u" : "Du") << " alpha=" << format_double(t.alpha);
    if (t.second_order) std::cout << " beta=" << format_double(t.beta);
    std::cout << " spearman(1/t)=" << format_double(t.versus_inverse_t.rho)
              << " p=" << format_double(t.versus_inverse_t.p_value) << " spearman(k)=" << format_double(t.versus_k.rho)
              << " p=" << format_double(t.versus_k.p_value) << " max_ratio=" << format_double(t.max_ratio) << "\n";
  }
  b.checks.push_back(CheckResult{"bound_scan_no_increasing_trend", b.scan->bounded, b.scan->bounded ? 0.0 : 1.0, 0.0,
                                 "first-order ratios, one-sided Spearman at the configured level"});
  print_checks(b.checks);
  const int rc = finish(b, c);
  return b.all_checks_passed() ? rc : kExitChecksFailed;
}

int run_invariants(const Common& c) {
  const StudyConfig cfg = resolve_config(c);
  cfg.validate();
  ResultBundle b;
  b.kind = "invariants";
  b.manifest = make_manifest(cfg, c.threads);
  b.checks = algebraic_checks();
  b.checks.push_back(coupling_check(cfg));
  for (auto& r : tangent_checks(cfg)) b.checks.push_back(std::move(r));
  b.checks.push_back(time_self_convergence_check(cfg, 20, 16, c.threads));
  b.checks.push_back(energy_identity_check(cfg, 100, 32, c.threads));
  b.manifest.counts["energy"] = {100, 0};
  print_checks(b.checks);
  const int rc = finish(b, c);
  return b.all_checks_passed() ? rc : kExitChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin solver and Monte Carlo studies for the stochastic Burgers equation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "Config file, results.json to rerun, or 'default'");
  app.add_option("--out", common.out, "Output directory")->envname("SBURGERS_OUT_DIR")->default_val("results");
  app.add_option("--seed", common.seed, "Override the master seed");
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)")->default_val(1);
  app.add_option("--format", common.format, "Output format")
      ->check(CLI::IsMember({"csv", "json", "both"}))
      ->default_val("both");

  std::uint64_t sample = 0;
  std::size_t sim_M = 0, record_every = 64, crn_samples = 1000;
  auto* simulate = app.add_subcommand("simulate", "Run one trajectory and dump its record");
  simulate->add_option("--sample", sample, "Sample index")->default_val(0);
  simulate->add_option("--M", sim_M, "Galerkin dimension (default M_ref)");
  simulate->add_option("--record-every", record_every, "Steps between recorded points")->default_val(64);
  auto* strong = app.add_subcommand("strong-rate", "Strong error study over the Galerkin levels");
  auto* weak = app.add_subcommand("weak-rate", "Weak error study over the Galerkin levels");
  auto* deriv = app.add_subcommand("derivative-check", "Tangent consistency and derivative bound scan");
  deriv->add_option("--crn-samples", crn_samples, "Samples for the CRN derivative comparison")->default_val(1000);
  auto* inv = app.add_subcommand("invariants", "Property battery; nonzero exit on any failure");
  auto* moments = app.add_subcommand("moments", "Moment statistics across Galerkin levels");
  for (auto* s : {simulate, strong, weak, deriv, inv, moments}) s->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return run_simulate(common, sample, sim_M, record_every);
    if (*strong) return run_rate(common, true);
    if (*weak) return run_rate(common, false);
    if (*deriv) return run_derivative_check(common, crn_samples);
    if (*inv) return run_invariants(common);
    if (*moments) return run_moments(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
