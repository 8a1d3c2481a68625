#pragma once

// Study configuration files, run manifests and result bundles.
//
// Config files are `key = value` lines; `#` starts a comment. Lists are
// comma separated. Every key is optional except `seed`.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "sburgers/checks.hpp"
#include "sburgers/experiments.hpp"
#include "sburgers/observables.hpp"

#ifndef SBURGERS_VERSION
#define SBURGERS_VERSION "0.0.0"
#endif

namespace sburgers {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& key, const std::string& message)
      : std::runtime_error(where + ": key '" + key + "': " + message), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// ---------------------------------------------------------------------------
// Number formatting: shortest round-trip, locale independent

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double parse_double_strict(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("expected a finite real number, got '" + s + "'");
  }
  return v;
}

inline std::uint64_t parse_uint_strict(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a nonnegative integer, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool_strict(const std::string& s) {
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F f) {
  std::vector<T> out;
  if (trim(s).empty()) return out;
  for (const auto& item : split(s, ',')) out.push_back(f(item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config parsing

/// Parses config text. `source` names the file in error messages.
inline StudyConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
  StudyConfig cfg;
  std::map<std::string, std::pair<std::string, std::size_t>> kv;  // key -> (value, line)
  {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = source + ":" + std::to_string(lineno);
      if (eq == std::string::npos) throw ConfigError(where, line, "expected 'key = value'");
      const std::string key = detail::trim(line.substr(0, eq));
      if (kv.count(key)) throw ConfigError(where, key, "duplicate key");
      kv[key] = {detail::trim(line.substr(eq + 1)), lineno};
    }
  }

  std::set<std::string> used;
  auto where = [&](const std::string& key) {
    auto it = kv.find(key);
    return source + ":" + (it == kv.end() ? std::string("?") : std::to_string(it->second.second));
  };
  // Runs f(value) for a present key, rewrapping parse errors with location.
  auto with = [&](const std::string& key, auto f) {
    auto it = kv.find(key);
    if (it == kv.end()) return false;
    used.insert(key);
    try {
      f(it->second.first);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where(key), key, e.what());
    }
    return true;
  };
  auto real = [](const std::string& s) { return detail::parse_double_strict(s); };
  auto uint = [](const std::string& s) { return detail::parse_uint_strict(s); };
  auto size = [](const std::string& s) { return static_cast<std::size_t>(detail::parse_uint_strict(s)); };

  if (!with("seed", [&](const std::string& v) { cfg.seed = uint(v); })) {
    throw ConfigError(source, "seed", "missing; seeds are mandatory so that every run is reproducible");
  }
  with("T", [&](const std::string& v) { cfg.T = real(v); });
  bool have_dt = with("dt", [&](const std::string& v) { cfg.dt = real(v); });
  with("steps", [&](const std::string& v) {
    if (have_dt) throw std::invalid_argument("give either dt or steps, not both");
    const auto n = size(v);
    if (n == 0) throw std::invalid_argument("must be positive");
    cfg.dt = cfg.T / static_cast<double>(n);
  });
  if (!have_dt && !kv.count("steps")) cfg.dt = cfg.T / 16384.0;
  with("levels", [&](const std::string& v) { cfg.levels = detail::parse_list<std::size_t>(v, size); });
  with("M_ref", [&](const std::string& v) { cfg.M_ref = size(v); });
  with("samples_strong", [&](const std::string& v) { cfg.samples_strong = size(v); });
  with("samples_weak", [&](const std::string& v) { cfg.samples_weak = size(v); });

  double rho = 2.0, c = 1.0;
  std::size_t K = cfg.M_ref;
  std::vector<GivensRotation> rotations;
  with("rho", [&](const std::string& v) {
    rho = real(v);
    if (!(rho > 1.0)) {
      throw std::invalid_argument("must exceed 1: q_k = c k^-rho needs sum_k q_k < infinity (trace-class Q)");
    }
  });
  with("c", [&](const std::string& v) {
    c = real(v);
    if (c < 0.0) throw std::invalid_argument("must be nonnegative");
  });
  with("K", [&](const std::string& v) { K = size(v); });
  with("rotations", [&](const std::string& v) {
    for (const auto& item : detail::split(v, ';')) {
      if (item.empty()) continue;
      const auto parts = detail::split(item, ':');
      if (parts.size() != 3) throw std::invalid_argument("rotations are 'i:j:angle' separated by ';'");
      rotations.push_back({size(parts[0]), size(parts[1]), real(parts[2])});
    }
  });
  try {
    cfg.covariance = CovarianceModel(rho, c, K, rotations);
  } catch (const std::exception& e) {
    const std::string key = kv.count("rotations") ? "rotations" : "K";
    throw ConfigError(where(key), key, e.what());
  }

  with("x0_preset", [&](const std::string& v) {
    if (v == "default") {
      cfg.x0 = InitialCondition{};
    } else if (v == "low-regularity") {
      cfg.x0 = InitialCondition::low_regularity(cfg.M_ref);
    } else {
      throw std::invalid_argument("unknown preset '" + v + "' (default | low-regularity)");
    }
  });
  with("x0", [&](const std::string& v) {
    if (kv.count("x0_preset")) throw std::invalid_argument("give either x0 or x0_preset, not both");
    cfg.x0.coeffs = detail::parse_list<double>(v, real);
    if (cfg.x0.coeffs.empty()) throw std::invalid_argument("needs at least one coefficient");
  });
  with("x0_random_scale", [&](const std::string& v) { cfg.x0.random_scale = real(v); });
  with("x0_random_decay", [&](const std::string& v) { cfg.x0.random_decay = real(v); });

  std::string fkind = "cosine";
  std::vector<double> fdir{1.0};
  double fscale = 1.0;
  with("functional", [&](const std::string& v) { fkind = v; (void)parse_functional_kind(v); });
  with("functional_direction", [&](const std::string& v) { fdir = detail::parse_list<double>(v, real); });
  with("functional_scale", [&](const std::string& v) { fscale = real(v); });
  try {
    cfg.functional = parse_functional_kind(fkind) == FunctionalKind::cosine ? TestFunctional::cosine(SpectralField(fdir))
                                                                            : TestFunctional::gaussian_exp(fscale);
  } catch (const std::exception& e) {
    throw ConfigError(where("functional"), "functional", e.what());
  }

  with("strong_p", [&](const std::string& v) { cfg.strong_p = real(v); });
  with("scheme", [&](const std::string& v) { cfg.scheme = parse_scheme(v); });
  with("quadrature", [&](const std::string& v) { cfg.quadrature = parse_quadrature(v); });
  with("nonlinear", [&](const std::string& v) { cfg.nonlinear = detail::parse_bool_strict(v); });
  with("bootstrap", [&](const std::string& v) { cfg.bootstrap = size(v); });

  with("moment_samples", [&](const std::string& v) { cfg.moment_samples = size(v); });
  with("moment_levels", [&](const std::string& v) { cfg.moment_levels = detail::parse_list<std::size_t>(v, size); });
  with("moment_powers", [&](const std::string& v) { cfg.moments.powers = detail::parse_list<double>(v, real); });
  with("moment_beta", [&](const std::string& v) { cfg.moments.beta = real(v); });
  with("grid_power", [&](const std::string& v) { cfg.moments.grid_power = real(v); });
  with("holder_lambda", [&](const std::string& v) { cfg.moments.holder_lambda = real(v); });
  with("holder_gamma", [&](const std::string& v) { cfg.moments.holder_gamma = real(v); });
  with("record_every", [&](const std::string& v) {
    cfg.moments.record_every = size(v);
    if (cfg.moments.record_every == 0) throw std::invalid_argument("must be positive");
  });

  with("scan_samples", [&](const std::string& v) { cfg.scan_samples = size(v); });
  with("scan_M", [&](const std::string& v) { cfg.scan_M = size(v); });
  with("scan_modes", [&](const std::string& v) { cfg.scan.modes = detail::parse_list<std::size_t>(v, size); });
  with("scan_time_fractions", [&](const std::string& v) { cfg.scan.time_fractions = detail::parse_list<double>(v, real); });
  with("scan_alphas", [&](const std::string& v) { cfg.scan.alphas = detail::parse_list<double>(v, real); });
  with("scan_second_order", [&](const std::string& v) {
    cfg.scan.second_order.clear();
    for (const auto& item : detail::split(v, ';')) {
      if (item.empty()) continue;
      const auto parts = detail::split(item, ':');
      if (parts.size() != 2) throw std::invalid_argument("pairs are 'alpha:beta' separated by ';'");
      cfg.scan.second_order.emplace_back(real(parts[0]), real(parts[1]));
    }
  });
  with("scan_epsilon", [&](const std::string& v) { cfg.scan.epsilon = real(v); });
  with("scan_delta", [&](const std::string& v) { cfg.scan.delta = real(v); });
  with("fd_epsilon", [&](const std::string& v) { cfg.fd_epsilon = real(v); });
  with("fd_epsilon_second", [&](const std::string& v) { cfg.fd_epsilon_second = real(v); });
  with("fd_M", [&](const std::string& v) { cfg.fd_M = size(v); });

  for (const auto& [key, val] : kv) {
    if (!used.count(key)) throw ConfigError(source + ":" + std::to_string(val.second), key, "unknown key");
  }

  // Cross-field invariants, each reported against the key most likely at fault.
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    std::string k = colon == std::string::npos ? "dt" : msg.substr(0, colon);
    if (k.find(' ') != std::string::npos) k = "dt";
    throw ConfigError(where(k), k, colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  if (cfg.samples_strong == 0) throw ConfigError(where("samples_strong"), "samples_strong", "must be positive");
  if (cfg.samples_weak == 0) throw ConfigError(where("samples_weak"), "samples_weak", "must be positive");
  if (cfg.moment_samples == 0) throw ConfigError(where("moment_samples"), "moment_samples", "must be positive");
  if (cfg.scan_samples == 0) throw ConfigError(where("scan_samples"), "scan_samples", "must be positive");
  if (cfg.moment_levels.empty()) throw ConfigError(where("moment_levels"), "moment_levels", "must not be empty");
  try {
    cfg.scan.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where("scan_alphas"), "scan_*", e.what());
  }
  for (std::size_t k : cfg.scan.modes) {
    if (k == 0 || k > cfg.scan_M) throw ConfigError(where("scan_modes"), "scan_modes", "modes must lie in 1..scan_M");
  }
  return cfg;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Canonical text: every key, fixed order, shortest round-trip numbers.
inline std::string to_config_text(const StudyConfig& c) {
  std::ostringstream o;
  auto line = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
  line("seed", std::to_string(c.seed));
  line("T", format_double(c.T));
  line("dt", format_double(c.dt));
  line("levels", detail::join(c.levels));
  line("M_ref", std::to_string(c.M_ref));
  line("samples_strong", std::to_string(c.samples_strong));
  line("samples_weak", std::to_string(c.samples_weak));
  line("rho", format_double(c.covariance.rho()));
  line("c", format_double(c.covariance.scale()));
  line("K", std::to_string(c.covariance.truncation()));
  std::string rot;
  for (const auto& r : c.covariance.rotations()) {
    if (!rot.empty()) rot += "; ";
    rot += std::to_string(r.i) + ":" + std::to_string(r.j) + ":" + format_double(r.angle);
  }
  line("rotations", rot);
  line("x0", detail::join(c.x0.coeffs));
  line("x0_random_scale", format_double(c.x0.random_scale));
  line("x0_random_decay", format_double(c.x0.random_decay));
  line("functional", to_string(c.functional.kind()));
  line("functional_direction", detail::join(std::vector<double>(c.functional.direction().coeffs().begin(),
                                                                 c.functional.direction().coeffs().end())));
  line("functional_scale", format_double(c.functional.length_scale()));
  line("strong_p", format_double(c.strong_p));
  line("scheme", to_string(c.scheme));
  line("quadrature", to_string(c.quadrature));
  line("nonlinear", c.nonlinear ? "true" : "false");
  line("bootstrap", std::to_string(c.bootstrap));
  line("moment_samples", std::to_string(c.moment_samples));
  line("moment_levels", detail::join(c.moment_levels));
  line("moment_powers", detail::join(c.moments.powers));
  line("moment_beta", format_double(c.moments.beta));
  line("grid_power", format_double(c.moments.grid_power));
  line("holder_lambda", format_double(c.moments.holder_lambda));
  line("holder_gamma", format_double(c.moments.holder_gamma));
  line("record_every", std::to_string(c.moments.record_every));
  line("scan_samples", std::to_string(c.scan_samples));
  line("scan_M", std::to_string(c.scan_M));
  line("scan_modes", detail::join(c.scan.modes));
  line("scan_time_fractions", detail::join(c.scan.time_fractions));
  line("scan_alphas", detail::join(c.scan.alphas));
  std::string so;
  for (auto [a, b] : c.scan.second_order) {
    if (!so.empty()) so += "; ";
    so += format_double(a) + ":" + format_double(b);
  }
  line("scan_second_order", so);
  line("scan_epsilon", format_double(c.scan.epsilon));
  line("scan_delta", format_double(c.scan.delta));
  line("fd_epsilon", format_double(c.fd_epsilon));
  line("fd_epsilon_second", format_double(c.fd_epsilon_second));
  line("fd_M", std::to_string(c.fd_M));
  return o.str();
}

/// FNV-1a, 64 bit, as 16 hex digits.
inline std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Result bundle

struct SampleCount {
  std::size_t samples = 0;
  std::size_t failures = 0;
  friend bool operator==(const SampleCount&, const SampleCount&) = default;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version = SBURGERS_VERSION;
  std::string timestamp;
  std::size_t threads = 1;
  /// Canonical config; enough to rerun the study.
  std::string config;
  std::map<std::string, SampleCount> counts;
  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

struct ResultBundle {
  std::string kind;
  RunManifest manifest;
  std::optional<RateEstimate> strong;
  std::optional<RateEstimate> weak;
  std::vector<LevelMoments> moments;
  std::optional<BoundScanReport> scan;
  std::vector<CheckResult> checks;
  std::map<std::string, std::vector<double>> series;
  friend bool operator==(const ResultBundle&, const ResultBundle&) = default;

  bool all_checks_passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

/// Equality ignoring wall-clock time and worker count.
inline bool same_results(ResultBundle a, ResultBundle b) {
  a.manifest.timestamp = b.manifest.timestamp = "";
  a.manifest.threads = b.manifest.threads = 0;
  return a == b;
}

/// Wall-clock UTC, or SOURCE_DATE_EPOCH when set so reruns can be byte-identical.
inline std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    try {
      now = static_cast<std::time_t>(detail::parse_uint_strict(epoch));
    } catch (const std::exception&) {
    }
  }
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline RunManifest make_manifest(const StudyConfig& cfg, std::size_t threads) {
  RunManifest m;
  m.config = to_config_text(cfg);
  m.config_hash = config_hash(m.config);
  m.seed = cfg.seed;
  m.timestamp = utc_timestamp();
  m.threads = threads;
  return m;
}

// JSON. Non-finite doubles are written as strings so they survive a round trip.
namespace detail {

inline nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline double get_num(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("bad number '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const MomentReport& r) {
  j = {{"name", r.name},           {"samples", r.samples},
       {"failures", r.failures},   {"estimate", detail::num(r.estimate)},
       {"half_width", detail::num(r.half_width)}, {"std_error", detail::num(r.std_error)},
       {"confidence", r.confidence}, {"heavy_tail", r.heavy_tail}};
}
inline void from_json(const nlohmann::json& j, MomentReport& r) {
  r.name = j.at("name").get<std::string>();
  r.samples = j.at("samples").get<std::size_t>();
  r.failures = j.at("failures").get<std::size_t>();
  r.estimate = detail::get_num(j.at("estimate"));
  r.half_width = detail::get_num(j.at("half_width"));
  r.std_error = detail::get_num(j.at("std_error"));
  r.confidence = j.at("confidence").get<double>();
  r.heavy_tail = j.at("heavy_tail").get<bool>();
}

inline void to_json(nlohmann::json& j, const LevelPoint& p) {
  j = {{"M", p.M}, {"estimate", detail::num(p.estimate)}, {"ci_lo", detail::num(p.ci_lo)},
       {"ci_hi", detail::num(p.ci_hi)}, {"half_width", detail::num(p.half_width)}, {"resolved", p.resolved}};
}
inline void from_json(const nlohmann::json& j, LevelPoint& p) {
  p.M = j.at("M").get<std::size_t>();
  p.estimate = detail::get_num(j.at("estimate"));
  p.ci_lo = detail::get_num(j.at("ci_lo"));
  p.ci_hi = detail::get_num(j.at("ci_hi"));
  p.half_width = detail::get_num(j.at("half_width"));
  p.resolved = j.at("resolved").get<bool>();
}

inline void to_json(nlohmann::json& j, const RateEstimate& r) {
  j = {{"slope", detail::num(r.slope)},
       {"intercept", detail::num(r.intercept)},
       {"residual", detail::num(r.residual)},
       {"slope_ci_lo", detail::num(r.slope_ci_lo)},
       {"slope_ci_hi", detail::num(r.slope_ci_hi)},
       {"points", r.points},
       {"fitted", r.fitted},
       {"sufficient", r.sufficient},
       {"note", r.note},
       {"samples", r.samples},
       {"failures", r.failures}};
}
inline void from_json(const nlohmann::json& j, RateEstimate& r) {
  r.slope = detail::get_num(j.at("slope"));
  r.intercept = detail::get_num(j.at("intercept"));
  r.residual = detail::get_num(j.at("residual"));
  r.slope_ci_lo = detail::get_num(j.at("slope_ci_lo"));
  r.slope_ci_hi = detail::get_num(j.at("slope_ci_hi"));
  r.points = j.at("points").get<std::vector<LevelPoint>>();
  r.fitted = j.at("fitted").get<std::vector<std::size_t>>();
  r.sufficient = j.at("sufficient").get<bool>();
  r.note = j.at("note").get<std::string>();
  r.samples = j.at("samples").get<std::size_t>();
  r.failures = j.at("failures").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const LevelMoments& m) { j = {{"M", m.M}, {"reports", m.reports}}; }
inline void from_json(const nlohmann::json& j, LevelMoments& m) {
  m.M = j.at("M").get<std::size_t>();
  m.reports = j.at("reports").get<std::vector<MomentReport>>();
}

inline void to_json(nlohmann::json& j, const TrendTest& t) {
  j = {{"rho", detail::num(t.rho)}, {"p_value", detail::num(t.p_value)}, {"increasing", t.increasing}};
}
inline void from_json(const nlohmann::json& j, TrendTest& t) {
  t.rho = detail::get_num(j.at("rho"));
  t.p_value = detail::get_num(j.at("p_value"));
  t.increasing = j.at("increasing").get<bool>();
}

inline void to_json(nlohmann::json& j, const ScanRow& r) {
  j = {{"alpha", r.alpha},        {"beta", r.beta},
       {"t", r.t},                {"k", r.k},
       {"estimate", r.estimate},  {"ratio", detail::num(r.ratio)},
       {"ratio_half_width", detail::num(r.ratio_half_width)}, {"ratio_power0", detail::num(r.ratio_power0)}};
}
inline void from_json(const nlohmann::json& j, ScanRow& r) {
  r.alpha = j.at("alpha").get<double>();
  r.beta = j.at("beta").get<double>();
  r.t = j.at("t").get<double>();
  r.k = j.at("k").get<std::size_t>();
  r.estimate = j.at("estimate").get<MomentReport>();
  r.ratio = detail::get_num(j.at("ratio"));
  r.ratio_half_width = detail::get_num(j.at("ratio_half_width"));
  r.ratio_power0 = detail::get_num(j.at("ratio_power0"));
}

inline void to_json(nlohmann::json& j, const ScanTrend& t) {
  j = {{"alpha", t.alpha}, {"beta", t.beta}, {"second_order", t.second_order},
       {"versus_inverse_t", t.versus_inverse_t}, {"versus_k", t.versus_k}, {"max_ratio", detail::num(t.max_ratio)}};
}
inline void from_json(const nlohmann::json& j, ScanTrend& t) {
  t.alpha = j.at("alpha").get<double>();
  t.beta = j.at("beta").get<double>();
  t.second_order = j.at("second_order").get<bool>();
  t.versus_inverse_t = j.at("versus_inverse_t").get<TrendTest>();
  t.versus_k = j.at("versus_k").get<TrendTest>();
  t.max_ratio = detail::get_num(j.at("max_ratio"));
}

inline void to_json(nlohmann::json& j, const BoundScanReport& r) {
  j = {{"M", r.M},
       {"samples", r.samples},
       {"failures", r.failures},
       {"first_order", r.first_order},
       {"second_order", r.second_order},
       {"trends", r.trends},
       {"bounded", r.bounded}};
}
inline void from_json(const nlohmann::json& j, BoundScanReport& r) {
  r.M = j.at("M").get<std::size_t>();
  r.samples = j.at("samples").get<std::size_t>();
  r.failures = j.at("failures").get<std::size_t>();
  r.first_order = j.at("first_order").get<std::vector<ScanRow>>();
  r.second_order = j.at("second_order").get<std::vector<ScanRow>>();
  r.trends = j.at("trends").get<std::vector<ScanTrend>>();
  r.bounded = j.at("bounded").get<bool>();
}

inline void to_json(nlohmann::json& j, const CheckResult& c) {
  j = {{"name", c.name}, {"passed", c.passed}, {"value", detail::num(c.value)},
       {"threshold", detail::num(c.threshold)}, {"detail", c.detail}};
}
inline void from_json(const nlohmann::json& j, CheckResult& c) {
  c.name = j.at("name").get<std::string>();
  c.passed = j.at("passed").get<bool>();
  c.value = detail::get_num(j.at("value"));
  c.threshold = detail::get_num(j.at("threshold"));
  c.detail = j.at("detail").get<std::string>();
}

inline void to_json(nlohmann::json& j, const SampleCount& c) { j = {{"samples", c.samples}, {"failures", c.failures}}; }
inline void from_json(const nlohmann::json& j, SampleCount& c) {
  c.samples = j.at("samples").get<std::size_t>();
  c.failures = j.at("failures").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const RunManifest& m) {
  j = {{"config_hash", m.config_hash}, {"seed", m.seed},     {"version", m.version}, {"timestamp", m.timestamp},
       {"threads", m.threads},         {"config", m.config}, {"counts", m.counts}};
}
inline void from_json(const nlohmann::json& j, RunManifest& m) {
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.timestamp = j.at("timestamp").get<std::string>();
  m.threads = j.at("threads").get<std::size_t>();
  m.config = j.at("config").get<std::string>();
  m.counts = j.at("counts").get<std::map<std::string, SampleCount>>();
}

inline void to_json(nlohmann::json& j, const ResultBundle& b) {
  j = {{"kind", b.kind}, {"manifest", b.manifest}, {"moments", b.moments}, {"checks", b.checks}};
  j["strong"] = b.strong ? nlohmann::json(*b.strong) : nlohmann::json(nullptr);
  j["weak"] = b.weak ? nlohmann::json(*b.weak) : nlohmann::json(nullptr);
  j["scan"] = b.scan ? nlohmann::json(*b.scan) : nlohmann::json(nullptr);
  nlohmann::json series = nlohmann::json::object();
  for (const auto& [k, v] : b.series) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : v) arr.push_back(detail::num(x));
    series[k] = arr;
  }
  j["series"] = series;
}
inline void from_json(const nlohmann::json& j, ResultBundle& b) {
  b.kind = j.at("kind").get<std::string>();
  b.manifest = j.at("manifest").get<RunManifest>();
  b.moments = j.at("moments").get<std::vector<LevelMoments>>();
  b.checks = j.at("checks").get<std::vector<CheckResult>>();
  b.strong.reset();
  b.weak.reset();
  b.scan.reset();
  if (!j.at("strong").is_null()) b.strong = j.at("strong").get<RateEstimate>();
  if (!j.at("weak").is_null()) b.weak = j.at("weak").get<RateEstimate>();
  if (!j.at("scan").is_null()) b.scan = j.at("scan").get<BoundScanReport>();
  b.series.clear();
  for (const auto& [k, arr] : j.at("series").items()) {
    std::vector<double> v;
    for (const auto& x : arr) v.push_back(detail::get_num(x));
    b.series[k] = std::move(v);
  }
}

inline std::string to_json_text(const ResultBundle& b) { return nlohmann::json(b).dump(2) + "\n"; }

inline ResultBundle bundle_from_json_text(const std::string& text) {
  return nlohmann::json::parse(text).get<ResultBundle>();
}

/// Study config from a config file or from the manifest of a results.json.
inline StudyConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") {
    const auto bundle = bundle_from_json_text(text);
    return parse_config_text(bundle.manifest.config, path.string() + "#manifest.config");
  }
  return parse_config_text(text, path.string());
}

// ---------------------------------------------------------------------------
// Emission

enum class OutputFormat { csv, json, both };

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  if (s == "both") return OutputFormat::both;
  throw std::invalid_argument("unknown format '" + s + "' (csv | json | both)");
}

namespace detail {

inline void csv_row(std::ostringstream& o, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) o << (i ? "," : "") << cells[i];
  o << "\n";
}

}  // namespace detail

/// File name -> contents for every output of the bundle in the given format.
inline std::map<std::string, std::string> render(const ResultBundle& b, OutputFormat format) {
  using detail::csv_row;
  const auto f = format_double;
  std::map<std::string, std::string> files;
  if (format != OutputFormat::csv) files["results.json"] = to_json_text(b);
  if (format == OutputFormat::json) return files;

  auto rate_files = [&](const std::string& name, const RateEstimate& r) {
    std::ostringstream csv, dat;
    csv_row(csv, {"M", "estimate", "ci_lo", "ci_hi", "resolved"});
    for (const auto& p : r.points) {
      csv_row(csv, {std::to_string(p.M), f(p.estimate), f(p.ci_lo), f(p.ci_hi), p.resolved ? "true" : "false"});
      dat << p.M << " " << f(std::abs(p.estimate)) << "\n";
    }
    files[name + ".csv"] = csv.str();
    files[name + ".dat"] = dat.str();
    std::ostringstream fit;
    csv_row(fit, {"slope", "slope_ci_lo", "slope_ci_hi", "intercept", "residual", "sufficient", "samples", "failures"});
    csv_row(fit, {f(r.slope), f(r.slope_ci_lo), f(r.slope_ci_hi), f(r.intercept), f(r.residual),
                  r.sufficient ? "true" : "false", std::to_string(r.samples), std::to_string(r.failures)});
    files[name + "_fit.csv"] = fit.str();
  };
  if (b.strong) rate_files("strong", *b.strong);
  if (b.weak) rate_files("weak", *b.weak);

  if (!b.moments.empty()) {
    std::ostringstream csv;
    csv_row(csv, {"M", "statistic", "estimate", "ci_lo", "ci_hi", "heavy_tail"});
    std::map<std::string, std::ostringstream> dats;
    for (const auto& lm : b.moments) {
      for (const auto& r : lm.reports) {
        csv_row(csv, {std::to_string(lm.M), r.name, f(r.estimate), f(r.lo()), f(r.hi()), r.heavy_tail ? "true" : "false"});
        std::string key = r.name;
        for (auto& ch : key) {
          if (ch == '^') ch = '_';
        }
        dats[key] << lm.M << " " << f(r.estimate) << "\n";
      }
    }
    files["moments.csv"] = csv.str();
    for (auto& [k, s] : dats) files["moments_" + k + ".dat"] = s.str();
  }

  if (b.scan) {
    std::ostringstream csv;
    csv_row(csv, {"order", "alpha", "beta", "t", "k", "estimate", "ci_lo", "ci_hi", "ratio", "ratio_power0"});
    auto rows = [&](const std::vector<ScanRow>& v, const char* order) {
      for (const auto& r : v) {
        csv_row(csv, {order, f(r.alpha), f(r.beta), f(r.t), std::to_string(r.k), f(r.estimate.estimate),
                      f(r.estimate.lo()), f(r.estimate.hi()), f(r.ratio), f(r.ratio_power0)});
      }
    };
    rows(b.scan->first_order, "1");
    rows(b.scan->second_order, "2");
    files["scan.csv"] = csv.str();
    std::ostringstream tr;
    csv_row(tr, {"order", "alpha", "beta", "rho_inverse_t", "p_inverse_t", "rho_k", "p_k", "max_ratio"});
    for (const auto& t : b.scan->trends) {
      csv_row(tr, {t.second_order ? "2" : "1", f(t.alpha), f(t.beta), f(t.versus_inverse_t.rho),
                   f(t.versus_inverse_t.p_value), f(t.versus_k.rho), f(t.versus_k.p_value), f(t.max_ratio)});
    }
    files["scan_trends.csv"] = tr.str();
  }

  if (!b.checks.empty()) {
    std::ostringstream csv;
    csv_row(csv, {"name", "passed", "value", "threshold"});
    for (const auto& c : b.checks) csv_row(csv, {c.name, c.passed ? "true" : "false", f(c.value), f(c.threshold)});
    files["checks.csv"] = csv.str();
  }

  if (!b.series.empty()) {
    // columns of equal length go into one table keyed by the first column "t"
    std::ostringstream csv;
    std::vector<std::string> names;
    for (const auto& [k, v] : b.series) {
      if (k != "terminal") names.push_back(k);
    }
    if (b.series.count("t")) {
      names.erase(std::find(names.begin(), names.end(), "t"));
      names.insert(names.begin(), "t");
    }
    csv_row(csv, names);
    const std::size_t n = names.empty() ? 0 : b.series.at(names.front()).size();
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> row;
      for (const auto& k : names) {
        const auto& v = b.series.at(k);
        row.push_back(i < v.size() ? f(v[i]) : "");
      }
      csv_row(csv, row);
    }
    files["trajectory.csv"] = csv.str();
    if (b.series.count("terminal")) {
      std::ostringstream t;
      csv_row(t, {"k", "coefficient"});
      const auto& v = b.series.at("terminal");
      for (std::size_t i = 0; i < v.size(); ++i) csv_row(t, {std::to_string(i + 1), f(v[i])});
      files["terminal.csv"] = t.str();
    }
  }
  return files;
}

/// Writes every file atomically (temp + rename). On failure, files already
/// written by this call are removed and the error is rethrown.
inline std::vector<std::filesystem::path> emit(const ResultBundle& b, const std::filesystem::path& dir,
                                               OutputFormat format) {
  namespace fs = std::filesystem;
  for (const auto& [study, count] : b.manifest.counts) {
    if (count.samples == 0) throw std::invalid_argument("study '" + study + "' has no samples; nothing to emit");
  }
  const auto files = render(b, format);
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : files) {
      const fs::path target = dir / name;
      const fs::path tmp = dir / (name + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
      }
      fs::rename(tmp, target);
      written.push_back(target);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    for (const auto& [name, content] : files) fs::remove(dir / (name + ".tmp"), ec);
    throw;
  }
  return written;
}

}  // namespace sburgers
