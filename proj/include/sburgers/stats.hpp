#pragma once

// Monte Carlo summaries, log-log regression and a rank trend test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace sburgers {

inline constexpr double kDefaultConfidence = 0.95;

inline double normal_quantile(double confidence) {
  boost::math::normal_distribution<double> n;
  return boost::math::quantile(n, 0.5 + 0.5 * confidence);
}

struct MomentReport {
  std::string name;
  std::size_t samples = 0;
  std::size_t failures = 0;
  double estimate = 0.0;
  double half_width = 0.0;
  double std_error = 0.0;
  double confidence = kDefaultConfidence;
  /// Set when the CLT interval is wider than the estimate itself.
  bool heavy_tail = false;

  double lo() const noexcept { return estimate - half_width; }
  double hi() const noexcept { return estimate + half_width; }

  friend bool operator==(const MomentReport&, const MomentReport&) = default;
};

/// Mean and CLT interval. Values are summed in index order.
inline MomentReport summarize(std::string name, std::span<const double> values,
                              double confidence = kDefaultConfidence) {
  MomentReport r;
  r.name = std::move(name);
  r.samples = values.size();
  r.confidence = confidence;
  if (values.empty()) return r;
  const double n = static_cast<double>(values.size());
  // constant samples are reported exactly, free of summation rounding
  const bool constant = std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean = constant ? values[0] : mean / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  r.estimate = mean;
  if (values.size() > 1) {
    r.std_error = std::sqrt(ss / (n - 1.0) / n);
    r.half_width = normal_quantile(confidence) * r.std_error;
  }
  r.heavy_tail = r.half_width > std::abs(r.estimate);
  return r;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the fit residuals
};

inline LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least_squares: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  f.residual = std::sqrt(rss / n);
  return f;
}

/// Mid-ranks, ties averaged.
inline std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mid;
    i = j + 1;
  }
  return r;
}

struct TrendTest {
  double rho = 0.0;
  double p_value = 1.0;  // one-sided, H1: positive association
  bool increasing = false;
};

/// Spearman rank correlation with the t approximation for the p-value.
inline TrendTest spearman_increasing(std::span<const double> x, std::span<const double> y, double level = 0.05) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  TrendTest t;
  const std::size_t n = x.size();
  if (n < 3) return t;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return t;
  t.rho = sxy / std::sqrt(sxx * syy);
  const double df = static_cast<double>(n) - 2.0;
  if (t.rho >= 1.0) {
    t.p_value = 0.0;
  } else {
    const double stat = t.rho * std::sqrt(df / (1.0 - t.rho * t.rho));
    boost::math::students_t_distribution<double> dist(df);
    t.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  }
  t.increasing = t.p_value < level;
  return t;
}

/// Empirical quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace sburgers
