#pragma once

// Q-Wiener increments with trace-class covariance Q e_k = q_k e_k.
//
// q_k = c k^{-rho}, truncated at K drivers. The eigenvectors e_k are either
// the sine basis itself or the sine basis rotated by a short list of Givens
// rotations (Q then does not commute with A).
//
// Per time step the sampler produces two jointly Gaussian quantities:
//   brownian  = P_M (W(t+dt) - W(t)) = sum_k sqrt(q_k) dB_k e_k
//   convolved = P_M int_t^{t+dt} e^{(t+dt-s)A} dW(s)
// The first drives the Ito sum of the energy identity, the second is the
// exact noise term of the exponential integrator. Coefficients of both are
// computed from the full K-driver vector and then truncated, so every
// Galerkin level sees the projection of one Brownian path.

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sburgers/philox.hpp"
#include "sburgers/spectral.hpp"

namespace sburgers {

struct GivensRotation {
  std::size_t i = 1;  // 1-based sine modes
  std::size_t j = 2;
  double angle = 0.0;  // radians

  friend bool operator==(const GivensRotation&, const GivensRotation&) = default;
};

class CovarianceModel {
 public:
  struct Entry {
    std::size_t mode;  // 1-based sine mode
    double weight;     // <e_k, h_mode>
  };

  CovarianceModel() : CovarianceModel(2.0, 1.0, 1) {}

  CovarianceModel(double rho, double scale, std::size_t K, std::vector<GivensRotation> rotations = {})
      : rho_(rho), scale_(scale), K_(K), rotations_(std::move(rotations)) {
    if (!(rho > 1.0) || !std::isfinite(rho)) {
      throw std::invalid_argument("CovarianceModel: rho must exceed 1 so that sum_k q_k < infinity");
    }
    if (!(scale >= 0.0) || !std::isfinite(scale)) {
      throw std::invalid_argument("CovarianceModel: scale c must be finite and nonnegative");
    }
    if (K == 0) throw std::invalid_argument("CovarianceModel: truncation K must be >= 1");
    for (const auto& r : rotations_) {
      if (r.i == 0 || r.j == 0 || r.i > K || r.j > K || r.i == r.j || !std::isfinite(r.angle)) {
        throw std::invalid_argument("CovarianceModel: rotation (" + std::to_string(r.i) + ", " +
                                    std::to_string(r.j) + ") must name two distinct modes in 1..K");
      }
    }
    build_eigenvectors();
  }

  double rho() const noexcept { return rho_; }
  double scale() const noexcept { return scale_; }
  std::size_t truncation() const noexcept { return K_; }
  const std::vector<GivensRotation>& rotations() const noexcept { return rotations_; }
  bool commutes_with_laplacian() const noexcept { return rotations_.empty(); }

  /// Eigenvalue q_k, k in 1..K.
  double eigenvalue(std::size_t k) const noexcept {
    return scale_ * std::pow(static_cast<double>(k), -rho_);
  }

  /// Sine-basis expansion of e_k (entries with nonzero weight only).
  const std::vector<Entry>& eigenvector(std::size_t k) const { return columns_.at(k - 1); }

  /// Same law on modes 1..M with the drivers above the last one that can
  /// reach H_M dropped. Draws for the kept drivers are unchanged.
  CovarianceModel restricted(std::size_t M) const {
    std::size_t keep = std::max<std::size_t>(M, 1);
    for (const auto& r : rotations_) keep = std::max({keep, r.i, r.j});
    return CovarianceModel(rho_, scale_, std::min(keep, K_), rotations_);
  }

  /// Operator norm ||Q||, the largest eigenvalue.
  double operator_norm() const noexcept { return K_ == 0 ? 0.0 : eigenvalue(1); }

  /// Max deviation of R^T R from the identity, R the eigenvector matrix.
  double orthogonality_defect() const {
    std::vector<double> dense(K_ * K_, 0.0);
    for (std::size_t k = 0; k < K_; ++k) {
      for (const auto& e : columns_[k]) dense[(e.mode - 1) * K_ + k] = e.weight;
    }
    double defect = 0.0;
    for (std::size_t a = 0; a < K_; ++a) {
      for (std::size_t b = a; b < K_; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < K_; ++i) s += dense[i * K_ + a] * dense[i * K_ + b];
        defect = std::max(defect, std::abs(s - (a == b ? 1.0 : 0.0)));
      }
    }
    return defect;
  }

  /// Entry (i, j) of Q in sine coordinates: sum_k q_k <e_k,h_i><e_k,h_j>.
  std::vector<double> sine_covariance(std::size_t M) const {
    std::vector<double> cov(M * M, 0.0);
    for (std::size_t k = 1; k <= K_; ++k) {
      const double q = eigenvalue(k);
      for (const auto& a : columns_[k - 1]) {
        if (a.mode > M) continue;
        for (const auto& b : columns_[k - 1]) {
          if (b.mode > M) continue;
          cov[(a.mode - 1) * M + (b.mode - 1)] += q * a.weight * b.weight;
        }
      }
    }
    return cov;
  }

  friend bool operator==(const CovarianceModel& a, const CovarianceModel& b) {
    return a.rho_ == b.rho_ && a.scale_ == b.scale_ && a.K_ == b.K_ && a.rotations_ == b.rotations_;
  }

 private:
  void build_eigenvectors() {
    // Columns of R = G_n ... G_1 applied to the identity.
    std::vector<double> dense(K_ * K_, 0.0);
    for (std::size_t k = 0; k < K_; ++k) dense[k * K_ + k] = 1.0;
    for (const auto& r : rotations_) {
      const double c = std::cos(r.angle);
      const double s = std::sin(r.angle);
      const std::size_t i = r.i - 1;
      const std::size_t j = r.j - 1;
      for (std::size_t k = 0; k < K_; ++k) {
        const double vi = dense[i * K_ + k];
        const double vj = dense[j * K_ + k];
        dense[i * K_ + k] = c * vi - s * vj;
        dense[j * K_ + k] = s * vi + c * vj;
      }
    }
    columns_.assign(K_, {});
    for (std::size_t k = 0; k < K_; ++k) {
      for (std::size_t i = 0; i < K_; ++i) {
        const double w = dense[i * K_ + k];
        if (w != 0.0) columns_[k].push_back({i + 1, w});
      }
    }
  }

  double rho_;
  double scale_;
  std::size_t K_;
  std::vector<GivensRotation> rotations_;
  std::vector<std::vector<Entry>> columns_;
};

/// Tr(Q) truncated at K.
inline double trace(const CovarianceModel& model) {
  double s = 0.0;
  for (std::size_t k = 1; k <= model.truncation(); ++k) s += model.eigenvalue(k);
  return s;
}

/// Tr(P_M Q P_M) = sum_k q_k ||P_M e_k||^2.
inline double projected_trace(const CovarianceModel& model, std::size_t M) {
  double s = 0.0;
  for (std::size_t k = 1; k <= model.truncation(); ++k) {
    double w2 = 0.0;
    for (const auto& e : model.eigenvector(k)) {
      if (e.mode <= M) w2 += e.weight * e.weight;
    }
    s += model.eigenvalue(k) * w2;
  }
  return s;
}

/// Address of one time step of one Monte Carlo sample.
struct NoiseStream {
  std::uint64_t seed = 0;
  std::uint64_t sample = 0;
  std::uint64_t step = 0;

  /// Independent substream for a lane of this address. Lanes below
  /// kAuxiliaryLane belong to the noise sampler.
  PhiloxEngine engine(std::uint32_t lane) const noexcept {
    const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return PhiloxEngine(key, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(sample),
                        (lane << 24) | static_cast<std::uint32_t>((sample >> 32) & 0xFFFFFFu));
  }

  static constexpr std::uint32_t kAuxiliaryLane = 200;
  static constexpr std::uint32_t kInitialDataLane = 201;
  static constexpr std::uint32_t kBootstrapLane = 202;
};

/// Standard normal draws from one substream, in order.
inline void fill_standard_normals(PhiloxEngine engine, std::span<double> out) {
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out) v = normal(engine);
}

struct NoiseIncrement {
  SpectralField brownian;
  SpectralField convolved;
};

/// Which member of the joint Gaussian is a pure function of lane 0.
///   brownian_first:    dB_k = sqrt(dt) xi_k on lane 0; convolution parts
///                      conditioned on it (lanes 1..).
///   convolution_first: the convolution parts own lanes 0..; dB_k is
///                      conditioned on them via a residual lane, which is
///                      only drawn when the Brownian increment is requested.
/// Both orderings sample the same joint law.
enum class LaneOrder { brownian_first, convolution_first };

/// Precomputed joint law of (dB_k, int e^{-lambda_i (dt-s)} dB_k(s), i in supp e_k)
/// for every driver k at a fixed step size.
class NoiseSampler {
 public:
  static constexpr std::uint32_t kResidualLane = 63;

  NoiseSampler(CovarianceModel model, double dt, LaneOrder order = LaneOrder::convolution_first)
      : model_(std::move(model)), dt_(dt), order_(order) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("NoiseSampler: dt must be positive");
    const std::size_t K = model_.truncation();
    drivers_.resize(K);
    modes_ = 1;
    for (std::size_t k = 1; k <= K; ++k) {
      Driver& d = drivers_[k - 1];
      d.sqrt_q = std::sqrt(model_.eigenvalue(k));
      d.support = model_.eigenvector(k);
      for (const auto& e : d.support) modes_ = std::max(modes_, e.mode);
      d.factor = joint_factor(d.support);
      max_support_ = std::max(max_support_, d.support.size());
    }
    diagonal_ = max_support_ == 1;
    if (diagonal_) {
      const bool bfirst = order_ == LaneOrder::brownian_first;
      for (std::size_t k = 0; k < K; ++k) {
        const Driver& d = drivers_[k];
        if (d.support[0].mode != k + 1) {
          diagonal_ = false;
          break;
        }
        const double s = d.sqrt_q * d.support[0].weight;
        // factor rows: [0] = (L00, 0), [1] = (L10, L11)
        const double L00 = d.factor[0], L10 = d.factor[2], L11 = d.factor[3];
        diag_brown_first_.push_back(s * (bfirst ? L00 : L10));
        diag_brown_second_.push_back(s * (bfirst ? 0.0 : L11));
        diag_conv_first_.push_back(s * (bfirst ? L10 : L00));
        diag_conv_second_.push_back(s * (bfirst ? L11 : 0.0));
      }
    }
    // slot s of the normals table holds lane lane_ids_[s]
    for (std::size_t s = 0; s <= max_support_; ++s) {
      const bool residual = order_ == LaneOrder::convolution_first && s == max_support_;
      lane_ids_.push_back(residual ? kResidualLane : static_cast<std::uint32_t>(s));
      std::size_t n = 0;
      for (const auto& d : drivers_) n += slot_used(d, s) ? 1 : 0;
      lane_lengths_.push_back(n);
    }
  }

  const CovarianceModel& model() const noexcept { return model_; }
  double dt() const noexcept { return dt_; }
  LaneOrder order() const noexcept { return order_; }
  /// Highest sine mode any driver touches.
  std::size_t modes() const noexcept { return modes_; }
  /// Slots in the normals table, one per lane.
  std::size_t lanes() const noexcept { return lane_ids_.size(); }
  std::uint32_t lane_id(std::size_t slot) const { return lane_ids_.at(slot); }
  std::size_t lane_length(std::size_t slot) const { return lane_lengths_.at(slot); }

  /// Draws the standard normals of one step, lane by lane. Without
  /// with_brownian the residual lane is skipped (convolution_first only).
  void draw_normals(const NoiseStream& stream, std::vector<std::vector<double>>& normals,
                    bool with_brownian = true) const {
    normals.resize(lanes());
    for (std::size_t slot = 0; slot < lanes(); ++slot) {
      if (!with_brownian && lane_ids_[slot] == kResidualLane) {
        normals[slot].clear();
        continue;
      }
      normals[slot].resize(lane_lengths_[slot]);
      fill_standard_normals(stream.engine(lane_ids_[slot]), normals[slot]);
    }
  }

  /// Maps standard normals to increments. Outputs are truncated to their
  /// sizes; modes beyond modes() stay zero. An empty brownian span skips it.
  void assemble(const std::vector<std::vector<double>>& normals, std::span<double> brownian,
                std::span<double> convolved) const {
    std::fill(brownian.begin(), brownian.end(), 0.0);
    std::fill(convolved.begin(), convolved.end(), 0.0);
    const bool want_brownian = !brownian.empty();
    if (diagonal_) {
      assemble_diagonal(normals, brownian, convolved);
      return;
    }
    std::array<std::size_t, kMaxJoint> cursor{};
    std::array<double, kMaxJoint> xi{};
    for (const Driver& d : drivers_) {
      const std::size_t m = d.support.size();
      const std::size_t n = m + 1;
      bool relevant = false;
      for (const auto& e : d.support) relevant = relevant || e.mode <= std::max(brownian.size(), convolved.size());
      // positions in the joint vector and the slot each one reads
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t slot = slot_of_position(p, m);
        if (!want_brownian && lane_ids_[slot] == kResidualLane) {
          xi[p] = 0.0;
          continue;
        }
        xi[p] = normals[slot].at(cursor[slot]++);
      }
      if (!relevant) continue;
      const std::size_t bpos = order_ == LaneOrder::brownian_first ? 0 : m;
      double db = 0.0;
      if (want_brownian) {
        const double* row = &d.factor[bpos * n];
        for (std::size_t b = 0; b <= bpos; ++b) db += row[b] * xi[b];
      }
      for (std::size_t a = 0; a < m; ++a) {
        const auto& e = d.support[a];
        const std::size_t zpos = order_ == LaneOrder::brownian_first ? a + 1 : a;
        const double* row = &d.factor[zpos * n];
        double z = 0.0;
        for (std::size_t b = 0; b <= zpos; ++b) z += row[b] * xi[b];
        if (e.mode <= brownian.size()) brownian[e.mode - 1] += d.sqrt_q * e.weight * db;
        if (e.mode <= convolved.size()) convolved[e.mode - 1] += d.sqrt_q * e.weight * z;
      }
    }
  }

  NoiseIncrement sample(const NoiseStream& stream, std::size_t M) const {
    std::vector<std::vector<double>> normals;
    draw_normals(stream, normals);
    NoiseIncrement inc{SpectralField(M), SpectralField(M)};
    assemble(normals, inc.brownian.coeffs(), inc.convolved.coeffs());
    return inc;
  }

 private:
  static constexpr std::size_t kMaxJoint = 64;

  // e_k = h_k: driver k touches mode k only, two normals per driver.
  void assemble_diagonal(const std::vector<std::vector<double>>& normals, std::span<double> brownian,
                         std::span<double> convolved) const {
    const std::size_t K = drivers_.size();
    const bool bfirst = order_ == LaneOrder::brownian_first;
    const std::vector<double>& first = normals[0];
    const std::vector<double>* second = normals.size() > 1 && !normals[1].empty() ? &normals[1] : nullptr;
    const std::size_t nconv = std::min(convolved.size(), K);
    if (bfirst) {
      for (std::size_t k = 0; k < nconv; ++k) {
        convolved[k] = diag_conv_first_[k] * first[k] + diag_conv_second_[k] * second->at(k);
      }
      for (std::size_t k = 0; k < std::min(brownian.size(), K); ++k) brownian[k] = diag_brown_first_[k] * first[k];
    } else {
      for (std::size_t k = 0; k < nconv; ++k) convolved[k] = diag_conv_first_[k] * first[k];
      if (!brownian.empty()) {
        if (second == nullptr) throw std::logic_error("NoiseSampler: Brownian increment requested without its lane");
        for (std::size_t k = 0; k < std::min(brownian.size(), K); ++k) {
          brownian[k] = diag_brown_first_[k] * first[k] + diag_brown_second_[k] * (*second)[k];
        }
      }
    }
  }

  struct Driver {
    double sqrt_q = 0.0;
    std::vector<CovarianceModel::Entry> support;
    std::vector<double> factor;  // row-major lower-triangular, (|support|+1)^2
  };

  // Joint-vector position p of a driver with m support modes -> table slot.
  std::size_t slot_of_position(std::size_t p, std::size_t m) const noexcept {
    if (order_ == LaneOrder::brownian_first) return p;
    return p == m ? max_support_ : p;
  }

  bool slot_used(const Driver& d, std::size_t slot) const noexcept {
    const std::size_t m = d.support.size();
    if (order_ == LaneOrder::brownian_first) return slot <= m;
    return slot == max_support_ || slot < m;
  }

  std::vector<double> joint_factor(const std::vector<CovarianceModel::Entry>& support) const {
    const std::size_t m = support.size();
    const std::size_t n = m + 1;
    if (n > kMaxJoint) throw std::invalid_argument("NoiseSampler: eigenvector support too wide");
    // decay rate of each position: 0 for the Brownian increment itself
    std::vector<double> rate(n, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      const std::size_t p = order_ == LaneOrder::brownian_first ? a + 1 : a;
      rate[p] = laplace_eigenvalue(support[a].mode);
    }
    auto kernel = [this](double r) { return r == 0.0 ? dt_ : -std::expm1(-r * dt_) / r; };
    std::vector<double> cov(n * n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) cov[a * n + b] = kernel(rate[a] + rate[b]);
    }
    // Cholesky with clamped pivots: the Gram matrix of decaying exponentials
    // is positive definite but can be numerically singular.
    std::vector<double> L(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double d = cov[j * n + j];
      for (std::size_t p = 0; p < j; ++p) d -= L[j * n + p] * L[j * n + p];
      const double pivot = d > 0.0 ? std::sqrt(d) : 0.0;
      L[j * n + j] = pivot;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = cov[i * n + j];
        for (std::size_t p = 0; p < j; ++p) s -= L[i * n + p] * L[j * n + p];
        L[i * n + j] = pivot > 0.0 ? s / pivot : 0.0;
      }
    }
    return L;
  }

  CovarianceModel model_;
  double dt_;
  LaneOrder order_;
  std::vector<Driver> drivers_;
  std::size_t modes_ = 1;
  std::size_t max_support_ = 1;
  bool diagonal_ = false;
  std::vector<double> diag_brown_first_, diag_brown_second_, diag_conv_first_, diag_conv_second_;
  std::vector<std::uint32_t> lane_ids_;
  std::vector<std::size_t> lane_lengths_;
};

/// P_M of the Brownian increment over one step of size dt.
inline SpectralField sample_increment(const CovarianceModel& model, double dt, const NoiseStream& stream,
                                      std::size_t M) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_increment: dt must be positive");
  return NoiseSampler(model, dt, LaneOrder::brownian_first).sample(stream, M).brownian;
}

}  // namespace sburgers
