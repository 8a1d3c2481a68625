#pragma once

// Pseudo-spectral evaluation of the Burgers nonlinearity.
//
// A degree-M sine series is synthesized on the uniform grid z_j = j/(2M),
// extended oddly to one period of length L = 4M samples (complex-to-real
// FFT). The pointwise product of two odd series is even, and its cosine
// coefficients for modes 0..2M are read off a real-to-complex FFT of the
// same length. That cosine band holds the product exactly, so after the
// spectral derivative and projection the result agrees with the O(M^2)
// convolution up to rounding.

#include <fftw3.h>

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sburgers/spectral.hpp"

namespace sburgers {

namespace detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline RealBuffer make_real_buffer(std::size_t n) {
  double* p = fftw_alloc_real(n);
  if (p == nullptr) throw std::bad_alloc();
  std::fill_n(p, n, 0.0);
  return RealBuffer(p);
}

inline ComplexBuffer make_complex_buffer(std::size_t n) {
  fftw_complex* p = fftw_alloc_complex(n);
  if (p == nullptr) throw std::bad_alloc();
  for (std::size_t i = 0; i < n; ++i) p[i][0] = p[i][1] = 0.0;
  return ComplexBuffer(p);
}

// Process-wide plan cache. FFTW planning is not thread-safe; execution of a
// plan on fresh arrays is. Plans use FFTW_ESTIMATE so the chosen algorithm,
// and therefore every rounding, is identical across runs.
class PlanCache {
 public:
  struct Pair {
    fftw_plan to_physical;  // c2r, length L
    fftw_plan to_spectral;  // r2c, length L
  };

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Pair get(int L) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(L); it != plans_.end()) return it->second;
    RealBuffer real = make_real_buffer(static_cast<std::size_t>(L));
    ComplexBuffer cplx = make_complex_buffer(static_cast<std::size_t>(L / 2 + 1));
    Pair pair{fftw_plan_dft_c2r_1d(L, cplx.get(), real.get(), FFTW_ESTIMATE),
              fftw_plan_dft_r2c_1d(L, real.get(), cplx.get(), FFTW_ESTIMATE)};
    if (pair.to_physical == nullptr || pair.to_spectral == nullptr) {
      throw std::runtime_error("FFTW: failed to create plans");
    }
    plans_.emplace(L, pair);
    return pair;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [L, pair] : plans_) {
      fftw_destroy_plan(pair.to_physical);
      fftw_destroy_plan(pair.to_spectral);
    }
  }

  std::mutex mutex_;
  std::map<int, Pair> plans_;
};

}  // namespace detail

/// Scratch buffers and plans for inputs of bandwidth up to M. One workspace
/// per thread; it is not safe to share between concurrent callers.
class TransformWorkspace {
 public:
  explicit TransformWorkspace(std::size_t M)
      : M_(checked_bandwidth(M)),
        L_(4 * M),
        spectrum_(detail::make_complex_buffer(L_ / 2 + 1)),
        phys_a_(detail::make_real_buffer(L_)),
        phys_b_(detail::make_real_buffer(L_)) {
    plans_ = detail::PlanCache::instance().get(static_cast<int>(L_));
  }

  std::size_t bandwidth() const noexcept { return M_; }

  /// out = P_{out.size()} grad(x1 x2); x1, x2 of dimension <= bandwidth().
  void gradient_product(std::span<const double> x1, std::span<const double> x2, std::span<double> out) {
    check_input(x1);
    check_input(x2);
    synthesize(x1, phys_a_.get());
    double* a = phys_a_.get();
    const double* b = a;
    if (x2.data() != x1.data() || x2.size() != x1.size()) {
      synthesize(x2, phys_b_.get());
      b = phys_b_.get();
    }
    for (std::size_t j = 0; j < L_; ++j) a[j] *= b[j];
    fftw_execute_dft_r2c(plans_.to_spectral, a, spectrum_.get());

    // cosine coefficient C_m = 2 Re Y_m / L for 0 < m < 2M, Re Y_2M / L at the
    // Nyquist mode; grad(cos(m pi z)) = -m pi sin(m pi z)
    const double L = static_cast<double>(L_);
    const std::size_t resolved = std::min(out.size(), 2 * M_);
    for (std::size_t m = 1; m <= resolved; ++m) {
      const double Cm = (m == 2 * M_ ? 1.0 : 2.0) * spectrum_[m][0] / L;
      out[m - 1] = -static_cast<double>(m) * pi * Cm / sqrt2;
    }
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(resolved), out.end(), 0.0);
  }

  /// Values sqrt2 * sum_k a_k sin(k pi j / (2M)) at the interior nodes j = 1..2M-1.
  std::span<const double> interior_values(std::span<const double> x) {
    check_input(x);
    synthesize(x, phys_a_.get());
    return {phys_a_.get() + 1, 2 * M_ - 1};
  }

 private:
  static std::size_t checked_bandwidth(std::size_t M) {
    if (M == 0) throw std::invalid_argument("TransformWorkspace: bandwidth must be >= 1");
    return M;
  }

  void check_input(std::span<const double> x) const {
    if (x.size() > M_) throw std::invalid_argument("TransformWorkspace: input exceeds bandwidth");
  }

  // c2r of c_k = -i (sqrt2/2) a_k gives sqrt2 sum_k a_k sin(2 pi j k / L).
  void synthesize(std::span<const double> x, double* dst) {
    fftw_complex* c = spectrum_.get();
    c[0][0] = c[0][1] = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      c[k + 1][0] = 0.0;
      c[k + 1][1] = -0.5 * sqrt2 * x[k];
    }
    for (std::size_t k = x.size() + 1; k <= L_ / 2; ++k) c[k][0] = c[k][1] = 0.0;
    fftw_execute_dft_c2r(plans_.to_physical, c, dst);
  }

  std::size_t M_;
  std::size_t L_;
  detail::ComplexBuffer spectrum_;
  detail::RealBuffer phys_a_;
  detail::RealBuffer phys_b_;
  detail::PlanCache::Pair plans_{};
};

/// P_{M_out} grad(x1 x2), pseudo-spectral path, O(M log M).
inline SpectralField bilinear_fast(const SpectralField& x1, const SpectralField& x2, std::size_t M_out) {
  TransformWorkspace ws(std::max(x1.dim(), x2.dim()));
  SpectralField out(M_out);
  ws.gradient_product(x1.coeffs(), x2.coeffs(), out.coeffs());
  return out;
}

/// P_{M_out} grad(x^2), pseudo-spectral path.
inline SpectralField nonlinearity_fast(const SpectralField& x, std::size_t M_out) {
  TransformWorkspace ws(x.dim());
  SpectralField out(M_out);
  ws.gradient_product(x.coeffs(), x.coeffs(), out.coeffs());
  return out;
}

/// Mode count at or below which the direct convolution beats the transforms.
inline constexpr std::size_t kConvolutionCrossover = 12;

/// Hot-loop dispatcher used by the integrator: exact convolution for small
/// bandwidth, transforms above the crossover.
class NonlinearityKernel {
 public:
  explicit NonlinearityKernel(std::size_t M) : M_(M) {
    if (M > kConvolutionCrossover) ws_.emplace(M);
  }

  std::size_t bandwidth() const noexcept { return M_; }

  void gradient_product(std::span<const double> x1, std::span<const double> x2, std::span<double> out) {
    if (ws_) {
      ws_->gradient_product(x1, x2, out);
    } else {
      detail::convolve_gradient_product(x1, x2, out);
    }
  }

 private:
  std::size_t M_;
  std::optional<TransformWorkspace> ws_;
};

/// Physical values x(j/n), j = 0..n. Endpoints are exactly zero.
inline std::vector<double> eval_on_grid(const SpectralField& x, std::size_t n) {
  if (n < 2) throw std::invalid_argument("eval_on_grid: need n >= 2");
  std::vector<double> values(n + 1, 0.0);
  if (n % 2 == 0 && x.dim() <= n / 2) {
    // grid j/n coincides with the transform grid j/(2B) for bandwidth B = n/2
    TransformWorkspace ws(n / 2);
    auto interior = ws.interior_values(x.coeffs());
    std::copy(interior.begin(), interior.end(), values.begin() + 1);
    return values;
  }
  for (std::size_t j = 1; j < n; ++j) {
    const double z = static_cast<double>(j) / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) s += x[i] * std::sin(static_cast<double>(i + 1) * pi * z);
    values[j] = sqrt2 * s;
  }
  return values;
}

/// max_j |x(j/n)|, the grid estimate of the sup norm.
inline double grid_sup_norm(const SpectralField& x, std::size_t n) {
  const auto values = eval_on_grid(x, n);
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace sburgers
