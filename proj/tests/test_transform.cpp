#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sburgers/spectral.hpp"
#include "sburgers/transform.hpp"

using namespace sburgers;

namespace {

SpectralField random_field(std::size_t M, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  SpectralField x(M);
  for (std::size_t i = 0; i < M; ++i) x[i] = n(rng);
  return x;
}

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(NonlinearityFast, FirstModeMatchesConvolution) {
  EXPECT_LE(max_abs_diff(nonlinearity_fast(SpectralField{1.0}, 4), nonlinearity_conv(SpectralField{1.0}, 4)), 1e-12);
}

TEST(NonlinearityFast, RandomFieldsMatchConvolution) {
  for (std::size_t M : {1u, 5u, 13u, 32u, 64u}) {
    for (unsigned s = 0; s < 10; ++s) {
      const auto x = random_field(M, s);
      const double n2 = inner(x, x);
      EXPECT_LE(max_abs_diff(nonlinearity_fast(x, M), nonlinearity_conv(x, M)), 1e-12 * std::max(n2, 1.0))
          << "M=" << M;
    }
  }
}

TEST(NonlinearityFast, ZeroField) { EXPECT_EQ(l2_norm(nonlinearity_fast(SpectralField(32), 32)), 0.0); }

TEST(BilinearFast, MatchesConvolution) {
  const auto a = random_field(32, 1), b = random_field(32, 2);
  EXPECT_LE(max_abs_diff(bilinear_fast(a, b, 32), bilinear_conv(a, b, 32)), 1e-12 * l2_norm(a) * l2_norm(b));
}

TEST(NonlinearityKernel, BothPathsAgree) {
  for (std::size_t M : {4u, 12u, 13u, 48u}) {
    NonlinearityKernel k(M);
    const auto a = random_field(M, 7), b = random_field(M, 8);
    std::vector<double> out(M);
    k.gradient_product(a.coeffs(), b.coeffs(), out);
    const auto ref = bilinear_conv(a, b, M);
    for (std::size_t i = 0; i < M; ++i) EXPECT_NEAR(out[i], ref[i], 1e-11) << "M=" << M;
  }
}

TEST(PointEvaluation, SineValues) {
  EXPECT_NEAR(eval_on_grid(SpectralField{1.0}, 2)[1], 1.41421, 1e-5);
  EXPECT_NEAR(eval_on_grid(SpectralField{0.0, 1.0}, 4)[1], std::sqrt(2.0), 1e-14);
  // odd n takes the direct summation path
  EXPECT_NEAR(eval_on_grid(SpectralField{0.0, 1.0}, 8)[2], std::sqrt(2.0), 1e-14);
}

TEST(PointEvaluation, DirichletBoundary) {
  const auto x = random_field(9, 3);
  for (std::size_t n : {7u, 16u, 40u}) {
    const auto v = eval_on_grid(x, n);
    EXPECT_EQ(v.front(), 0.0);
    EXPECT_EQ(v.back(), 0.0);
  }
}

TEST(PointEvaluation, FastAndDirectAgree) {
  const auto x = random_field(10, 4);
  const auto fast = eval_on_grid(x, 40);
  for (std::size_t j = 1; j < 40; ++j) {
    double s = 0.0;
    for (std::size_t i = 1; i <= 10; ++i) s += x[i - 1] * std::sqrt(2.0) * std::sin(i * pi * j / 40.0);
    EXPECT_NEAR(fast[j], s, 1e-12);
  }
}

TEST(PointEvaluation, ParsevalOnFineGrid) {
  const auto x = random_field(8, 5);
  const auto v = eval_on_grid(x, 64);
  double s = 0.0;
  for (double y : v) s += y * y / 64.0;  // trapezoid, exact for this bandwidth
  EXPECT_NEAR(s, inner(x, x), 1e-12 * inner(x, x));
}
