#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sburgers/spectral.hpp"

using namespace sburgers;

namespace {

SpectralField random_field(std::size_t M, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  SpectralField x(M);
  for (std::size_t i = 0; i < M; ++i) x[i] = n(rng) / static_cast<double>(i + 1);
  return x;
}

}  // namespace

TEST(SpectralField, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(SpectralField(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(SpectralField(std::size_t{0}), std::invalid_argument);
  EXPECT_THROW((SpectralField{1.0, NAN}), std::domain_error);
  SpectralField x{1.0, 2.0};
  x[1] = INFINITY;
  EXPECT_FALSE(x.is_finite());
  EXPECT_THROW(x.validate(), std::domain_error);
}

TEST(SpectralField, NormIsEuclidean) {
  const SpectralField x{3.0, 4.0};
  EXPECT_DOUBLE_EQ(l2_norm(x), 5.0);
}

TEST(FractionalPower, ZeroExponentIsIdentity) {
  const auto x = random_field(9, 1);
  EXPECT_EQ(fractional_power(x, FractionalExponent(0.0)), x);
}

TEST(FractionalPower, FirstModeSquaredFrequency) {
  const auto y = fractional_power(SpectralField{1.0}, FractionalExponent(1.0));
  EXPECT_NEAR(y[0], 9.8696, 1e-4);
}

TEST(FractionalPower, NegativeHalfOnSecondMode) {
  const auto y = fractional_power(SpectralField{0.0, 1.0}, FractionalExponent(-0.5));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 0.159155, 1e-6);
}

TEST(FractionalNorm, BasisValues) {
  EXPECT_DOUBLE_EQ(fractional_norm(SpectralField{1.0}, FractionalExponent(0.0)), 1.0);
  EXPECT_NEAR(fractional_norm(SpectralField{0.0, 1.0}, FractionalExponent(0.5)), 6.28319, 1e-5);
}

TEST(FractionalNorm, MonotoneInExponent) {
  const auto h3 = SpectralField::basis(3, 3);
  EXPECT_LE(fractional_norm(h3, FractionalExponent(0.2)), fractional_norm(h3, FractionalExponent(0.4)));
}

TEST(Semigroup, ZeroTimeIsIdentity) {
  const auto x = random_field(7, 2);
  EXPECT_EQ(semigroup(x, 0.0), x);
}

TEST(Semigroup, DecayOfFirstMode) {
  EXPECT_NEAR(semigroup(SpectralField{1.0}, 0.1)[0], 0.372708, 1e-6);
}

TEST(Semigroup, SmoothingBound) {
  for (unsigned s = 0; s < 50; ++s) {
    const auto x = random_field(32, 100 + s);
    for (double alpha : {0.25, 0.5, 1.0, 1.5}) {
      for (double t : {1e-3, 0.05, 0.5}) {
        const double bound = std::exp(alpha * (std::log(alpha) - 1.0)) * std::pow(t, -alpha) * l2_norm(x);
        EXPECT_LE(fractional_norm(semigroup(x, t), FractionalExponent(alpha)), bound * (1 + 1e-12));
      }
    }
  }
}

TEST(Projection, KeepsLowModes) {
  const auto x = random_field(5, 3);
  EXPECT_EQ(project(x, 8), x);
  EXPECT_EQ(truncate(embed(x, 8), 5), x);
  EXPECT_EQ(project(x, 5), x);
}

TEST(Projection, DropsModeAboveCutoff) {
  const auto y = project(SpectralField::basis(3, 3), 2);
  EXPECT_EQ(l2_norm(y), 0.0);
}

TEST(Projection, TailBoundOnThirdMode) {
  const auto x = SpectralField::basis(3, 5);
  const auto tail = embed(project(x, 5), 5) - embed(project(x, 2), 5);
  const double v = fractional_norm(tail, FractionalExponent(-0.5));
  EXPECT_NEAR(v, 0.106103, 1e-6);
  EXPECT_LE(v, 1.0 / (2.0 * pi));
}

TEST(NonlinearityConv, FirstModeFeedsSecond) {
  const auto y = nonlinearity_conv(SpectralField{1.0}, 4);
  ASSERT_EQ(y.dim(), 4u);
  EXPECT_NEAR(y[0], 0.0, 1e-14);
  EXPECT_NEAR(y[1], 4.44288, 1e-5);
  EXPECT_NEAR(y[2], 0.0, 1e-14);
  EXPECT_NEAR(y[3], 0.0, 1e-14);
  EXPECT_EQ(l2_norm(nonlinearity_conv(SpectralField{1.0}, 1)), 0.0);
}

// Independent quadrature oracle: midpoint rule of d/dz(x^2) against h_k.
TEST(NonlinearityConv, MatchesQuadrature) {
  const auto x = random_field(6, 4);
  const std::size_t n = 20000;
  const auto y = nonlinearity_conv(x, 8);
  for (std::size_t k = 1; k <= 8; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double z = (static_cast<double>(j) + 0.5) / n;
      double u = 0.0, du = 0.0;
      for (std::size_t i = 1; i <= x.dim(); ++i) {
        u += x[i - 1] * sqrt2 * std::sin(i * pi * z);
        du += x[i - 1] * sqrt2 * i * pi * std::cos(i * pi * z);
      }
      s += 2.0 * u * du * sqrt2 * std::sin(k * pi * z) / n;
    }
    EXPECT_NEAR(y[k - 1], s, 1e-6) << "mode " << k;
  }
}

TEST(NonlinearityConv, Orthogonality) {
  for (unsigned s = 0; s < 20; ++s) {
    const auto x = random_field(24, 10 + s);
    const double n = l2_norm(x);
    EXPECT_LE(std::abs(inner(nonlinearity_conv(x, 24), x)), 1e-12 * n * n * n);
  }
}

TEST(BilinearConv, FirstTimesSecond) {
  const auto y = bilinear_conv(SpectralField{1.0}, SpectralField{0.0, 1.0}, 4);
  EXPECT_NEAR(y[0], -2.22144, 1e-5);
  EXPECT_NEAR(y[1], 0.0, 1e-14);
  EXPECT_NEAR(y[2], 6.66432, 1e-5);
  EXPECT_NEAR(y[3], 0.0, 1e-14);
}

TEST(BilinearConv, ZeroArgumentAndSymmetry) {
  const auto a = random_field(10, 5), b = random_field(10, 6);
  EXPECT_EQ(l2_norm(bilinear_conv(a, SpectralField(10), 10)), 0.0);
  const auto ab = bilinear_conv(a, b, 10), ba = bilinear_conv(b, a, 10);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(ab[i], ba[i], 1e-13);
}

TEST(BilinearConv, Antisymmetry) {
  for (unsigned s = 0; s < 20; ++s) {
    const auto x1 = random_field(16, 30 + s), x2 = random_field(16, 60 + s);
    const double lhs = inner(x1, bilinear_conv(x1, x2, 16));
    const double rhs = -0.5 * inner(x2, nonlinearity_conv(x1, 16));
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(rhs)));
  }
}
