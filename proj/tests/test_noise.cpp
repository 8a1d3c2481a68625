#include <cmath>

#include <gtest/gtest.h>

#include "sburgers/noise.hpp"

using namespace sburgers;

TEST(CovarianceModel, RejectsNonTraceClass) {
  EXPECT_THROW(CovarianceModel(0.9, 1.0, 8), std::invalid_argument);
  EXPECT_THROW(CovarianceModel(1.0, 1.0, 8), std::invalid_argument);
  EXPECT_THROW(CovarianceModel(2.0, -1.0, 8), std::invalid_argument);
  EXPECT_THROW(CovarianceModel(2.0, 1.0, 0), std::invalid_argument);
  EXPECT_THROW(CovarianceModel(2.0, 1.0, 4, {{1, 5, 0.1}}), std::invalid_argument);
}

TEST(CovarianceModel, Eigenvalues) {
  const CovarianceModel m(2.0, 3.0, 4);
  EXPECT_DOUBLE_EQ(m.eigenvalue(1), 3.0);
  EXPECT_DOUBLE_EQ(m.eigenvalue(2), 0.75);
  for (std::size_t k = 1; k <= 4; ++k) EXPECT_GE(m.eigenvalue(k), 0.0);
}

TEST(CovarianceModel, RotationsAreOrthogonal) {
  const CovarianceModel m(2.0, 1.0, 16, {{1, 2, 0.3}, {2, 5, -1.1}, {3, 16, 2.0}});
  EXPECT_LE(m.orthogonality_defect(), 1e-12);
  EXPECT_FALSE(m.commutes_with_laplacian());
}

TEST(Trace, Values) {
  EXPECT_DOUBLE_EQ(trace(CovarianceModel(2.0, 1.0, 1)), 1.0);
  EXPECT_NEAR(trace(CovarianceModel(2.0, 1.0, 4)), 1.423611, 1e-6);
  EXPECT_EQ(trace(CovarianceModel(2.0, 0.0, 4)), 0.0);
}

TEST(ProjectedTrace, Values) {
  const CovarianceModel m(2.0, 1.0, 4);
  EXPECT_DOUBLE_EQ(projected_trace(m, 4), trace(m));
  EXPECT_DOUBLE_EQ(projected_trace(m, 10), trace(m));
  EXPECT_NEAR(projected_trace(m, 2), 1.25, 1e-15);
}

TEST(ProjectedTrace, RotatedWithinBounds) {
  const CovarianceModel m(2.0, 1.0, 8, {{1, 7, 0.7}, {2, 3, 0.4}});
  for (std::size_t M = 1; M <= 8; ++M) {
    const double p = projected_trace(m, M);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, trace(m) * (1 + 1e-14));
  }
  EXPECT_NEAR(projected_trace(m, 8), trace(m), 1e-14);
}

TEST(SampleIncrement, InjectedOnes) {
  // brownian_first puts dB_k = sqrt(q_k dt) xi_k on lane 0
  const CovarianceModel m(2.0, 1.0, 6);
  const NoiseSampler s(m, 1.0, LaneOrder::brownian_first);
  std::vector<std::vector<double>> normals(s.lanes());
  for (std::size_t l = 0; l < s.lanes(); ++l) normals[l].assign(s.lane_length(l), 1.0);
  std::vector<double> brownian(6), convolved(6);
  s.assemble(normals, brownian, convolved);
  for (std::size_t k = 1; k <= 6; ++k) EXPECT_NEAR(brownian[k - 1], 1.0 / k, 1e-15);
}

TEST(SampleIncrement, ProjectionCoupling) {
  const CovarianceModel m(2.0, 1.0, 64);
  for (std::uint64_t step = 0; step < 20; ++step) {
    const NoiseStream st{11, 3, step};
    EXPECT_EQ(truncate(sample_increment(m, 0.01, st, 64), 16), sample_increment(m, 0.01, st, 16));
  }
}

TEST(SampleIncrement, CouplingWithRotations) {
  const CovarianceModel m(2.0, 1.0, 32, {{1, 9, 0.5}, {4, 20, 1.2}});
  const NoiseSampler s(m, 0.01);
  for (std::uint64_t step = 0; step < 10; ++step) {
    const NoiseStream st{5, 0, step};
    const auto fine = s.sample(st, 32);
    const auto coarse = s.sample(st, 8);
    EXPECT_EQ(coarse.brownian, truncate(fine.brownian, 8));
    EXPECT_EQ(coarse.convolved, truncate(fine.convolved, 8));
  }
}

TEST(SampleIncrement, RestrictedModelKeepsPrefix) {
  const CovarianceModel m(2.0, 1.0, 256);
  const NoiseSampler full(m, 0.01), small(m.restricted(16), 0.01);
  const NoiseStream st{9, 1, 4};
  EXPECT_EQ(full.sample(st, 16).brownian, small.sample(st, 16).brownian);
  EXPECT_EQ(full.sample(st, 16).convolved, small.sample(st, 16).convolved);
}

TEST(SampleIncrement, SecondMomentMatchesProjectedTrace) {
  const double dt = 0.01;
  const std::size_t M = 8, N = 100000;
  for (const auto& m : {CovarianceModel(2.0, 1.0, 16), CovarianceModel(1.5, 2.0, 16, {{2, 12, 0.8}})}) {
    const NoiseSampler s(m, dt, LaneOrder::brownian_first);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const auto inc = s.sample(NoiseStream{77, i, 0}, M).brownian;
      const double v = inner(inc, inc);
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / N;
    const double se = std::sqrt((sum2 / N - mean * mean) / N);
    EXPECT_NEAR(mean, dt * projected_trace(m, M), 3.0 * se);
  }
}

// The stochastic convolution of mode k has variance q_k (1 - e^{-2 lambda dt}) / (2 lambda).
TEST(NoiseSampler, ConvolutionVariance) {
  const double dt = 0.05;
  const std::size_t N = 50000;
  const CovarianceModel m(2.0, 1.0, 4);
  const NoiseSampler s(m, dt);
  std::vector<double> acc(4, 0.0), acc_cross(4, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const auto inc = s.sample(NoiseStream{1, i, 0}, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      acc[k] += inc.convolved[k] * inc.convolved[k];
      acc_cross[k] += inc.convolved[k] * inc.brownian[k];
    }
  }
  for (std::size_t k = 1; k <= 4; ++k) {
    const double lam = std::pow(pi * k, 2);
    const double var = m.eigenvalue(k) * -std::expm1(-2 * lam * dt) / (2 * lam);
    const double cov = m.eigenvalue(k) * -std::expm1(-lam * dt) / lam;
    EXPECT_NEAR(acc[k - 1] / N, var, 4.0 * var * std::sqrt(2.0 / N));
    EXPECT_NEAR(acc_cross[k - 1] / N, cov, 4.0 * std::sqrt(var * m.eigenvalue(k) * dt * 2.0 / N));
  }
}

TEST(NoiseSampler, LaneOrdersShareLaw) {
  const CovarianceModel m(2.0, 1.0, 3);
  const NoiseSampler a(m, 0.1, LaneOrder::brownian_first), b(m, 0.1, LaneOrder::convolution_first);
  const std::size_t N = 40000;
  double va = 0, vb = 0;
  for (std::size_t i = 0; i < N; ++i) {
    va += std::pow(a.sample(NoiseStream{2, i, 0}, 1).brownian[0], 2);
    vb += std::pow(b.sample(NoiseStream{2, i, 0}, 1).brownian[0], 2);
  }
  EXPECT_NEAR(va / N, 0.1, 0.1 * 4 * std::sqrt(2.0 / N));
  EXPECT_NEAR(vb / N, 0.1, 0.1 * 4 * std::sqrt(2.0 / N));
}
