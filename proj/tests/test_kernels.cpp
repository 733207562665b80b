#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spikegrad/kernels.hpp"

using namespace spikegrad;

TEST(Kernels, CausalExponentialValues) {
  const auto k = KernelSpec::causal(20.0);
  EXPECT_EQ(psp(k, 0.0), 1.0);
  EXPECT_EQ(psp(k, -5.0), 0.0);
  EXPECT_NEAR(psp(k, 20.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(psp(k, 20.0), 0.367879, 1e-6);
}

TEST(Kernels, DoubleExponentialPeakIsOne) {
  const auto k = KernelSpec::double_exponential(20.0, 5.0);
  const double peak = (20.0 * 5.0 / 15.0) * std::log(4.0);
  EXPECT_NEAR(k.peak_time(), peak, 1e-12);
  EXPECT_NEAR(psp(k, k.peak_time()), 1.0, 1e-15);
  EXPECT_NEAR(psp_deriv(k, k.peak_time()), 0.0, 1e-15);
  for (double tau = 0.0; tau < 100.0; tau += 0.37) EXPECT_LE(psp(k, tau), 1.0 + 1e-15);
}

TEST(Kernels, Derivatives) {
  const auto k = KernelSpec::causal(20.0);
  EXPECT_NEAR(psp_deriv(k, 20.0), -std::exp(-1.0) / 20.0, 1e-16);
  EXPECT_NEAR(psp_deriv(k, 20.0), -0.0183940, 1e-7);
  EXPECT_EQ(psp_deriv(k, -1.0), 0.0);
  EXPECT_EQ(psp_deriv(KernelSpec::double_exponential(20.0, 5.0), -1.0), 0.0);
}

TEST(Kernels, JumpPointReportsRightLimit) {
  const auto k = KernelSpec::causal(20.0);
  EXPECT_TRUE(is_jump_point(k, 0.0));
  EXPECT_FALSE(is_jump_point(k, 1e-9));
  EXPECT_EQ(psp_deriv(k, 0.0), -1.0 / 20.0);
  EXPECT_FALSE(is_jump_point(KernelSpec::double_exponential(20.0, 5.0), 0.0));
}

TEST(Kernels, RejectsInvalidConstants) {
  EXPECT_THROW(KernelSpec::causal(0.0), std::invalid_argument);
  EXPECT_THROW(KernelSpec::causal(-1.0), std::invalid_argument);
  EXPECT_THROW(KernelSpec::double_exponential(20.0, 20.0), std::invalid_argument);
  EXPECT_THROW(KernelSpec::double_exponential(20.0, 25.0), std::invalid_argument);
  EXPECT_THROW(KernelSpec::double_exponential(20.0, 0.0), std::invalid_argument);
}

TEST(Kernels, CausalityAndContinuity) {
  for (const auto& k : {KernelSpec::causal(20.0), KernelSpec::double_exponential(20.0, 5.0)}) {
    for (double tau = -50.0; tau < 0.0; tau += 0.5) {
      EXPECT_EQ(psp(k, tau), 0.0);
      EXPECT_EQ(psp_deriv(k, tau), 0.0);
    }
  }
  EXPECT_EQ(psp(KernelSpec::double_exponential(20.0, 5.0), 0.0), 0.0);
}

TEST(Kernels, CausalMonotoneDecay) {
  const auto k = KernelSpec::causal(20.0);
  double prev = psp(k, 0.0);
  for (double tau = 0.1; tau < 200.0; tau += 0.1) {
    const double v = psp(k, tau);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

// Property: centered differences agree with the analytic slope.
TEST(Kernels, DerivativeMatchesCenteredDifference) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tm(5.0, 40.0), frac(0.05, 0.9), tau_dist(0.01, 100.0);
  const double h = 1e-5;
  for (int n = 0; n < 500; ++n) {
    const double tau_m = tm(rng);
    for (const auto& k : {KernelSpec::causal(tau_m), KernelSpec::double_exponential(tau_m, frac(rng) * tau_m)}) {
      const double tau = tau_dist(rng);
      const double fd = (psp(k, tau + h) - psp(k, tau - h)) / (2 * h);
      const double an = psp_deriv(k, tau);
      // Away from stationary points a relative check; near the peak an absolute one.
      EXPECT_LE(std::fabs(fd - an), 1e-7 * std::max(std::fabs(an), 1e-2)) << "tau=" << tau;
    }
  }
}
