#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "spikegrad/loss.hpp"

using namespace spikegrad;

namespace {
LossSpec ttfs(double xi, double penalty = 0.1) {
  LossSpec s;
  s.xi = xi;
  s.no_spike_penalty = penalty;
  return s;
}
}  // namespace

TEST(Ttfs, TwoOutputExample) {
  const auto r = ttfs_cross_entropy({10.0, 20.0}, 0, ttfs(10.0), 100.0);
  EXPECT_NEAR(r.probabilities[0], 0.731059, 1e-6);
  EXPECT_NEAR(r.loss, 0.313262, 1e-6);
  EXPECT_NEAR(r.probabilities[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(Ttfs, TiesGiveLogK) {
  for (std::size_t k : {2u, 3u, 7u}) {
    std::vector<std::optional<double>> t(k, 33.0);
    const auto r = ttfs_cross_entropy(t, 1, ttfs(20.0), 100.0);
    EXPECT_NEAR(r.loss, std::log(static_cast<double>(k)), 1e-15);
    EXPECT_NEAR(std::accumulate(r.adjoints.begin(), r.adjoints.end(), 0.0), 0.0, 1e-17);
  }
}

// dL/dt_c by central differences on the closed form.
TEST(Ttfs, AdjointsMatchFiniteDifferenceAndSumToZero) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> when(0.0, 90.0);
  for (int n = 0; n < 200; ++n) {
    std::vector<std::optional<double>> t(4);
    for (auto& x : t) x = when(rng);
    const std::size_t label = n % 4;
    const auto r = ttfs_cross_entropy(t, label, ttfs(20.0), 100.0);
    double sum = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
      auto a = t, b = t;
      const double h = 1e-5;
      *a[c] += h;
      *b[c] -= h;
      const double fd = (ttfs_cross_entropy(a, label, ttfs(20.0), 100.0).loss -
                         ttfs_cross_entropy(b, label, ttfs(20.0), 100.0).loss) /
                        (2 * h);
      EXPECT_NEAR(r.adjoints[c], fd, 1e-9);
      sum += r.adjoints[c];
    }
    EXPECT_NEAR(sum, 0.0, 1e-15);
    // Label adjoint is positive: spiking later raises the loss.
    EXPECT_GT(r.adjoints[label], 0.0);
  }
}

TEST(Ttfs, ShiftInvariance) {
  const auto a = ttfs_cross_entropy({10.0, 14.0, 31.0}, 2, ttfs(20.0), 100.0);
  const auto b = ttfs_cross_entropy({40.0, 44.0, 61.0}, 2, ttfs(20.0), 100.0);
  EXPECT_NEAR(a.loss, b.loss, 1e-14);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(a.adjoints[c], b.adjoints[c], 1e-16);
}

TEST(Ttfs, SilentOutputsAreClampedAndPenalised) {
  const auto r = ttfs_cross_entropy({10.0, std::nullopt}, 0, ttfs(10.0, 0.1), 100.0);
  EXPECT_EQ(r.silent, 1u);
  EXPECT_EQ(r.adjoints[1], 0.0);
  const double expected = std::log(1.0 + std::exp(-9.0)) + 0.1;
  EXPECT_NEAR(r.loss, expected, 1e-14);
}

TEST(Ttfs, LargeTimeGapsStayFinite) {
  const auto r = ttfs_cross_entropy({0.0, 1e4}, 1, ttfs(1.0), 1e5);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_NEAR(r.loss, 1e4, 1e-6);
}

TEST(Ttfs, LabelOutOfRangeThrows) {
  EXPECT_THROW(ttfs_cross_entropy({1.0, 2.0}, 2, ttfs(10.0), 100.0), std::invalid_argument);
}

TEST(Mse, Examples) {
  LossSpec s;
  s.kind = LossKind::SpikeTimeMSE;
  auto r = spike_time_mse({{3.0, 8.0}}, {{3.0, 8.0}}, s);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.adjoints[0], (std::vector<double>{0.0, 0.0}));
  r = spike_time_mse({{12.0}}, {{10.0}}, s);
  EXPECT_EQ(r.loss, 4.0);
  EXPECT_EQ(r.adjoints[0][0], 4.0);
  s.no_spike_penalty = 1.0;
  r = spike_time_mse({{12.0}}, {{10.0, 30.0}}, s);
  EXPECT_EQ(r.loss, 5.0);
}

TEST(Mse, NeuronCountMismatchThrows) {
  EXPECT_THROW(spike_time_mse({{1.0}}, {{1.0}, {2.0}}, LossSpec{}), std::invalid_argument);
}

TEST(LossSpec, Validation) {
  LossSpec s;
  s.xi = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.xi = 1.0;
  s.no_spike_penalty = -1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}
