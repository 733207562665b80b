#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "spikegrad/forward.hpp"
#include "test_util.hpp"

using namespace spikegrad;
using spikegrad::testing::constant_params;
using spikegrad::testing::random_net;

namespace {
const KernelSpec kCausal = KernelSpec::causal(20.0);
const KernelSpec kDouble = KernelSpec::double_exponential(20.0, 5.0);
}  // namespace

TEST(MembranePotential, Examples) {
  Segment seg;
  seg.kernel = kCausal;
  EXPECT_EQ(membrane_potential(seg, 42.0), 0.0);
  seg.contributions = {{1.0, 10.0}};
  EXPECT_NEAR(membrane_potential(seg, 30.0), 0.367879, 1e-6);
  seg.contributions = {{0.5, 10.0}, {0.5, 10.0}};
  EXPECT_DOUBLE_EQ(membrane_potential(seg, 10.0), 1.0);
}

TEST(Threshold, Examples) {
  AdaptationState s;
  s.theta0 = 0.5;
  s.tau_a = 30.0;
  EXPECT_EQ(threshold_value(s, 17.0), 0.5);
  s.on_spike(10.0, 0.0);
  EXPECT_EQ(threshold_value(s, 55.0), 0.5);

  AdaptationState a;
  a.on_spike(10.0, 0.7);
  EXPECT_DOUBLE_EQ(threshold_value(a, 10.0), 0.5 + 0.7);
  EXPECT_NEAR(threshold_value(a, 40.0), 0.5 + 0.7 * std::exp(-1.0), 1e-15);
}

TEST(Threshold, JumpsAccumulate) {
  AdaptationState a;
  a.on_spike(0.0, 1.0);
  a.on_spike(30.0, 1.0);
  EXPECT_NEAR(a.level(30.0), 1.0 + std::exp(-1.0), 1e-15);
}

TEST(FindCrossing, SubthresholdHasNone) {
  Segment seg;
  seg.kernel = kDouble;
  seg.contributions = {{0.4, 0.0}};
  AdaptationState a;
  EXPECT_FALSE(find_crossing(seg, a, 0.0, 100.0));
}

TEST(FindCrossing, DoubleExponentialMatchesGridScan) {
  Segment seg;
  seg.kernel = kDouble;
  const double w = 2.0 * 0.5 / psp(kDouble, kDouble.peak_time());
  seg.contributions = {{w, 0.0}};
  AdaptationState a;
  const auto c = find_crossing(seg, a, 0.0, 100.0);
  ASSERT_TRUE(c);
  EXPECT_FALSE(c->jump);
  EXPECT_GT(c->time, 0.0);
  EXPECT_LT(c->time, kDouble.peak_time());
  // Grid scan of V - theta with step 1e-5 ms.
  const double step = 1e-5;
  double scan = -1.0;
  for (long k = 1; k < 10'000'000; ++k) {
    const double t = static_cast<double>(k) * step;
    if (w * psp(kDouble, t) - 0.5 >= 0.0) {
      scan = t;
      break;
    }
  }
  ASSERT_GT(scan, 0.0);
  EXPECT_LE(c->time, scan);
  EXPECT_GT(c->time, scan - step);
}

TEST(FindCrossing, CausalJumpAtArrival) {
  Segment seg;
  seg.kernel = kCausal;
  AdaptationState a;
  seg.contributions = {{1.0, 12.0}};
  const auto c = find_crossing(seg, a, 11.0, 12.0);
  ASSERT_TRUE(c);
  EXPECT_EQ(c->time, 12.0);
  EXPECT_TRUE(c->jump);
}

TEST(Simulate, ZeroWeightsAreSilent) {
  const auto p = constant_params({3, 4, 2}, kDouble, 0.0, 1.0, 0.5);
  const Trace t = simulate(p, {{1.0, 5.0}, {2.0}, {30.0}});
  EXPECT_EQ(t.count_in_layer(1), 0u);
  EXPECT_EQ(t.count_in_layer(2), 0u);
  EXPECT_EQ(t.spikes.size(), 4u);
}

TEST(Simulate, OneToOneCausalSpikesAtArrival) {
  const auto p = constant_params({1, 1}, kCausal, 1.0, 3.0, 0.0);
  const Trace t = simulate(p, {{10.0}});
  ASSERT_EQ(t.spikes_of(1, 0).size(), 1u);
  const auto& rec = t.spikes[t.spikes_of(1, 0)[0]];
  EXPECT_EQ(rec.event.time, 13.0);
  EXPECT_TRUE(rec.jump_crossing);
  ASSERT_EQ(rec.parents.size(), 1u);
  EXPECT_EQ(rec.parents[0].spike, t.spikes_of(0, 0)[0]);
  EXPECT_EQ(rec.parents[0].arrival, 13.0);
}

TEST(Simulate, RejectsBadInputs) {
  const auto p = constant_params({2, 1}, kDouble, 1.0, 1.0, 0.0);
  EXPECT_THROW(simulate(p, {{1.0}}), std::invalid_argument);
  EXPECT_THROW(simulate(p, {{1.0}, {100.0}}), std::invalid_argument);
  EXPECT_THROW(simulate(p, {{-0.5}, {1.0}}), std::invalid_argument);
}

TEST(Simulate, ResetClearsContributions) {
  // A strong input makes the neuron fire; later it needs fresh input to fire again.
  const auto p = constant_params({1, 1}, kDouble, 2.0, 0.0, 0.0);
  const Trace t = simulate(p, {{0.0}});
  ASSERT_EQ(t.spikes_of(1, 0).size(), 1u);
  const Trace t2 = simulate(p, {{0.0, 50.0}});
  ASSERT_EQ(t2.spikes_of(1, 0).size(), 2u);
  EXPECT_NEAR(t2.spikes[t2.spikes_of(1, 0)[1]].event.time - 50.0, t.spikes[t.spikes_of(1, 0)[0]].event.time, 1e-12);
}

TEST(Simulate, AdaptationDelaysSecondSpike) {
  auto p = constant_params({1, 1}, kDouble, 2.0, 0.0, 0.0);
  const Trace plain = simulate(p, {{0.0, 20.0}});
  p.adapt[0][0] = 0.5;
  const Trace adapted = simulate(p, {{0.0, 20.0}});
  ASSERT_EQ(plain.spikes_of(1, 0).size(), 2u);
  ASSERT_EQ(adapted.spikes_of(1, 0).size(), 2u);
  EXPECT_EQ(plain.spikes[plain.spikes_of(1, 0)[0]].event.time, adapted.spikes[adapted.spikes_of(1, 0)[0]].event.time);
  EXPECT_GT(adapted.spikes[adapted.spikes_of(1, 0)[1]].event.time, plain.spikes[plain.spikes_of(1, 0)[1]].event.time);
}

// Properties over random networks.
class SimulateProperties : public ::testing::TestWithParam<int> {};

TEST_P(SimulateProperties, CausalOrderedAndOnThreshold) {
  const KernelSpec& k = GetParam() % 2 ? kCausal : kDouble;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto net = random_net({3, 5, 3}, k, 1000 * GetParam() + seed, 1.0, 1.0);
    Trace t;
    try {
      t = simulate(net.params, net.inputs);
    } catch (const DegenerateCrossing&) {
      continue;
    }
    double last = -1.0;
    for (std::size_t s = 0; s < t.spikes.size(); ++s) {
      const auto& rec = t.spikes[s];
      EXPECT_GE(rec.event.time, last);
      last = rec.event.time;
      EXPECT_LE(rec.event.time, net.params.window_T);
      for (const auto& par : rec.parents) {
        EXPECT_LT(par.spike, s);
        EXPECT_LE(par.arrival, rec.event.time);
        EXPECT_EQ(t.spikes[par.spike].event.layer + 1, rec.event.layer);
        EXPECT_DOUBLE_EQ(par.arrival, t.spikes[par.spike].event.time + net.params.d[rec.event.layer - 1](par.pre, rec.event.neuron));
      }
      if (rec.event.layer == 0) continue;
      const double g = spikegrad::testing::excess_from_trace(t, net.params, s, rec.event.time);
      if (rec.jump_crossing) {
        EXPECT_GE(g, -1e-12);
      } else {
        EXPECT_NEAR(g, 0.0, 1e-10);
        // Below threshold just before the crossing.
        EXPECT_LT(spikegrad::testing::excess_from_trace(t, net.params, s, rec.event.time - 1e-6), 0.0);
      }
    }
  }
}

TEST_P(SimulateProperties, TimeShiftEquivariance) {
  const KernelSpec& k = GetParam() % 2 ? kCausal : kDouble;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto net = random_net({3, 4, 2}, k, 7000 + 100 * GetParam() + seed);
    net.params.window_T = 200.0;
    const double shift = 13.25;
    InputSpikes shifted = net.inputs;
    for (auto& tr : shifted)
      for (auto& x : tr) x += shift;
    Trace a, b;
    try {
      a = simulate(net.params, net.inputs);
      b = simulate(net.params, shifted);
    } catch (const DegenerateCrossing&) {
      continue;
    }
    // Spikes landing beyond the original window exist only in the shifted run.
    ASSERT_EQ(a.counts(), b.counts()) << "seed " << seed;
    for (std::size_t s = 0; s < a.spikes.size(); ++s) {
      const auto& e = a.spikes[s].event;
      const double tb = b.spikes[b.spikes_of(e.layer, e.neuron)[e.ordinal]].event.time;
      EXPECT_NEAR(tb, e.time + shift, 1e-9);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Kernels, SimulateProperties, ::testing::Values(0, 1, 2, 3));

TEST(Simulate, Deterministic) {
  const auto net = random_net({4, 6, 3}, kDouble, 99);
  EXPECT_EQ(simulate(net.params, net.inputs).spikes, simulate(net.params, net.inputs).spikes);
}
