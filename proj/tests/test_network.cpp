#include <gtest/gtest.h>

#include <set>

#include "spikegrad/network.hpp"

using namespace spikegrad;

TEST(Topology, Validation) {
  EXPECT_THROW(Topology({3}), std::invalid_argument);
  EXPECT_THROW(Topology({3, 0, 2}), std::invalid_argument);
  const Topology t({3, 4, 2});
  EXPECT_EQ(t.num_synapses(), 3u * 4 + 4 * 2);
  EXPECT_EQ(t.num_adaptive_neurons(), 6u);
}

TEST(InitParameters, RangesAndInitialAdaptation) {
  const auto p = init_parameters(Topology({3, 2}), InitRanges{0.0, 1.0, 0.0, 5.0, 0.5}, 7);
  for (double w : p.w[0].data) {
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.0);
  }
  for (double d : p.d[0].data) {
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 5.0);
  }
  for (double a : p.adapt[0]) EXPECT_EQ(a, 0.5);
}

TEST(InitParameters, DegenerateRangeIsExact) {
  const auto p = init_parameters(Topology({4, 3, 2}), InitRanges{0.3, 0.3, 1.0, 1.0, 0.5}, 1);
  for (const auto& m : p.w)
    for (double w : m.data) EXPECT_EQ(w, 0.3);
}

TEST(InitParameters, SameSeedIsBitIdentical) {
  const Topology t({5, 6, 3});
  const auto a = init_parameters(t, InitRanges{}, 42), b = init_parameters(t, InitRanges{}, 42);
  EXPECT_EQ(a.w[0].data, b.w[0].data);
  EXPECT_EQ(a.d[1].data, b.d[1].data);
  EXPECT_NE(a.w[0].data, init_parameters(t, InitRanges{}, 43).w[0].data);
}

TEST(InitParameters, ShapeAlgebra) {
  for (const auto& sizes : std::vector<std::vector<std::size_t>>{{2, 1}, {3, 4, 2}, {5, 7, 6, 3}}) {
    const Topology t(sizes);
    const auto p = init_parameters(t, InitRanges{}, 1);
    std::size_t nw = 0, nd = 0, na = 0;
    for (const auto& m : p.w) nw += m.data.size();
    for (const auto& m : p.d) nd += m.data.size();
    for (const auto& a : p.adapt) na += a.size();
    EXPECT_EQ(nw, t.num_synapses());
    EXPECT_EQ(nd, t.num_synapses());
    EXPECT_EQ(na, t.num_adaptive_neurons());
    EXPECT_EQ(all_handles(t).size(), 2 * t.num_synapses() + t.num_adaptive_neurons());
  }
}

TEST(Parameters, ValidateRejectsBadValues) {
  auto p = init_parameters(Topology({2, 2}), InitRanges{}, 1);
  EXPECT_NO_THROW(p.validate());
  auto q = p;
  q.d[0](0, 1) = -0.1;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = p;
  q.adapt[0][1] = -1.0;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = p;
  q.theta0 = q.v_rest;
  EXPECT_THROW(q.validate(), std::invalid_argument);
  q = p;
  q.w[0].data.pop_back();
  EXPECT_THROW(q.validate(), std::invalid_argument);
}

TEST(ParamHandle, IdsAreUniqueAndRefsAlias) {
  auto p = init_parameters(Topology({3, 4, 2}), InitRanges{}, 1);
  std::set<std::string> ids;
  for (const auto& h : all_handles(p.topology)) {
    EXPECT_TRUE(ids.insert(h.id()).second) << h.id();
    param_ref(p, h) = 0.25;
  }
  for (const auto& m : p.w)
    for (double v : m.data) EXPECT_EQ(v, 0.25);
  for (const auto& a : p.adapt)
    for (double v : a) EXPECT_EQ(v, 0.25);
}

TEST(GradientSet, Arithmetic) {
  const Topology t({2, 3});
  auto a = GradientSet::zeros_like(t);
  a.g_w[0](1, 2) = 2.0;
  a.g_A[0][1] = 4.0;
  auto b = a;
  b += a;
  b *= 0.25;
  EXPECT_EQ(b.g_w[0](1, 2), 1.0);
  EXPECT_EQ(b.g_A[0][1], 2.0);
  EXPECT_TRUE(b.all_finite());
  b.g_d[0](0, 0) = std::nan("");
  EXPECT_FALSE(b.all_finite());
}
