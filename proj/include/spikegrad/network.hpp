#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikegrad/kernels.hpp"

namespace spikegrad {

// Dense feedforward layer sizes: input, hidden..., output.
class Topology {
 public:
  Topology() = default;
  explicit Topology(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("topology: need at least 2 layers");
    for (auto s : sizes_)
      if (s == 0) throw std::invalid_argument("topology: layer sizes must be >= 1");
  }

  std::size_t num_layers() const { return sizes_.size(); }
  std::size_t size(std::size_t layer) const { return sizes_.at(layer); }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  std::size_t num_synapses() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) n += sizes_[l] * sizes_[l + 1];
    return n;
  }
  std::size_t num_adaptive_neurons() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) n += sizes_[l];
    return n;
  }

  bool operator==(const Topology&) const = default;

 private:
  std::vector<std::size_t> sizes_;
};

// Row-major dense matrix; rows index the presynaptic neuron.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const Matrix&) const = default;
};

// Everything the simulator needs. w[l] and d[l] connect layer l to l+1;
// adapt[l] holds A for the neurons of layer l+1.
struct Parameters {
  Topology topology;
  KernelSpec kernel = KernelSpec::double_exponential(20.0, 5.0);
  std::vector<Matrix> w;
  std::vector<Matrix> d;
  std::vector<std::vector<double>> adapt;
  double theta0 = 0.5;
  double tau_a = 30.0;
  double v_rest = 0.0;
  double window_T = 100.0;

  double weight(std::size_t post_layer, std::size_t pre, std::size_t post) const {
    return w[post_layer - 1](pre, post);
  }
  double delay(std::size_t post_layer, std::size_t pre, std::size_t post) const {
    return d[post_layer - 1](pre, post);
  }
  double adaptation_jump(std::size_t layer, std::size_t neuron) const {
    return adapt[layer - 1][neuron];
  }

  // Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    const auto& sizes = topology.sizes();
    if (sizes.size() < 2) throw std::invalid_argument("parameters: topology not set");
    if (w.size() != sizes.size() - 1 || d.size() != w.size() || adapt.size() != w.size())
      throw std::invalid_argument("parameters: layer count does not match topology");
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      if (w[l].rows != sizes[l] || w[l].cols != sizes[l + 1] || d[l].rows != sizes[l] ||
          d[l].cols != sizes[l + 1] || w[l].data.size() != sizes[l] * sizes[l + 1] ||
          d[l].data.size() != w[l].data.size() || adapt[l].size() != sizes[l + 1])
        throw std::invalid_argument("parameters: shape mismatch at layer " + std::to_string(l));
      for (double v : w[l].data)
        if (!std::isfinite(v)) throw std::invalid_argument("parameters: non-finite weight");
      for (double v : d[l].data)
        if (!(v >= 0.0 && v < window_T))
          throw std::invalid_argument("parameters: delay " + std::to_string(v) + " outside [0, T)");
      for (double v : adapt[l])
        if (!(v >= 0.0) || !std::isfinite(v))
          throw std::invalid_argument("parameters: adaptation jump must be >= 0");
    }
    if (!(theta0 > v_rest)) throw std::invalid_argument("parameters: theta0 must exceed v_rest");
    if (!(tau_a > 0.0)) throw std::invalid_argument("parameters: tau_a must be > 0");
    if (!(window_T > 0.0)) throw std::invalid_argument("parameters: window_T must be > 0");
  }

  bool operator==(const Parameters&) const = default;
};

struct InitRanges {
  double w_lo = 0.0;
  double w_hi = 1.0;
  double d_lo = 0.0;
  double d_hi = 5.0;
  double A_init = 0.5;
};

struct NeuronConfig {
  KernelSpec kernel = KernelSpec::double_exponential(20.0, 5.0);
  double theta0 = 0.5;
  double tau_a = 30.0;
  double v_rest = 0.0;
  double window_T = 100.0;
};

inline Parameters init_parameters(const Topology& topology, const InitRanges& ranges, std::uint64_t seed,
                                  const NeuronConfig& neuron = {}) {
  if (!(ranges.w_lo <= ranges.w_hi) || !(ranges.d_lo <= ranges.d_hi) || ranges.d_lo < 0.0)
    throw std::invalid_argument("init_parameters: invalid ranges");
  if (ranges.A_init < 0.0) throw std::invalid_argument("init_parameters: A_init must be >= 0");
  if (ranges.d_hi >= neuron.window_T) throw std::invalid_argument("init_parameters: delays must stay below T");

  Parameters p;
  p.topology = topology;
  p.kernel = neuron.kernel;
  p.theta0 = neuron.theta0;
  p.tau_a = neuron.tau_a;
  p.v_rest = neuron.v_rest;
  p.window_T = neuron.window_T;

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const auto& sizes = topology.sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix w(sizes[l], sizes[l + 1]);
    Matrix d(sizes[l], sizes[l + 1]);
    for (auto& v : w.data) v = uniform(ranges.w_lo, ranges.w_hi);
    for (auto& v : d.data) v = uniform(ranges.d_lo, ranges.d_hi);
    p.w.push_back(std::move(w));
    p.d.push_back(std::move(d));
    p.adapt.emplace_back(sizes[l + 1], ranges.A_init);
  }
  return p;
}

enum class ParamFamily { Weight, Delay, Adaptation };

inline std::string to_string(ParamFamily f) {
  switch (f) {
    case ParamFamily::Weight: return "w";
    case ParamFamily::Delay: return "d";
    case ParamFamily::Adaptation: return "A";
  }
  return "?";
}

// Addresses one trainable scalar. For Weight/Delay, (pre, post) index the
// synapse from layer `layer` to `layer + 1`; for Adaptation, `post` is the
// neuron of layer `layer + 1` and `pre` is unused.
struct ParamHandle {
  ParamFamily family;
  std::size_t layer;
  std::size_t pre;
  std::size_t post;

  std::string id() const {
    if (family == ParamFamily::Adaptation)
      return "A[" + std::to_string(layer) + "][" + std::to_string(post) + "]";
    return to_string(family) + "[" + std::to_string(layer) + "][" + std::to_string(pre) + "][" +
           std::to_string(post) + "]";
  }
};

inline double& param_ref(Parameters& p, const ParamHandle& h) {
  switch (h.family) {
    case ParamFamily::Weight: return p.w.at(h.layer)(h.pre, h.post);
    case ParamFamily::Delay: return p.d.at(h.layer)(h.pre, h.post);
    case ParamFamily::Adaptation: break;
  }
  return p.adapt.at(h.layer).at(h.post);
}

inline std::vector<ParamHandle> all_handles(const Topology& topo) {
  std::vector<ParamHandle> out;
  for (auto family : {ParamFamily::Weight, ParamFamily::Delay}) {
    for (std::size_t l = 0; l + 1 < topo.num_layers(); ++l)
      for (std::size_t i = 0; i < topo.size(l); ++i)
        for (std::size_t j = 0; j < topo.size(l + 1); ++j) out.push_back({family, l, i, j});
  }
  for (std::size_t l = 0; l + 1 < topo.num_layers(); ++l)
    for (std::size_t j = 0; j < topo.size(l + 1); ++j) out.push_back({ParamFamily::Adaptation, l, 0, j});
  return out;
}

struct SpikeEvent {
  std::size_t layer = 0;
  std::size_t neuron = 0;
  std::size_t ordinal = 0;  // f: 0-based index among this neuron's spikes
  double time = 0.0;

  bool operator==(const SpikeEvent&) const = default;
};

// One PSP contribution that was active in the segment that produced a spike.
struct ParentLink {
  std::size_t spike;  // index into Trace::spikes
  std::size_t pre;    // presynaptic neuron index in the previous layer
  double weight;
  double arrival;     // presynaptic spike time + delay

  bool operator==(const ParentLink&) const = default;
};

struct SpikeRecord {
  SpikeEvent event;
  std::vector<ParentLink> parents;
  std::optional<std::size_t> prev_own;
  double crossing_slope = 0.0;  // dV/dt - dtheta/dt at the spike
  double adaptation = 0.0;      // a_j(t^-), the threshold excess at the crossing
  double adapt_jump = 0.0;      // A_j in effect during the simulation
  bool jump_crossing = false;

  bool operator==(const SpikeRecord&) const = default;
};

// Causal record of one forward pass. Spikes are stored in processing order,
// which is non-decreasing in time and places every parent before its child.
struct Trace {
  KernelSpec kernel = KernelSpec::double_exponential(20.0, 5.0);
  double tau_a = 30.0;
  double window_T = 100.0;
  std::vector<std::size_t> layer_sizes;
  std::vector<SpikeRecord> spikes;
  std::vector<std::vector<std::vector<std::size_t>>> by_neuron;  // [layer][neuron] -> spike ids

  std::span<const std::size_t> spikes_of(std::size_t layer, std::size_t neuron) const {
    return by_neuron.at(layer).at(neuron);
  }

  std::optional<double> first_spike(std::size_t layer, std::size_t neuron) const {
    const auto& ids = by_neuron.at(layer).at(neuron);
    if (ids.empty()) return std::nullopt;
    return spikes[ids.front()].event.time;
  }

  // Per-neuron spike counts over the non-input layers, flattened.
  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    for (std::size_t l = 1; l < by_neuron.size(); ++l)
      for (const auto& ids : by_neuron[l]) out.push_back(ids.size());
    return out;
  }

  std::size_t count_in_layer(std::size_t layer) const {
    std::size_t n = 0;
    for (const auto& ids : by_neuron.at(layer)) n += ids.size();
    return n;
  }

  bool operator==(const Trace&) const = default;
};

struct GradientSet {
  std::vector<Matrix> g_w;
  std::vector<Matrix> g_d;
  std::vector<std::vector<double>> g_A;
  double loss_value = 0.0;

  static GradientSet zeros_like(const Parameters& p) {
    GradientSet g;
    for (const auto& m : p.w) g.g_w.emplace_back(m.rows, m.cols);
    for (const auto& m : p.d) g.g_d.emplace_back(m.rows, m.cols);
    for (const auto& a : p.adapt) g.g_A.emplace_back(a.size(), 0.0);
    return g;
  }

  static GradientSet zeros_like(const Topology& topo) {
    GradientSet g;
    for (std::size_t l = 0; l + 1 < topo.num_layers(); ++l) {
      g.g_w.emplace_back(topo.size(l), topo.size(l + 1));
      g.g_d.emplace_back(topo.size(l), topo.size(l + 1));
      g.g_A.emplace_back(topo.size(l + 1), 0.0);
    }
    return g;
  }

  double at(const ParamHandle& h) const {
    switch (h.family) {
      case ParamFamily::Weight: return g_w.at(h.layer)(h.pre, h.post);
      case ParamFamily::Delay: return g_d.at(h.layer)(h.pre, h.post);
      case ParamFamily::Adaptation: break;
    }
    return g_A.at(h.layer).at(h.post);
  }

  GradientSet& operator+=(const GradientSet& o) {
    for (std::size_t l = 0; l < g_w.size(); ++l) {
      for (std::size_t k = 0; k < g_w[l].data.size(); ++k) {
        g_w[l].data[k] += o.g_w[l].data[k];
        g_d[l].data[k] += o.g_d[l].data[k];
      }
      for (std::size_t k = 0; k < g_A[l].size(); ++k) g_A[l][k] += o.g_A[l][k];
    }
    loss_value += o.loss_value;
    return *this;
  }

  GradientSet& operator*=(double s) {
    for (std::size_t l = 0; l < g_w.size(); ++l) {
      for (auto& v : g_w[l].data) v *= s;
      for (auto& v : g_d[l].data) v *= s;
      for (auto& v : g_A[l]) v *= s;
    }
    loss_value *= s;
    return *this;
  }

  bool all_finite() const {
    auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    for (std::size_t l = 0; l < g_w.size(); ++l)
      if (!finite(g_w[l].data) || !finite(g_d[l].data) || !finite(g_A[l])) return false;
    return std::isfinite(loss_value);
  }

  bool operator==(const GradientSet&) const = default;
};

}  // namespace spikegrad
