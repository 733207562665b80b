#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikegrad/network.hpp"

namespace spikegrad {

enum class LossKind { TTFSCrossEntropy, SpikeTimeMSE };

inline std::string to_string(LossKind k) { return k == LossKind::TTFSCrossEntropy ? "ttfs" : "mse"; }

struct LossSpec {
  LossKind kind = LossKind::TTFSCrossEntropy;
  double xi = 20.0;              // softmax temperature in ms (TTFS only)
  double no_spike_penalty = 0.1; // per silent output (TTFS) / per unmatched spike (MSE)

  void validate() const {
    if (!(xi > 0.0)) throw std::invalid_argument("loss: xi must be > 0");
    if (!(no_spike_penalty >= 0.0)) throw std::invalid_argument("loss: no_spike_penalty must be >= 0");
  }
};

struct TtfsResult {
  double loss = 0.0;
  std::vector<double> adjoints;  // dL/dt_c per output; 0 for silent outputs
  std::vector<double> probabilities;
  std::size_t silent = 0;
};

// Softmax over -t_c/xi with silent outputs clamped to `no_spike_time`.
inline TtfsResult ttfs_cross_entropy(const std::vector<std::optional<double>>& first_spikes, std::size_t label,
                                     const LossSpec& spec, double no_spike_time) {
  const std::size_t k = first_spikes.size();
  if (label >= k)
    throw std::invalid_argument("ttfs_cross_entropy: label " + std::to_string(label) + " out of range for " +
                                std::to_string(k) + " outputs");
  TtfsResult r;
  std::vector<double> t(k);
  for (std::size_t c = 0; c < k; ++c) {
    t[c] = first_spikes[c].value_or(no_spike_time);
    if (!first_spikes[c]) ++r.silent;
  }
  const double t_min = *std::min_element(t.begin(), t.end());
  r.probabilities.resize(k);
  double z = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    r.probabilities[c] = std::exp(-(t[c] - t_min) / spec.xi);
    z += r.probabilities[c];
  }
  for (auto& p : r.probabilities) p /= z;
  r.loss = (t[label] - t_min) / spec.xi + std::log(z) + spec.no_spike_penalty * static_cast<double>(r.silent);
  r.adjoints.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (!first_spikes[c]) continue;
    r.adjoints[c] = ((c == label ? 1.0 : 0.0) - r.probabilities[c]) / spec.xi;
  }
  return r;
}

struct MseResult {
  double loss = 0.0;
  std::vector<std::vector<double>> adjoints;  // per output neuron, per actual spike
};

// k-th actual spike of a neuron pairs with its k-th target spike.
inline MseResult spike_time_mse(const std::vector<std::vector<double>>& actual,
                                const std::vector<std::vector<double>>& target, const LossSpec& spec) {
  if (actual.size() != target.size()) throw std::invalid_argument("spike_time_mse: neuron count mismatch");
  MseResult r;
  r.adjoints.resize(actual.size());
  for (std::size_t n = 0; n < actual.size(); ++n) {
    const auto& a = actual[n];
    const auto& g = target[n];
    r.adjoints[n].assign(a.size(), 0.0);
    const std::size_t paired = std::min(a.size(), g.size());
    for (std::size_t k = 0; k < paired; ++k) {
      const double diff = a[k] - g[k];
      r.loss += diff * diff;
      r.adjoints[n][k] = 2.0 * diff;
    }
    const std::size_t mismatch = a.size() > g.size() ? a.size() - g.size() : g.size() - a.size();
    r.loss += spec.no_spike_penalty * static_cast<double>(mismatch);
  }
  return r;
}

struct TraceLoss {
  double loss = 0.0;
  std::vector<double> adjoints;  // per recorded spike
  std::size_t silent_outputs = 0;
};

// Loss of one forward pass and its timing adjoints laid out per trace spike.
// `targets` is only read by the MSE loss.
inline TraceLoss trace_loss(const Trace& trace, std::size_t label, const std::vector<std::vector<double>>& targets,
                            const LossSpec& spec) {
  const std::size_t out_layer = trace.layer_sizes.size() - 1;
  const std::size_t n_out = trace.layer_sizes.back();
  TraceLoss r;
  r.adjoints.assign(trace.spikes.size(), 0.0);
  if (spec.kind == LossKind::TTFSCrossEntropy) {
    std::vector<std::optional<double>> first(n_out);
    for (std::size_t c = 0; c < n_out; ++c) first[c] = trace.first_spike(out_layer, c);
    auto t = ttfs_cross_entropy(first, label, spec, trace.window_T);
    r.loss = t.loss;
    r.silent_outputs = t.silent;
    for (std::size_t c = 0; c < n_out; ++c) {
      const auto ids = trace.spikes_of(out_layer, c);
      if (!ids.empty()) r.adjoints[ids.front()] = t.adjoints[c];
    }
    return r;
  }
  if (targets.size() != n_out)
    throw std::invalid_argument("trace_loss: MSE loss needs one target train per output neuron");
  std::vector<std::vector<double>> actual(n_out);
  for (std::size_t c = 0; c < n_out; ++c)
    for (auto id : trace.spikes_of(out_layer, c)) actual[c].push_back(trace.spikes[id].event.time);
  auto m = spike_time_mse(actual, targets, spec);
  r.loss = m.loss;
  for (std::size_t c = 0; c < n_out; ++c) {
    const auto ids = trace.spikes_of(out_layer, c);
    for (std::size_t k = 0; k < ids.size(); ++k) r.adjoints[ids[k]] = m.adjoints[c][k];
    if (ids.empty()) ++r.silent_outputs;
  }
  return r;
}

}  // namespace spikegrad
