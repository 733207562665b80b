#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "spikegrad/forward.hpp"
#include "spikegrad/network.hpp"

namespace spikegrad::testing {

inline Parameters constant_params(std::vector<std::size_t> sizes, const KernelSpec& kernel, double w, double d,
                                  double A, double theta0 = 0.5) {
  NeuronConfig n;
  n.kernel = kernel;
  n.theta0 = theta0;
  return init_parameters(Topology(std::move(sizes)), InitRanges{w, w, d, d, A}, 1, n);
}

struct RandomNet {
  Parameters params;
  InputSpikes inputs;
};

// Random network plus input volley, in the regime used throughout the tests.
inline RandomNet random_net(std::vector<std::size_t> sizes, const KernelSpec& kernel, std::uint64_t seed,
                            double w_hi = 1.0, double A_hi = 1.0, int max_spikes = 3, double t_hi = 40.0) {
  std::mt19937_64 rng(seed);
  NeuronConfig n;
  n.kernel = kernel;
  RandomNet r;
  r.params = init_parameters(Topology(std::move(sizes)), InitRanges{0.0, w_hi, 0.5, 5.0, 0.0}, rng(), n);
  std::uniform_real_distribution<double> a(0.0, A_hi), when(0.0, t_hi);
  for (auto& layer : r.params.adapt)
    for (auto& v : layer) v = a(rng);
  std::uniform_int_distribution<int> count(1, max_spikes);
  r.inputs.resize(r.params.topology.input_size());
  for (auto& train : r.inputs) {
    const int k = count(rng);
    for (int i = 0; i < k; ++i) train.push_back(when(rng));
  }
  return r;
}

// V - theta of one spike's neuron at time t, rebuilt from the trace alone.
inline double excess_from_trace(const Trace& trace, const Parameters& p, std::size_t spike, double t) {
  const auto& rec = trace.spikes[spike];
  double v = p.v_rest;
  for (const auto& par : rec.parents) v += par.weight * psp(p.kernel, t - par.arrival);
  double a = 0.0;
  for (std::size_t id : trace.spikes_of(rec.event.layer, rec.event.neuron)) {
    if (trace.spikes[id].event.ordinal >= rec.event.ordinal) break;
    a += p.adapt[rec.event.layer - 1][rec.event.neuron] * std::exp(-(t - trace.spikes[id].event.time) / p.tau_a);
  }
  return v - p.theta0 - a;
}

}  // namespace spikegrad::testing
