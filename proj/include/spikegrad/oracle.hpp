#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "spikegrad/forward.hpp"
#include "spikegrad/loss.hpp"
#include "spikegrad/network.hpp"

namespace spikegrad {

// Clock-driven reference integration of the membrane ODE. Independent of the
// event-driven path: state is advanced by exact exponential propagators between
// grid points and impulse arrivals, and threshold crossings are located by
// linear interpolation inside each sub-step.
struct DenseResult {
  std::vector<std::vector<std::vector<double>>> spike_times;  // [layer][neuron]
  std::vector<std::vector<std::vector<double>>> voltage;      // [layer][neuron][step], if recorded
  double dt = 0.0;

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> out;
    for (std::size_t l = 1; l < spike_times.size(); ++l)
      for (const auto& s : spike_times[l]) out.push_back(s.size());
    return out;
  }
};

inline DenseResult dense_forward(const Parameters& params, const InputSpikes& inputs, double dt,
                                 bool record_voltage = false) {
  if (!(dt > 0.0)) throw std::invalid_argument("dense_forward: dt must be > 0");
  validate_inputs(params, inputs);
  const auto& sizes = params.topology.sizes();
  const double T = params.window_T;
  const auto n_steps = static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
  const KernelSpec& k = params.kernel;
  const bool causal = k.is_causal();

  const double decay_m = std::exp(-dt / k.tau_m());
  const double decay_s = causal ? 0.0 : std::exp(-dt / k.tau_s());
  const double decay_a = std::exp(-dt / params.tau_a);
  // Synaptic current model for the double exponential: tau_s dI/dt = -I,
  // dV/dt = -V/tau_m + I, with I jumping by w * kick at arrival.
  const double kick = causal ? 1.0 : k.norm() * (1.0 / k.tau_s() - 1.0 / k.tau_m());
  const double cross = causal ? 0.0 : (decay_s - decay_m) / (1.0 / k.tau_m() - 1.0 / k.tau_s());

  DenseResult out;
  out.dt = dt;
  out.spike_times.resize(sizes.size());
  out.voltage.resize(sizes.size());
  out.spike_times[0].resize(sizes[0]);
  for (std::size_t i = 0; i < sizes[0]; ++i) {
    out.spike_times[0][i] = inputs[i];
    std::sort(out.spike_times[0][i].begin(), out.spike_times[0][i].end());
  }

  struct Arrival {
    double time;
    double weight;
    bool operator<(const Arrival& o) const { return time < o.time; }
  };
  std::vector<Arrival> arrivals;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    out.spike_times[l].resize(sizes[l]);
    out.voltage[l].resize(sizes[l]);
    for (std::size_t j = 0; j < sizes[l]; ++j) {
      arrivals.clear();
      for (std::size_t i = 0; i < sizes[l - 1]; ++i)
        for (double tp : out.spike_times[l - 1][i]) {
          const double arrival = tp + params.d[l - 1](i, j);
          if (arrival <= T) arrivals.push_back({arrival, params.w[l - 1](i, j)});
        }
      std::stable_sort(arrivals.begin(), arrivals.end());

      const double A = params.adapt[l - 1][j];
      double u = 0.0, current = 0.0, a = 0.0;  // u = V - v_rest
      double now = 0.0;
      auto excess = [&] { return params.v_rest + u - params.theta0 - a; };
      auto& spikes = out.spike_times[l][j];
      auto& trace = out.voltage[l][j];
      if (record_voltage) trace.assign(n_steps + 1, params.v_rest);

      auto spike_at = [&](double ts) {
        spikes.push_back(ts);
        // a jumps at ts and decays to the current node; V and I restart at rest.
        a = (a * std::exp((now - ts) / params.tau_a) + A) * std::exp(-(now - ts) / params.tau_a);
        u = 0.0;
        current = 0.0;
      };
      // Exact propagation to `to`, then a linearly interpolated threshold test
      // over the sub-step.
      auto advance = [&](double to) {
        const double h = to - now;
        if (h <= 0.0) return;
        const double g_prev = excess();
        const double dm = h == dt ? decay_m : std::exp(-h / k.tau_m());
        if (causal) {
          u *= dm;
        } else {
          const double ds = h == dt ? decay_s : std::exp(-h / k.tau_s());
          const double c = h == dt ? cross : (ds - dm) / (1.0 / k.tau_m() - 1.0 / k.tau_s());
          u = u * dm + current * c;
          current *= ds;
        }
        a *= h == dt ? decay_a : std::exp(-h / params.tau_a);
        const double from = now;
        now = to;
        const double g_now = excess();
        if (g_prev < 0.0 && g_now >= 0.0) spike_at(from + (-g_prev / (g_now - g_prev)) * h);
      };
      // Impulses land at their exact times, between grid nodes if need be.
      auto impulse = [&](double weight) {
        if (causal) {
          u += weight;
        } else {
          current += weight * kick;
        }
        if (excess() >= 0.0) spike_at(now);
      };

      std::size_t next = 0;
      for (std::size_t n = 0; n <= n_steps; ++n) {
        const double t = std::min(static_cast<double>(n) * dt, T);
        for (; next < arrivals.size() && arrivals[next].time <= t; ++next) {
          advance(arrivals[next].time);
          impulse(arrivals[next].weight);
        }
        advance(t);
        if (record_voltage) trace[n] = params.v_rest + u;
      }
    }
  }
  return out;
}

struct FiniteDiff {
  double numeric = 0.0;
  bool stable = false;
};

// Loss of one sample through the event-driven simulator.
inline double sample_loss(const Parameters& params, const InputSpikes& inputs, std::size_t label,
                          const std::vector<std::vector<double>>& targets, const LossSpec& spec,
                          std::vector<std::size_t>* counts = nullptr) {
  const Trace trace = simulate(params, inputs);
  if (counts) *counts = trace.counts();
  return trace_loss(trace, label, targets, spec).loss;
}

// Central difference of the loss in one parameter. `stable` is true iff the
// per-neuron spike counts at p - h, p and p + h agree.
inline FiniteDiff finite_diff_gradient(const Parameters& params, const InputSpikes& inputs, std::size_t label,
                                       const std::vector<std::vector<double>>& targets, const LossSpec& spec,
                                       const ParamHandle& handle, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be > 0");
  std::vector<std::size_t> c0, cp, cm;
  sample_loss(params, inputs, label, targets, spec, &c0);
  Parameters p = params;
  double& x = param_ref(p, handle);
  const double x0 = x;
  if (handle.family != ParamFamily::Weight && x0 - h < 0.0) return {0.0, false};
  x = x0 + h;
  const double lp = sample_loss(p, inputs, label, targets, spec, &cp);
  x = x0 - h;
  const double lm = sample_loss(p, inputs, label, targets, spec, &cm);
  return {(lp - lm) / (2.0 * h), c0 == cp && c0 == cm};
}

}  // namespace spikegrad
