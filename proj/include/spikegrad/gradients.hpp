#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "spikegrad/error.hpp"
#include "spikegrad/kernels.hpp"
#include "spikegrad/network.hpp"

namespace spikegrad {

inline constexpr double kDegenerateDenominator = 1e-12;  // per ms
inline constexpr double kNearDegenerate = 1e-9;          // per ms

// Implicit differentiation of recorded spike times. A spike t of neuron j
// solves F(t) = V_j(t) - theta0 - A_j * sum_g exp(-(t - t_g)/tau_a) = 0, where
// g runs over j's earlier spikes in the window. Every derivative below is
// -dF/dx / dF/dt for the relevant quantity x.

namespace detail {

inline const SpikeRecord& checked_spike(const Trace& trace, std::size_t spike) {
  if (spike >= trace.spikes.size()) throw std::out_of_range("spike id out of range");
  return trace.spikes[spike];
}

// sum_g exp(-(t_f - t_g)/tau_a) over the earlier own spikes.
inline double adaptation_sensitivity(const Trace& trace, const SpikeRecord& rec) {
  double s = 0.0;
  const double t = rec.event.time;
  for (auto prev = rec.prev_own; prev; prev = trace.spikes[*prev].prev_own)
    s += std::exp(-(t - trace.spikes[*prev].event.time) / trace.tau_a);
  return s;
}

}  // namespace detail

// dF/dt = sum over parents w * eps'(t - arrival) + a_j(t)/tau_a.
inline double crossing_denominator(const Trace& trace, std::size_t spike) {
  const auto& rec = detail::checked_spike(trace, spike);
  const double t = rec.event.time;
  double slope = 0.0;
  for (const auto& p : rec.parents) slope += p.weight * psp_deriv(trace.kernel, t - p.arrival);
  if (rec.adapt_jump != 0.0 && rec.prev_own)
    slope += rec.adapt_jump / trace.tau_a * detail::adaptation_sensitivity(trace, rec);
  return slope;
}

namespace detail {

inline double checked_denominator(const Trace& trace, std::size_t spike) {
  const double den = crossing_denominator(trace, spike);
  if (!(std::fabs(den) >= kDegenerateDenominator)) {
    const auto& ev = trace.spikes[spike].event;
    throw DegenerateDenominator(spike, ev.layer, ev.neuron, den);
  }
  return den;
}

}  // namespace detail

// Per-parent summands of dt/d(d_ij), in parent order; the entries for parents
// not carried by synapse pre -> j are zero.
inline std::vector<double> dt_d_delay_terms(const Trace& trace, std::size_t spike, std::size_t pre) {
  const auto& rec = detail::checked_spike(trace, spike);
  std::vector<double> terms(rec.parents.size(), 0.0);
  bool any = false;
  for (const auto& p : rec.parents) any = any || p.pre == pre;
  if (!any) return terms;
  const double den = detail::checked_denominator(trace, spike);
  const double t = rec.event.time;
  for (std::size_t k = 0; k < rec.parents.size(); ++k) {
    const auto& p = rec.parents[k];
    if (p.pre == pre) terms[k] = p.weight * psp_deriv(trace.kernel, t - p.arrival) / den;
  }
  return terms;
}

inline double dt_d_delay(const Trace& trace, std::size_t spike, std::size_t pre) {
  double sum = 0.0;
  for (double v : dt_d_delay_terms(trace, spike, pre)) sum += v;
  return sum;
}

inline double dt_d_weight(const Trace& trace, std::size_t spike, std::size_t pre) {
  const auto& rec = detail::checked_spike(trace, spike);
  const double t = rec.event.time;
  double num = 0.0;
  bool any = false;
  for (const auto& p : rec.parents) {
    if (p.pre != pre) continue;
    any = true;
    num += psp(trace.kernel, t - p.arrival);
  }
  if (!any) return 0.0;
  return -num / detail::checked_denominator(trace, spike);
}

// Sensitivity to the time of the parent recorded at position `parent_index`.
inline double dt_d_presyn_time(const Trace& trace, std::size_t spike, std::size_t parent_index) {
  const auto& rec = detail::checked_spike(trace, spike);
  const auto& p = rec.parents.at(parent_index);
  const double den = detail::checked_denominator(trace, spike);
  return p.weight * psp_deriv(trace.kernel, rec.event.time - p.arrival) / den;
}

// Zero for a neuron's first spike: the threshold there does not involve A_j.
inline double dt_d_A(const Trace& trace, std::size_t spike) {
  const auto& rec = detail::checked_spike(trace, spike);
  if (!rec.prev_own) return 0.0;
  return detail::adaptation_sensitivity(trace, rec) / detail::checked_denominator(trace, spike);
}

// Sensitivity to an earlier own spike `own` of the same neuron.
inline double dt_d_own_spike(const Trace& trace, std::size_t spike, std::size_t own) {
  const auto& rec = detail::checked_spike(trace, spike);
  const auto& prev = detail::checked_spike(trace, own);
  if (prev.event.layer != rec.event.layer || prev.event.neuron != rec.event.neuron ||
      !(prev.event.ordinal < rec.event.ordinal))
    throw std::invalid_argument("dt_d_own_spike: not an earlier spike of the same neuron");
  if (rec.adapt_jump == 0.0) return 0.0;
  const double decay = std::exp(-(rec.event.time - prev.event.time) / trace.tau_a);
  return rec.adapt_jump / trace.tau_a * decay / detail::checked_denominator(trace, spike);
}

inline double dt_d_prev_own_spike(const Trace& trace, std::size_t spike) {
  const auto& rec = detail::checked_spike(trace, spike);
  if (!rec.prev_own) throw std::invalid_argument("dt_d_prev_own_spike: spike has no predecessor");
  return dt_d_own_spike(trace, spike, *rec.prev_own);
}

struct BackwardStats {
  std::size_t jump_crossings = 0;  // jump-flagged spikes that carried an adjoint
  std::size_t near_degenerate = 0; // |D| < 1e-9
};

struct BackwardResult {
  GradientSet grads;
  std::vector<double> adjoints;  // dL/dt per recorded spike
  BackwardStats stats;
};

// Reverse sweep over the spike DAG. `output_adjoints` holds dL/dt for every
// recorded spike (zero where the loss does not read the spike).
inline BackwardResult backward_full(const Trace& trace, std::span<const double> output_adjoints) {
  if (output_adjoints.size() != trace.spikes.size())
    throw std::invalid_argument("backward: adjoint count does not match trace");
  BackwardResult out;
  auto& g = out.grads;
  const auto& sizes = trace.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    g.g_w.emplace_back(sizes[l], sizes[l + 1]);
    g.g_d.emplace_back(sizes[l], sizes[l + 1]);
    g.g_A.emplace_back(sizes[l + 1], 0.0);
  }
  out.adjoints.assign(output_adjoints.begin(), output_adjoints.end());
  auto& lambda = out.adjoints;

  for (std::size_t s = trace.spikes.size(); s-- > 0;) {
    const auto& rec = trace.spikes[s];
    const double lam = lambda[s];
    if (lam == 0.0 || rec.event.layer == 0) continue;
    if (rec.jump_crossing) ++out.stats.jump_crossings;

    const double den = detail::checked_denominator(trace, s);
    if (std::fabs(den) < kNearDegenerate) ++out.stats.near_degenerate;
    const double scale = lam / den;
    const double t = rec.event.time;
    const std::size_t l = rec.event.layer - 1;
    const std::size_t j = rec.event.neuron;

    for (const auto& p : rec.parents) {
      const double tau = t - p.arrival;
      const double shift = p.weight * psp_deriv(trace.kernel, tau);  // -dF/d(arrival)
      g.g_w[l](p.pre, j) -= scale * psp(trace.kernel, tau);
      g.g_d[l](p.pre, j) += scale * shift;
      lambda[p.spike] += scale * shift;
    }
    if (rec.prev_own && rec.adapt_jump != 0.0) {
      double sens = 0.0;
      for (auto prev = rec.prev_own; prev; prev = trace.spikes[*prev].prev_own) {
        const double decay = std::exp(-(t - trace.spikes[*prev].event.time) / trace.tau_a);
        sens += decay;
        lambda[*prev] += scale * rec.adapt_jump / trace.tau_a * decay;
      }
      g.g_A[l][j] += scale * sens;
    } else if (rec.prev_own) {
      g.g_A[l][j] += scale * detail::adaptation_sensitivity(trace, rec);
    }
  }
  return out;
}

inline GradientSet backward(const Trace& trace, std::span<const double> output_adjoints) {
  return backward_full(trace, output_adjoints).grads;
}

}  // namespace spikegrad
