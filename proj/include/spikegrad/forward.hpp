#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikegrad/error.hpp"
#include "spikegrad/exp_sum.hpp"
#include "spikegrad/kernels.hpp"
#include "spikegrad/network.hpp"

namespace spikegrad {

// Spike times per input neuron, in ms.
using InputSpikes = std::vector<std::vector<double>>;

inline constexpr double kDegenerateSlope = 1e-12;  // per ms

struct Contribution {
  double weight;
  double arrival;
};

// Threshold state of one neuron: theta(t) = theta0 + a(t), where a jumps by A
// at every own spike and decays with tau_a in between.
struct AdaptationState {
  double theta0 = 0.5;
  double tau_a = 30.0;
  double level_after_spike = 0.0;  // a(t_s+)
  std::optional<double> last_spike;

  double level(double t) const {
    if (!last_spike) return 0.0;
    return level_after_spike * std::exp(-(t - *last_spike) / tau_a);
  }

  void on_spike(double t, double jump) {
    level_after_spike = level(t) + jump;
    last_spike = t;
  }
};

inline double threshold_value(const AdaptationState& state, double t) { return state.theta0 + state.level(t); }

// The inputs a neuron has received since its last reset.
struct Segment {
  std::size_t neuron = 0;
  double start_time = 0.0;
  KernelSpec kernel = KernelSpec::double_exponential(20.0, 5.0);
  double v_rest = 0.0;
  std::vector<Contribution> contributions;  // sorted by arrival
};

inline double membrane_potential(const Segment& seg, double t) {
  double v = seg.v_rest;
  for (const auto& c : seg.contributions) {
    if (c.arrival <= t) v += c.weight * psp(seg.kernel, t - c.arrival);
  }
  return v;
}

namespace detail {

inline void add_psp(ExpSum& f, const KernelSpec& kernel, double weight, double arrival) {
  // w * c * exp(-r (t - arrival)) expressed relative to f.origin()
  for (const auto& term : kernel.terms())
    f.add(weight * term.coef * std::exp(-term.rate * (f.origin() - arrival)), term.rate);
}

// V(t) - theta(t) for t after every arrival in `contributions` with
// arrival <= origin.
inline ExpSum crossing_function(const Segment& seg, const AdaptationState& adapt, double origin) {
  ExpSum g(origin);
  for (const auto& c : seg.contributions)
    if (c.arrival <= origin) add_psp(g, seg.kernel, c.weight, c.arrival);
  g.add(seg.v_rest - adapt.theta0, 0.0);
  if (adapt.last_spike) g.add(-adapt.level(origin), 1.0 / adapt.tau_a);
  return g;
}

}  // namespace detail

struct Crossing {
  double time;
  bool jump;
};

// Earliest threshold crossing in (t_lo, t_hi], assuming no arrivals strictly
// inside the interval. Contributions arriving exactly at t_hi are only
// considered for the causal kernel's jump check.
inline std::optional<Crossing> find_crossing(const Segment& seg, const AdaptationState& adapt, double t_lo,
                                             double t_hi) {
  if (!(t_lo < t_hi)) throw std::invalid_argument("find_crossing: need t_lo < t_hi");
  const ExpSum g = detail::crossing_function(seg, adapt, t_lo);
  if (auto t = first_upcrossing(g, t_lo, t_hi)) {
    const double slope = g.derivative(*t);
    if (std::fabs(slope) < kDegenerateSlope) throw DegenerateCrossing(0, seg.neuron, *t, slope);
    return Crossing{*t, false};
  }
  if (seg.kernel.is_causal()) {
    if (membrane_potential(seg, t_hi) >= threshold_value(adapt, t_hi)) return Crossing{t_hi, true};
  }
  return std::nullopt;
}

namespace detail {

enum class EventKind : std::uint8_t { Emission = 0, Arrival = 1 };

struct Event {
  double time;
  EventKind kind;
  std::uint32_t layer;
  std::uint32_t neuron;
  std::uint64_t seq;
  // Emission: version stamp of the candidate. Arrival: synapse payload.
  std::uint64_t version = 0;
  double weight = 0.0;
  std::size_t parent = 0;
  std::size_t pre = 0;
};

// Orders by (time, kind, layer, neuron, seq); emissions precede arrivals at
// equal times.
struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    if (a.layer != b.layer) return a.layer > b.layer;
    if (a.neuron != b.neuron) return a.neuron > b.neuron;
    return a.seq > b.seq;
  }
};

struct NeuronState {
  ExpSum voltage;  // sum of PSPs since the last reset, without v_rest
  std::vector<ParentLink> parents;
  AdaptationState adapt;
  std::uint64_t version = 0;
};

}  // namespace detail

// Min-time event queue with deterministic tie-breaking.
class EventQueue {
 public:
  using Event = detail::Event;

  void push(Event e) {
    e.seq = next_seq_++;
    heap_.push(e);
  }
  bool empty() const { return heap_.empty(); }
  const Event& top() const { return heap_.top(); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }
  std::size_t size() const { return heap_.size(); }

 private:
  std::priority_queue<Event, std::vector<Event>, detail::EventLater> heap_;
  std::uint64_t next_seq_ = 0;
};

inline void validate_inputs(const Parameters& params, const InputSpikes& inputs) {
  if (inputs.size() != params.topology.input_size())
    throw std::invalid_argument("simulate: got " + std::to_string(inputs.size()) + " input trains, network expects " +
                                std::to_string(params.topology.input_size()));
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (double t : inputs[i])
      if (!(t >= 0.0 && t < params.window_T))
        throw std::invalid_argument("simulate: input spike " + std::to_string(t) + " on neuron " + std::to_string(i) +
                                    " outside [0, T)");
}

// Event-driven simulation of the whole network over [0, T].
inline Trace simulate(const Parameters& params, const InputSpikes& inputs) {
  using detail::Event;
  using detail::EventKind;
  validate_inputs(params, inputs);

  const auto& sizes = params.topology.sizes();
  const std::size_t n_layers = sizes.size();
  const double T = params.window_T;
  const KernelSpec& kernel = params.kernel;

  Trace trace;
  trace.kernel = kernel;
  trace.tau_a = params.tau_a;
  trace.window_T = T;
  trace.layer_sizes = sizes;
  trace.by_neuron.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) trace.by_neuron[l].resize(sizes[l]);

  std::vector<std::vector<detail::NeuronState>> state(n_layers);
  for (std::size_t l = 1; l < n_layers; ++l) {
    state[l].resize(sizes[l]);
    for (auto& s : state[l]) {
      s.adapt.theta0 = params.theta0;
      s.adapt.tau_a = params.tau_a;
    }
  }

  EventQueue queue;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (double t : inputs[i])
      queue.push(Event{t, EventKind::Emission, 0, static_cast<std::uint32_t>(i), 0});

  auto record = [&](std::size_t layer, std::size_t neuron, double t) -> std::size_t {
    auto& ids = trace.by_neuron[layer][neuron];
    SpikeRecord rec;
    rec.event = {layer, neuron, ids.size(), t};
    if (!ids.empty()) rec.prev_own = ids.back();
    const std::size_t id = trace.spikes.size();
    trace.spikes.push_back(std::move(rec));
    ids.push_back(id);
    if (layer + 1 < n_layers) {
      const auto& w = params.w[layer];
      const auto& d = params.d[layer];
      for (std::size_t k = 0; k < sizes[layer + 1]; ++k) {
        const double arrival = t + d(neuron, k);
        if (arrival > T) continue;
        Event e{arrival, EventKind::Arrival, static_cast<std::uint32_t>(layer + 1), static_cast<std::uint32_t>(k), 0};
        e.weight = w(neuron, k);
        e.parent = id;
        e.pre = neuron;
        queue.push(e);
      }
    }
    return id;
  };

  auto crossing_fn = [&](const detail::NeuronState& s, double origin) {
    ExpSum g = s.voltage;
    g.rebase(origin);
    g.add(params.v_rest - params.theta0, 0.0);
    if (s.adapt.last_spike) g.add(-s.adapt.level(origin), 1.0 / params.tau_a);
    return g;
  };

  auto fire = [&](std::size_t layer, std::size_t neuron, double t, bool jump) {
    auto& s = state[layer][neuron];
    const ExpSum g = crossing_fn(s, t);
    const double slope = g.derivative(t);
    if (!jump && std::fabs(slope) < kDegenerateSlope) throw DegenerateCrossing(layer, neuron, t, slope);
    const double level = s.adapt.level(t);
    const double jump_size = params.adapt[layer - 1][neuron];
    std::vector<ParentLink> parents = std::move(s.parents);
    s.parents.clear();
    s.voltage.clear(t);
    s.adapt.on_spike(t, jump_size);
    ++s.version;
    const std::size_t id = record(layer, neuron, t);
    auto& rec = trace.spikes[id];
    rec.parents = std::move(parents);
    rec.crossing_slope = slope;
    rec.adaptation = level;
    rec.adapt_jump = jump_size;
    rec.jump_crossing = jump;
  };

  while (!queue.empty()) {
    const Event e = queue.pop();
    if (e.kind == EventKind::Emission) {
      if (e.layer == 0) {
        record(0, e.neuron, e.time);
      } else if (state[e.layer][e.neuron].version == e.version) {
        fire(e.layer, e.neuron, e.time, false);
      }
      continue;
    }

    // Gather every arrival for this neuron at this instant.
    auto& s = state[e.layer][e.neuron];
    const double t = e.time;
    s.voltage.rebase(t);
    auto apply = [&](const Event& a) {
      detail::add_psp(s.voltage, kernel, a.weight, a.time);
      s.parents.push_back(ParentLink{a.parent, a.pre, a.weight, a.time});
    };
    apply(e);
    while (!queue.empty()) {
      const Event& nx = queue.top();
      if (nx.time != t || nx.kind != EventKind::Arrival || nx.layer != e.layer || nx.neuron != e.neuron) break;
      apply(queue.pop());
    }
    ++s.version;

    const ExpSum g = crossing_fn(s, t);
    if (g(t) >= 0.0) {
      fire(e.layer, e.neuron, t, kernel.is_causal());
      continue;
    }
    if (t < T) {
      if (auto tc = first_upcrossing(g, t, T)) {
        Event c{*tc, EventKind::Emission, e.layer, e.neuron, 0};
        c.version = s.version;
        queue.push(c);
      }
    }
  }
  return trace;
}

}  // namespace spikegrad
