#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikegrad/data.hpp"
#include "spikegrad/error.hpp"
#include "spikegrad/forward.hpp"
#include "spikegrad/gradients.hpp"
#include "spikegrad/loss.hpp"
#include "spikegrad/network.hpp"
#include "spikegrad/parallel.hpp"

namespace spikegrad {

enum class TrainMode { WeightsOnly = 0, WeightsDelays = 1, Full = 2 };

inline std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::WeightsOnly: return "weights";
    case TrainMode::WeightsDelays: return "delays";
    case TrainMode::Full: return "full";
  }
  return "?";
}

inline std::optional<TrainMode> parse_mode(const std::string& s) {
  if (s == "weights") return TrainMode::WeightsOnly;
  if (s == "delays") return TrainMode::WeightsDelays;
  if (s == "full") return TrainMode::Full;
  return std::nullopt;
}

struct TrainConfig {
  TrainMode mode = TrainMode::Full;
  double eta_w = 0.001;
  double eta_d = 0.001;
  double eta_A = 0.001;
  std::size_t epochs = 20;
  std::size_t batch = 1;
  std::uint64_t seed = 1;
  LossSpec loss;
  NeuronConfig neuron;
  InitRanges init;
  double d_max = -1.0;  // < 0: window_T / 2
  double A_max = -1.0;  // < 0: 10 * theta0
  double test_fraction = 0.2;
  std::size_t workers = 1;
  bool strict = false;

  double resolved_d_max() const { return d_max >= 0.0 ? d_max : neuron.window_T / 2.0; }
  double resolved_A_max() const { return A_max >= 0.0 ? A_max : 10.0 * neuron.theta0; }

  // Every violated constraint, not just the first.
  std::vector<std::string> problems() const {
    std::vector<std::string> out;
    if (!(eta_w >= 0.0)) out.push_back("eta_w must be >= 0");
    if (!(eta_d >= 0.0)) out.push_back("eta_d must be >= 0");
    if (!(eta_A >= 0.0)) out.push_back("eta_A must be >= 0");
    if (epochs < 1) out.push_back("epochs must be >= 1");
    if (batch < 1) out.push_back("batch must be >= 1");
    if (workers < 1) out.push_back("workers must be >= 1");
    if (!(loss.xi > 0.0)) out.push_back("xi must be > 0");
    if (!(loss.no_spike_penalty >= 0.0)) out.push_back("no-spike penalty must be >= 0");
    if (!(neuron.theta0 > neuron.v_rest)) out.push_back("theta0 must exceed v_rest");
    if (!(neuron.tau_a > 0.0)) out.push_back("tau_a must be > 0");
    if (!(neuron.window_T > 0.0)) out.push_back("window must be > 0");
    if (!(test_fraction >= 0.0 && test_fraction < 1.0)) out.push_back("test fraction must be in [0, 1)");
    if (!(init.w_lo <= init.w_hi)) out.push_back("w range is empty");
    if (!(init.d_lo >= 0.0 && init.d_lo <= init.d_hi)) out.push_back("d range must satisfy 0 <= lo <= hi");
    if (!(init.d_hi < neuron.window_T)) out.push_back("d range must stay below the window");
    if (!(init.A_init >= 0.0)) out.push_back("A_init must be >= 0");
    return out;
  }
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;      // mean over the epoch's forward passes
  double train_accuracy = 0.0;  // evaluated after the epoch
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  std::vector<double> mean_A;           // per non-input layer
  std::vector<double> spikes_per_sample;// per non-input layer, training passes
  std::size_t jump_crossings = 0;
  std::size_t near_degenerate = 0;
  std::size_t skipped = 0;              // samples dropped after a degenerate crossing
  double wall_seconds = 0.0;
};

// w always; d only from WeightsDelays up; A only in Full.
inline Parameters sgd_step(const Parameters& params, const GradientSet& grads, const TrainConfig& cfg) {
  for (const auto& h : all_handles(params.topology)) {
    if (!std::isfinite(grads.at(h))) throw std::domain_error("sgd_step: non-finite gradient for " + h.id());
  }
  Parameters p = params;
  const double d_max = cfg.resolved_d_max();
  const double A_max = cfg.resolved_A_max();
  for (std::size_t l = 0; l < p.w.size(); ++l) {
    for (std::size_t k = 0; k < p.w[l].data.size(); ++k) p.w[l].data[k] -= cfg.eta_w * grads.g_w[l].data[k];
    if (cfg.mode != TrainMode::WeightsOnly) {
      for (std::size_t k = 0; k < p.d[l].data.size(); ++k)
        p.d[l].data[k] = std::clamp(p.d[l].data[k] - cfg.eta_d * grads.g_d[l].data[k], 0.0, d_max);
    }
    if (cfg.mode == TrainMode::Full) {
      for (std::size_t k = 0; k < p.adapt[l].size(); ++k)
        p.adapt[l][k] = std::clamp(p.adapt[l][k] - cfg.eta_A * grads.g_A[l][k], 0.0, A_max);
    }
  }
  return p;
}

// Earliest first output spike; ties and the all-silent case go to the lowest
// index.
inline std::size_t predict(const Trace& trace) {
  const std::size_t out_layer = trace.layer_sizes.size() - 1;
  std::size_t best = 0;
  std::optional<double> best_t;
  for (std::size_t c = 0; c < trace.layer_sizes.back(); ++c) {
    const auto t = trace.first_spike(out_layer, c);
    if (t && (!best_t || *t < *best_t)) {
      best = c;
      best_t = t;
    }
  }
  return best;
}

struct SampleOutcome {
  GradientSet grads;
  double loss = 0.0;
  std::size_t prediction = 0;
  std::vector<std::size_t> layer_spikes;
  BackwardStats stats;
  bool skipped = false;
  std::string error;
};

inline SampleOutcome run_sample(const Parameters& params, const Sample& sample, const LossSpec& loss,
                                bool with_gradient) {
  SampleOutcome out;
  try {
    const Trace trace = simulate(params, sample.inputs);
    const TraceLoss tl = trace_loss(trace, sample.label, sample.targets, loss);
    out.loss = tl.loss;
    out.prediction = predict(trace);
    for (std::size_t l = 1; l < trace.layer_sizes.size(); ++l) out.layer_spikes.push_back(trace.count_in_layer(l));
    if (with_gradient) {
      auto bw = backward_full(trace, tl.adjoints);
      out.grads = std::move(bw.grads);
      out.grads.loss_value = tl.loss;
      out.stats = bw.stats;
    }
  } catch (const DegenerateCrossing& e) {
    out.skipped = true;
    out.error = e.what();
  } catch (const DegenerateDenominator& e) {
    out.skipped = true;
    out.error = e.what();
  }
  return out;
}

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t skipped = 0;
};

inline EvalResult evaluate(const std::vector<Sample>& samples, const Parameters& params, const LossSpec& loss,
                           std::size_t workers = 1) {
  const std::size_t k = params.topology.output_size();
  EvalResult r;
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  if (samples.empty()) return r;
  std::vector<SampleOutcome> outcomes(samples.size());
  parallel_for(samples.size(), workers,
               [&](std::size_t i) { outcomes[i] = run_sample(params, samples[i], loss, false); });
  std::size_t correct = 0, counted = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    // A sample the simulator rejects counts as a class-0 prediction with no loss.
    const std::size_t pred = outcomes[i].skipped ? 0 : outcomes[i].prediction;
    if (outcomes[i].skipped) {
      ++r.skipped;
    } else {
      loss_sum += outcomes[i].loss;
      ++counted;
    }
    r.confusion.at(samples[i].label).at(pred) += 1;
    correct += (pred == samples[i].label);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  r.mean_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
  return r;
}

struct Split {
  std::vector<Sample> train;
  std::vector<Sample> test;
};

// Seeded split; a designated test set is used as-is.
inline Split split_dataset(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  Split s;
  if (!ds.test.empty()) {
    s.train = ds.train;
    s.test = ds.test;
    return s;
  }
  std::vector<std::size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(order.size())));
  for (std::size_t k = 0; k < order.size(); ++k)
    (k < n_test ? s.test : s.train).push_back(ds.train[order[k]]);
  return s;
}

struct TrainResult {
  Parameters params;
  std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&, const Parameters&)>;

// Per-sample forward/backward, batch-averaged gradients, one SGD step per
// batch, then evaluation of both splits.
inline TrainResult train(const Dataset& dataset, const Topology& topology, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {}) {
  if (auto problems = cfg.problems(); !problems.empty()) throw std::invalid_argument("train: " + problems.front());
  if (dataset.train.empty()) throw std::invalid_argument("train: dataset is empty");
  if (topology.input_size() != dataset.n_inputs)
    throw std::invalid_argument("train: network has " + std::to_string(topology.input_size()) +
                                " inputs but samples have " + std::to_string(dataset.n_inputs));
  if (topology.output_size() < dataset.n_classes)
    throw std::invalid_argument("train: fewer outputs than classes");

  NeuronConfig neuron = cfg.neuron;
  neuron.window_T = dataset.window_T;
  TrainResult result;
  result.params = init_parameters(topology, cfg.init, cfg.seed, neuron);
  const Split split = split_dataset(dataset, cfg.test_fraction, cfg.seed);
  std::mt19937_64 shuffle_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n_hidden_layers = topology.num_layers() - 1;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochMetrics m;
    m.epoch = epoch;
    m.spikes_per_sample.assign(n_hidden_layers, 0.0);
    double loss_sum = 0.0;
    std::size_t used = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch) {
      const std::size_t b1 = std::min(order.size(), b0 + cfg.batch);
      std::vector<SampleOutcome> outcomes(b1 - b0);
      const Parameters& current = result.params;
      parallel_for(outcomes.size(), cfg.workers, [&](std::size_t k) {
        outcomes[k] = run_sample(current, split.train[order[b0 + k]], cfg.loss, true);
      });
      GradientSet sum = GradientSet::zeros_like(topology);
      for (const auto& o : outcomes) {
        if (o.skipped) {
          if (cfg.strict) throw std::runtime_error("train: " + o.error);
          ++m.skipped;
          continue;
        }
        sum += o.grads;
        loss_sum += o.loss;
        ++used;
        m.jump_crossings += o.stats.jump_crossings;
        m.near_degenerate += o.stats.near_degenerate;
        for (std::size_t l = 0; l < n_hidden_layers; ++l)
          m.spikes_per_sample[l] += static_cast<double>(o.layer_spikes[l]);
      }
      sum *= 1.0 / static_cast<double>(b1 - b0);
      result.params = sgd_step(result.params, sum, cfg);
    }

    m.train_loss = used ? loss_sum / static_cast<double>(used) : 0.0;
    for (auto& v : m.spikes_per_sample) v = used ? v / static_cast<double>(used) : 0.0;
    for (const auto& layer : result.params.adapt)
      m.mean_A.push_back(std::accumulate(layer.begin(), layer.end(), 0.0) / static_cast<double>(layer.size()));
    const EvalResult tr = evaluate(split.train, result.params, cfg.loss, cfg.workers);
    m.train_accuracy = tr.accuracy;
    if (!split.test.empty()) {
      const EvalResult te = evaluate(split.test, result.params, cfg.loss, cfg.workers);
      m.test_accuracy = te.accuracy;
      m.test_loss = te.mean_loss;
    }
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.metrics.push_back(m);
    if (on_epoch) on_epoch(m, result.params);
  }
  return result;
}

}  // namespace spikegrad
