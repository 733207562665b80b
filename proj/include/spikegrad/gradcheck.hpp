#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spikegrad/forward.hpp"
#include "spikegrad/gradients.hpp"
#include "spikegrad/loss.hpp"
#include "spikegrad/network.hpp"
#include "spikegrad/oracle.hpp"
#include "spikegrad/parallel.hpp"

namespace spikegrad {

inline constexpr double kGradcheckTolerance = 1e-5;
inline constexpr double kGradcheckPassRatio = 0.95;

inline double relative_error(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / std::max(std::fabs(numeric), 1e-8);
}

struct GradcheckConfig {
  std::vector<std::size_t> topology{3, 4, 2};
  std::size_t trials = 50;
  double h = 1e-4;
  KernelKind kernel = KernelKind::DoubleExponential;
  double tau_m = 20.0;
  double tau_s = 5.0;
  double tau_a = 30.0;
  double theta0 = 0.5;
  double window_T = 100.0;
  LossKind loss = LossKind::TTFSCrossEntropy;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct GradcheckRow {
  std::size_t trial = 0;
  ParamHandle handle{};
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
  bool stable = false;
  bool jump = false;

  std::string param_id() const { return "t" + std::to_string(trial) + ":" + handle.id(); }
  bool eligible() const { return stable && !jump; }
  bool passed() const { return rel_err < kGradcheckTolerance; }
};

struct GradcheckSummary {
  std::size_t rows = 0;
  std::size_t eligible = 0;
  std::size_t passed = 0;
  std::size_t unstable = 0;
  std::size_t jump = 0;
  std::size_t regenerated = 0;  // trials redrawn after a degenerate crossing
  double ratio() const { return eligible ? static_cast<double>(passed) / static_cast<double>(eligible) : 0.0; }
  bool ok() const { return eligible > 0 && ratio() >= kGradcheckPassRatio; }
};

struct GradcheckTrial {
  Parameters params;
  InputSpikes inputs;
  std::size_t label = 0;
  std::vector<std::vector<double>> targets;
};

// Random network and sample: w ~ U[0,1], d ~ U[0.5,5] ms, A ~ U[0.1,1],
// 1-3 input spikes per input neuron in [0, 40] ms.
inline GradcheckTrial random_trial(const GradcheckConfig& cfg, std::mt19937_64& rng) {
  NeuronConfig neuron;
  neuron.kernel = KernelSpec::make(cfg.kernel, cfg.tau_m, cfg.tau_s);
  neuron.theta0 = cfg.theta0;
  neuron.tau_a = cfg.tau_a;
  neuron.window_T = cfg.window_T;
  const Topology topo(cfg.topology);
  GradcheckTrial t;
  t.params = init_parameters(topo, InitRanges{0.0, 1.0, 0.5, 5.0, 0.0}, rng(), neuron);
  std::uniform_real_distribution<double> a_dist(0.1, 1.0);
  for (auto& layer : t.params.adapt)
    for (auto& a : layer) a = a_dist(rng);
  std::uniform_int_distribution<int> n_spikes(1, 3);
  std::uniform_real_distribution<double> when(0.0, 40.0);
  t.inputs.resize(topo.input_size());
  for (auto& train : t.inputs) {
    const int n = n_spikes(rng);
    for (int k = 0; k < n; ++k) train.push_back(when(rng));
    std::sort(train.begin(), train.end());
  }
  t.label = std::uniform_int_distribution<std::size_t>(0, topo.output_size() - 1)(rng);
  return t;
}

// Analytic vs central-difference gradients for every parameter of every
// trial. Each trial draws from its own generator, so the report does not
// depend on the worker count.
inline std::vector<GradcheckRow> run_gradcheck(const GradcheckConfig& cfg, GradcheckSummary* summary = nullptr) {
  LossSpec spec;
  spec.kind = cfg.loss;
  std::vector<std::vector<GradcheckRow>> per_trial(cfg.trials);
  std::vector<std::size_t> redraws(cfg.trials, 0);

  parallel_for(cfg.trials, cfg.workers, [&](std::size_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    GradcheckTrial t;
    Trace trace;
    BackwardResult bw;
    for (;;) {
      t = random_trial(cfg, rng);
      try {
        trace = simulate(t.params, t.inputs);
        if (cfg.loss == LossKind::SpikeTimeMSE) {
          std::uniform_real_distribution<double> offset(-3.0, 3.0);
          const std::size_t out_layer = trace.layer_sizes.size() - 1;
          t.targets.assign(trace.layer_sizes.back(), {});
          for (std::size_t c = 0; c < t.targets.size(); ++c)
            for (auto id : trace.spikes_of(out_layer, c)) t.targets[c].push_back(trace.spikes[id].event.time + offset(rng));
        }
        const TraceLoss tl = trace_loss(trace, t.label, t.targets, spec);
        bw = backward_full(trace, tl.adjoints);
        break;
      } catch (const DegenerateCrossing&) {
      } catch (const DegenerateDenominator&) {
      }
      ++redraws[trial];
    }
    bool jump = false;
    for (std::size_t s = 0; s < trace.spikes.size(); ++s)
      jump = jump || (trace.spikes[s].jump_crossing && bw.adjoints[s] != 0.0);

    for (const auto& h : all_handles(t.params.topology)) {
      GradcheckRow row;
      row.trial = trial;
      row.handle = h;
      row.analytic = bw.grads.at(h);
      try {
        const FiniteDiff fd = finite_diff_gradient(t.params, t.inputs, t.label, t.targets, spec, h, cfg.h);
        row.numeric = fd.numeric;
        row.stable = fd.stable;
      } catch (const DegenerateCrossing&) {
        row.stable = false;
      }
      row.rel_err = relative_error(row.analytic, row.numeric);
      row.jump = jump;
      per_trial[trial].push_back(row);
    }
  });

  std::vector<GradcheckRow> rows;
  GradcheckSummary sum;
  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    sum.regenerated += redraws[trial];
    rows.insert(rows.end(), per_trial[trial].begin(), per_trial[trial].end());
  }
  for (const auto& r : rows) {
    ++sum.rows;
    if (!r.stable) ++sum.unstable;
    if (r.jump) ++sum.jump;
    if (r.eligible()) {
      ++sum.eligible;
      if (r.passed()) ++sum.passed;
    }
  }
  if (summary) *summary = sum;
  return rows;
}

inline std::string gradcheck_csv(const std::vector<GradcheckRow>& rows) {
  std::ostringstream o;
  o.precision(17);
  o << "param_id,family,analytic,numeric,rel_err,stable,jump_flag\n";
  for (const auto& r : rows)
    o << r.param_id() << ',' << to_string(r.handle.family) << ',' << r.analytic << ',' << r.numeric << ','
      << r.rel_err << ',' << (r.stable ? 1 : 0) << ',' << (r.jump ? 1 : 0) << '\n';
  return o.str();
}

}  // namespace spikegrad
