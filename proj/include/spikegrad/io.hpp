#pragma once

#include <cstddef>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spikegrad/data.hpp"
#include "spikegrad/error.hpp"
#include "spikegrad/network.hpp"
#include "spikegrad/train.hpp"

namespace spikegrad::io {

using nlohmann::json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kDatasetSchema = 1;
inline constexpr int kRasterSchema = 1;
inline constexpr int kReportSchema = 1;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot write");
  out << content;
  if (!out) throw FormatError(path + ": write failed");
}

// --------------------------------------------------------------- checkpoint

inline json kernel_to_json(const KernelSpec& k) {
  json j{{"kind", to_string(k.kind())}, {"tau_m", k.tau_m()}};
  if (!k.is_causal()) j["tau_s"] = k.tau_s();
  return j;
}

inline KernelSpec kernel_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "causal") return KernelSpec::causal(j.at("tau_m").get<double>());
  if (kind == "double") return KernelSpec::double_exponential(j.at("tau_m").get<double>(), j.at("tau_s").get<double>());
  throw FormatError("unknown kernel kind '" + kind + "'");
}

inline json checkpoint_to_json(const Parameters& p) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["topology"] = p.topology.sizes();
  j["kernel"] = kernel_to_json(p.kernel);
  j["theta0"] = p.theta0;
  j["tau_a"] = p.tau_a;
  j["v_rest"] = p.v_rest;
  j["window_T"] = p.window_T;
  json w = json::array(), d = json::array();
  for (const auto& m : p.w) w.push_back(m.data);
  for (const auto& m : p.d) d.push_back(m.data);
  j["w"] = std::move(w);
  j["d"] = std::move(d);
  j["A"] = p.adapt;
  return j;
}

inline Parameters checkpoint_from_json(const json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint format_version " + std::to_string(version) + " not supported");
  Parameters p;
  p.topology = Topology(j.at("topology").get<std::vector<std::size_t>>());
  p.kernel = kernel_from_json(j.at("kernel"));
  p.theta0 = j.at("theta0").get<double>();
  p.tau_a = j.at("tau_a").get<double>();
  p.v_rest = j.at("v_rest").get<double>();
  p.window_T = j.at("window_T").get<double>();
  const auto& sizes = p.topology.sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix w(sizes[l], sizes[l + 1]), d(sizes[l], sizes[l + 1]);
    w.data = j.at("w").at(l).get<std::vector<double>>();
    d.data = j.at("d").at(l).get<std::vector<double>>();
    if (w.data.size() != w.rows * w.cols || d.data.size() != d.rows * d.cols)
      throw FormatError("checkpoint: layer " + std::to_string(l) + " array size does not match topology");
    p.w.push_back(std::move(w));
    p.d.push_back(std::move(d));
    p.adapt.push_back(j.at("A").at(l).get<std::vector<double>>());
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return p;
}

inline void save_checkpoint(const std::string& path, const Parameters& p) {
  write_file(path, checkpoint_to_json(p).dump(1) + "\n");
}

inline Parameters load_checkpoint(const std::string& path) {
  try {
    return checkpoint_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// ----------------------------------------------------------------- dataset

inline json sample_to_json(const Sample& s) {
  json j{{"inputs", s.inputs}, {"label", s.label}};
  if (!s.targets.empty()) j["targets"] = s.targets;
  if (!s.features.empty()) j["features"] = s.features;
  return j;
}

inline Sample sample_from_json(const json& j) {
  Sample s;
  s.inputs = j.at("inputs").get<InputSpikes>();
  s.label = j.at("label").get<std::size_t>();
  if (j.contains("targets")) s.targets = j.at("targets").get<std::vector<std::vector<double>>>();
  if (j.contains("features")) s.features = j.at("features").get<std::vector<double>>();
  return s;
}

inline json dataset_to_json(const Dataset& ds) {
  json j{{"schema_version", kDatasetSchema}, {"task", ds.task},         {"window_T", ds.window_T},
         {"n_inputs", ds.n_inputs},          {"n_classes", ds.n_classes}};
  j["train"] = json::array();
  for (const auto& s : ds.train) j["train"].push_back(sample_to_json(s));
  j["test"] = json::array();
  for (const auto& s : ds.test) j["test"].push_back(sample_to_json(s));
  return j;
}

inline Dataset dataset_from_json(const json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kDatasetSchema) throw FormatError("dataset schema_version " + std::to_string(version) + " not supported");
  Dataset ds;
  ds.task = j.at("task").get<std::string>();
  ds.window_T = j.at("window_T").get<double>();
  ds.n_inputs = j.at("n_inputs").get<std::size_t>();
  ds.n_classes = j.at("n_classes").get<std::size_t>();
  for (const auto& s : j.at("train")) ds.train.push_back(sample_from_json(s));
  for (const auto& s : j.at("test")) ds.test.push_back(sample_from_json(s));
  try {
    validate_dataset(ds);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("dataset: ") + e.what());
  }
  return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) { write_file(path, dataset_to_json(ds).dump() + "\n"); }

inline Dataset load_dataset(const std::string& path) {
  try {
    return dataset_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// ------------------------------------------------------------------ raster

inline json raster_to_json(const Trace& trace) {
  json rows = json::array();
  for (const auto& s : trace.spikes)
    rows.push_back({{"layer", s.event.layer}, {"neuron", s.event.neuron}, {"ordinal", s.event.ordinal}, {"time", s.event.time}});
  return {{"schema_version", kRasterSchema},
          {"window_T", trace.window_T},
          {"layer_sizes", trace.layer_sizes},
          {"spikes", std::move(rows)}};
}

// ----------------------------------------------------------------- metrics

inline std::string metrics_csv_header(std::size_t n_layers) {
  std::string h = "epoch,train_loss,train_accuracy,test_loss,test_accuracy";
  for (std::size_t l = 1; l <= n_layers; ++l) h += ",mean_A_l" + std::to_string(l);
  for (std::size_t l = 1; l <= n_layers; ++l) h += ",spikes_l" + std::to_string(l);
  h += ",jump_crossings,near_degenerate,skipped";
  return h;
}

// Wall time is deliberately absent so that reruns are byte-identical.
inline std::string metrics_csv_row(const EpochMetrics& m) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.test_loss << ',' << m.test_accuracy;
  for (double a : m.mean_A) o << ',' << a;
  for (double s : m.spikes_per_sample) o << ',' << s;
  o << ',' << m.jump_crossings << ',' << m.near_degenerate << ',' << m.skipped;
  return o.str();
}

}  // namespace spikegrad::io
