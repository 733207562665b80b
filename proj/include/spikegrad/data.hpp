#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikegrad/error.hpp"
#include "spikegrad/forward.hpp"

namespace spikegrad {

struct Sample {
  InputSpikes inputs;                        // per input neuron, sorted, within [0, T)
  std::size_t label = 0;
  std::vector<std::vector<double>> targets;  // optional target trains per output neuron
  std::vector<double> features;              // raw features the sample was encoded from, if any

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::string task;
  double window_T = 100.0;
  std::size_t n_inputs = 0;
  std::size_t n_classes = 0;
  std::vector<Sample> train;
  std::vector<Sample> test;  // empty: callers split `train`

  bool operator==(const Dataset&) const = default;
};

inline void validate_sample(const Sample& s, std::size_t n_inputs, std::size_t n_classes, double T) {
  if (s.inputs.size() != n_inputs)
    throw std::invalid_argument("sample: " + std::to_string(s.inputs.size()) + " input trains, expected " +
                                std::to_string(n_inputs));
  if (s.label >= n_classes) throw std::invalid_argument("sample: label out of range");
  for (const auto& train : s.inputs) {
    if (!std::is_sorted(train.begin(), train.end())) throw std::invalid_argument("sample: unsorted spike train");
    for (double t : train)
      if (!(t >= 0.0 && t < T)) throw std::invalid_argument("sample: spike time outside [0, T)");
  }
}

inline void validate_dataset(const Dataset& ds) {
  if (ds.n_inputs == 0 || ds.n_classes == 0 || !(ds.window_T > 0.0))
    throw std::invalid_argument("dataset: empty shape");
  for (const auto& s : ds.train) validate_sample(s, ds.n_inputs, ds.n_classes, ds.window_T);
  for (const auto& s : ds.test) validate_sample(s, ds.n_inputs, ds.n_classes, ds.window_T);
}

// ---------------------------------------------------------------- synthetic

struct SyntheticConfig {
  std::size_t n_samples = 150;
  std::size_t n_inputs = 20;
  std::size_t n_classes = 3;
  double window_T = 100.0;
  double jitter_sigma = 2.0;      // ms
  double prototype_span = 0.8;    // prototypes live in [0, span * T]
  std::uint64_t seed = 1;
};

// One fixed spike-time prototype per class; each sample is its prototype plus
// clipped Gaussian jitter. Labels cycle through the classes.
inline Dataset gen_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_samples == 0 || cfg.n_inputs == 0 || cfg.n_classes == 0 || !(cfg.window_T > 0.0))
    throw std::invalid_argument("gen_synthetic: counts and window must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> place(0.0, cfg.prototype_span * cfg.window_T);
  std::vector<std::vector<double>> proto(cfg.n_classes, std::vector<double>(cfg.n_inputs));
  for (auto& p : proto)
    for (auto& t : p) t = place(rng);

  const double t_max = std::nextafter(cfg.window_T, 0.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  Dataset ds;
  ds.task = "synthetic";
  ds.window_T = cfg.window_T;
  ds.n_inputs = cfg.n_inputs;
  ds.n_classes = cfg.n_classes;
  for (std::size_t n = 0; n < cfg.n_samples; ++n) {
    Sample s;
    s.label = n % cfg.n_classes;
    s.inputs.resize(cfg.n_inputs);
    for (std::size_t i = 0; i < cfg.n_inputs; ++i) {
      const double noise = jitter(rng) * cfg.jitter_sigma;
      s.inputs[i] = {std::clamp(proto[s.label][i] + noise, 0.0, t_max)};
    }
    ds.train.push_back(std::move(s));
  }
  return ds;
}

// ---------------------------------------------------------------- yin-yang

namespace yinyang {
inline constexpr double kRadius = 0.5;
inline constexpr double kEyeRadius = 0.25;
inline constexpr double kDotRadius = 0.09;
inline constexpr double kCenterX = 0.5;
inline constexpr double kCenterY = 0.5;
inline constexpr double kLowerEyeY = 0.25;
inline constexpr double kUpperEyeY = 0.75;
enum Class : std::size_t { Yin = 0, Yang = 1, Dot = 2 };
}  // namespace yinyang

// Class of a point inside the disk. The disk is split along x = 0.5 (left =
// yin, right = yang); the lower eye is entirely yang, the upper eye entirely
// yin, and the two dots around the eye centres form the third class.
inline std::optional<std::size_t> yinyang_class(double x, double y) {
  using namespace yinyang;
  auto dist = [](double x0, double y0, double x1, double y1) { return std::hypot(x0 - x1, y0 - y1); };
  if (dist(x, y, kCenterX, kCenterY) > kRadius) return std::nullopt;
  const double d_lower = dist(x, y, kCenterX, kLowerEyeY);
  const double d_upper = dist(x, y, kCenterX, kUpperEyeY);
  if (d_lower <= kDotRadius || d_upper <= kDotRadius) return Dot;
  if (d_lower <= kEyeRadius) return Yang;
  if (d_upper <= kEyeRadius) return Yin;
  return x < kCenterX ? Yin : Yang;
}

// For features v, one spike per neuron at t_early + v (t_late - t_early) for
// v in (v_1..v_n, 1 - v_1..1 - v_n).
inline InputSpikes latency_encode(const std::vector<double>& features, double t_early, double t_late) {
  if (!(t_early < t_late)) throw std::invalid_argument("latency_encode: need t_early < t_late");
  InputSpikes out(2 * features.size());
  for (std::size_t k = 0; k < features.size(); ++k) {
    const double v = features[k];
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("latency_encode: feature outside [0, 1]");
    out[k] = {t_early + v * (t_late - t_early)};
    out[k + features.size()] = {t_early + (1.0 - v) * (t_late - t_early)};
  }
  return out;
}

struct YinYangConfig {
  std::size_t n_samples = 1500;
  std::size_t n_test = 0;
  double window_T = 100.0;
  double t_early = 5.0;
  double t_late = 45.0;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::vector<Sample> yinyang_points(std::size_t n, std::mt19937_64& rng, const YinYangConfig& cfg) {
  std::array<std::size_t, 3> quota{n / 3, n / 3, n / 3};
  for (std::size_t c = 0; c < n % 3; ++c) ++quota[c];
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(n);
  while (out.size() < n) {
    const double x = unit(rng);
    const double y = unit(rng);
    const auto cls = yinyang_class(x, y);
    if (!cls || quota[*cls] == 0) continue;
    --quota[*cls];
    Sample s;
    s.label = *cls;
    s.features = {x, y};
    s.inputs = latency_encode(s.features, cfg.t_early, cfg.t_late);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

inline Dataset gen_yinyang(const YinYangConfig& cfg) {
  if (cfg.n_samples == 0) throw std::invalid_argument("gen_yinyang: n_samples must be > 0");
  if (!(cfg.t_late <= cfg.window_T)) throw std::invalid_argument("gen_yinyang: t_late beyond window");
  std::mt19937_64 rng(cfg.seed);
  Dataset ds;
  ds.task = "yinyang";
  ds.window_T = cfg.window_T;
  ds.n_inputs = 4;
  ds.n_classes = 3;
  ds.train = detail::yinyang_points(cfg.n_samples, rng, cfg);
  if (cfg.n_test > 0) ds.test = detail::yinyang_points(cfg.n_test, rng, cfg);
  return ds;
}

// ---------------------------------------------------------------- poisson

// Homogeneous Poisson train per pixel with rate intensity * rate_max (Hz).
inline InputSpikes poisson_encode(const std::vector<double>& image, double rate_max_hz, double window_T,
                                  std::mt19937_64& rng) {
  if (!(rate_max_hz > 0.0)) throw std::invalid_argument("poisson_encode: rate_max must be > 0");
  InputSpikes out(image.size());
  for (std::size_t p = 0; p < image.size(); ++p) {
    const double rate_per_ms = std::clamp(image[p], 0.0, 1.0) * rate_max_hz / 1000.0;
    if (rate_per_ms <= 0.0) continue;
    std::exponential_distribution<double> gap(rate_per_ms);
    for (double t = gap(rng); t < window_T; t += gap(rng)) out[p].push_back(t);
  }
  return out;
}

inline InputSpikes poisson_encode(const std::vector<double>& image, double rate_max_hz, double window_T,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return poisson_encode(image, rate_max_hz, window_T, rng);
}

// ---------------------------------------------------------------- IDX

struct IdxImages {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> images;  // intensities in [0, 1]
  std::vector<std::size_t> labels;
};

namespace detail {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// gzopen reads plain files transparently and inflates gzip ones (detected by
// their magic bytes).
class GzReader {
 public:
  explicit GzReader(const std::string& path) : path_(path), file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw FormatError(path + ": cannot open");
  }
  ~GzReader() {
    if (file_) gzclose(file_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read(void* dst, std::size_t n, const char* what) {
    std::size_t done = 0;
    auto* p = static_cast<unsigned char*>(dst);
    while (done < n) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n - done, 1u << 30));
      const int got = gzread(file_, p + done, chunk);
      if (got <= 0)
        throw FormatError(path_ + ": truncated while reading " + what + " at offset " + std::to_string(offset_ + done));
      done += static_cast<std::size_t>(got);
    }
    offset_ += n;
  }

  std::uint32_t read_u32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  }

  std::size_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  gzFile file_;
  std::size_t offset_ = 0;
};

inline void expect_magic(GzReader& in, std::uint32_t expected) {
  const std::uint32_t magic = in.read_u32("magic");
  if (magic != expected) {
    char buf[96];
    std::snprintf(buf, sizeof buf, ": bad magic 0x%08x at offset 0 (expected 0x%08x)", magic, expected);
    throw FormatError(in.path() + buf);
  }
}

}  // namespace detail

// Parses an IDX image/label pair, keeps only labels in keep_classes (all if
// empty) in file order, and scales pixels to [0, 1].
inline IdxImages load_idx(const std::string& images_path, const std::string& labels_path,
                          const std::set<std::size_t>& keep_classes = {}) {
  detail::GzReader img(images_path);
  detail::expect_magic(img, detail::kIdxImageMagic);
  const std::uint32_t n_images = img.read_u32("image count");
  const std::uint32_t rows = img.read_u32("row count");
  const std::uint32_t cols = img.read_u32("column count");

  detail::GzReader lab(labels_path);
  detail::expect_magic(lab, detail::kIdxLabelMagic);
  const std::uint32_t n_labels = lab.read_u32("label count");
  if (n_labels != n_images)
    throw FormatError("IDX dimension mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");

  IdxImages out;
  out.rows = rows;
  out.cols = cols;
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> raw(pixels);
  for (std::uint32_t n = 0; n < n_images; ++n) {
    unsigned char label = 0;
    lab.read(&label, 1, "label");
    img.read(raw.data(), pixels, "pixels");
    if (!keep_classes.empty() && !keep_classes.count(label)) continue;
    std::vector<double> image(pixels);
    for (std::size_t k = 0; k < pixels; ++k) image[k] = raw[k] / 255.0;
    out.images.push_back(std::move(image));
    out.labels.push_back(label);
  }
  return out;
}

struct DigitsConfig {
  std::vector<std::size_t> classes{0, 1, 2};
  std::size_t train_per_class = 300;
  std::size_t test_per_class = 100;
  double rate_max_hz = 100.0;
  double window_T = 100.0;
  std::uint64_t seed = 1;
};

// Poisson-encoded digit subset. Labels are remapped to positions in
// cfg.classes; the first train_per_class images of each class (file order)
// train, the next test_per_class test.
inline Dataset build_digit_dataset(const IdxImages& idx, const DigitsConfig& cfg) {
  if (cfg.classes.empty()) throw std::invalid_argument("digits: no classes selected");
  std::mt19937_64 rng(cfg.seed);
  Dataset ds;
  ds.task = "digits";
  ds.window_T = cfg.window_T;
  ds.n_inputs = idx.rows * idx.cols;
  ds.n_classes = cfg.classes.size();
  std::vector<std::size_t> seen(cfg.classes.size(), 0);
  for (std::size_t n = 0; n < idx.images.size(); ++n) {
    const auto it = std::find(cfg.classes.begin(), cfg.classes.end(), idx.labels[n]);
    if (it == cfg.classes.end()) continue;
    const auto cls = static_cast<std::size_t>(it - cfg.classes.begin());
    const std::size_t k = seen[cls]++;
    if (k >= cfg.train_per_class + cfg.test_per_class) continue;
    Sample s;
    s.label = cls;
    s.inputs = poisson_encode(idx.images[n], cfg.rate_max_hz, cfg.window_T, rng);
    (k < cfg.train_per_class ? ds.train : ds.test).push_back(std::move(s));
  }
  return ds;
}

}  // namespace spikegrad
