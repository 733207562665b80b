// spikegrad command-line driver: gen-data, train, gradcheck, eval, raster.
// Exit codes: 0 success, 1 check failure, 2 usage / configuration error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spikegrad/spikegrad.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spikegrad;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;
constexpr const char* kOutDirEnv = "SPIKEGRAD_OUT_DIR";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_out_dir(const std::string& fallback) {
  const char* env = std::getenv(kOutDirEnv);
  return (env && *env) ? std::string(env) : fallback;
}

KernelKind parse_kernel(const std::string& s) {
  if (s == "causal") return KernelKind::CausalExponential;
  if (s == "double") return KernelKind::DoubleExponential;
  throw UsageError("unknown kernel '" + s + "'");
}

LossKind parse_loss(const std::string& s) {
  if (s == "ttfs") return LossKind::TTFSCrossEntropy;
  if (s == "mse") return LossKind::SpikeTimeMSE;
  throw UsageError("unknown loss '" + s + "'");
}

std::string loss_name(LossKind k) { return k == LossKind::TTFSCrossEntropy ? "ttfs" : "mse"; }

// FNV-1a over the dataset bytes, recorded in the manifest.
std::string fingerprint(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

Dataset load_dataset_or_usage(const std::string& path) {
  if (!fs::exists(path)) throw UsageError(path + ": no such file");
  return io::load_dataset(path);
}

// ------------------------------------------------------------------ gen-data

struct GenDataArgs {
  std::string task;
  std::size_t n = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 1;
  std::string out;
  std::string images, labels;
  std::vector<std::size_t> classes{0, 1, 2};
  std::size_t train_per_class = 300;
  std::size_t test_per_class = 100;
  double rate = 100.0;
  double window = 100.0;
  std::size_t inputs = 20;
  std::size_t n_classes = 3;
  double sigma = 2.0;
};

int cmd_gen_data(const GenDataArgs& a) {
  Dataset ds;
  if (a.task == "synthetic") {
    SyntheticConfig cfg;
    if (a.n) cfg.n_samples = a.n;
    cfg.n_inputs = a.inputs;
    cfg.n_classes = a.n_classes;
    cfg.jitter_sigma = a.sigma;
    cfg.seed = a.seed;
    cfg.window_T = a.window;
    ds = gen_synthetic(cfg);
  } else if (a.task == "yinyang") {
    YinYangConfig cfg;
    if (a.n) cfg.n_samples = a.n;
    cfg.n_test = a.n_test;
    cfg.seed = a.seed;
    cfg.window_T = a.window;
    ds = gen_yinyang(cfg);
  } else {
    if (a.images.empty() || a.labels.empty()) throw UsageError("--task digits needs --images and --labels");
    for (const auto& p : {a.images, a.labels})
      if (!fs::exists(p)) throw UsageError(p + ": no such file");
    const std::set<std::size_t> keep(a.classes.begin(), a.classes.end());
    const IdxImages idx = load_idx(a.images, a.labels, keep);
    DigitsConfig cfg;
    cfg.classes = a.classes;
    cfg.train_per_class = a.train_per_class;
    cfg.test_per_class = a.test_per_class;
    cfg.rate_max_hz = a.rate;
    cfg.window_T = a.window;
    cfg.seed = a.seed;
    ds = build_digit_dataset(idx, cfg);
  }
  validate_dataset(ds);
  io::save_dataset(a.out, ds);
  std::cout << "wrote " << a.out << ": task=" << ds.task << " train=" << ds.train.size() << " test=" << ds.test.size()
            << " inputs=" << ds.n_inputs << " classes=" << ds.n_classes << "\n";
  return kOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string mode = "full";
  std::size_t epochs = 20;
  double eta_w = 0.001, eta_d = 0.001, eta_a = 0.001;
  std::vector<std::size_t> hidden{20};
  std::string kernel = "double";
  double tau_m = 20.0, tau_s = 5.0, tau_a = 30.0, theta0 = 0.5;
  std::string loss = "ttfs";
  double xi = 20.0, penalty = 0.1;
  std::vector<double> w_init{0.0, 1.0};
  std::vector<double> d_init{0.0, 5.0};
  double a_init = 0.5;
  double d_max = -1.0, a_max = -1.0;
  double test_fraction = 0.2;
  std::size_t batch = 1;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;
  bool strict = false;
  std::string out_dir;
};

json config_json(const TrainConfig& cfg, const Topology& topo) {
  const bool delays = cfg.mode != TrainMode::WeightsOnly;
  const bool adapt = cfg.mode == TrainMode::Full;
  return {
      {"mode", to_string(cfg.mode)},
      {"trainable", {{"weights", true}, {"delays", delays}, {"adaptation", adapt}}},
      {"frozen", [&] {
         json f = json::array();
         if (!delays) f.push_back("delays");
         if (!adapt) f.push_back("adaptation");
         return f;
       }()},
      {"topology", topo.sizes()},
      {"kernel", io::kernel_to_json(cfg.neuron.kernel)},
      {"theta0", cfg.neuron.theta0},
      {"tau_a", cfg.neuron.tau_a},
      {"v_rest", cfg.neuron.v_rest},
      {"window_T", cfg.neuron.window_T},
      {"eta_w", cfg.eta_w},
      {"eta_d", cfg.eta_d},
      {"eta_A", cfg.eta_A},
      {"epochs", cfg.epochs},
      {"batch", cfg.batch},
      {"workers", cfg.workers},
      {"seed", cfg.seed},
      {"loss", {{"kind", loss_name(cfg.loss.kind)}, {"xi", cfg.loss.xi}, {"no_spike_penalty", cfg.loss.no_spike_penalty}}},
      {"init", {{"w", {cfg.init.w_lo, cfg.init.w_hi}}, {"d", {cfg.init.d_lo, cfg.init.d_hi}}, {"A", cfg.init.A_init}}},
      {"d_max", cfg.resolved_d_max()},
      {"A_max", cfg.resolved_A_max()},
      {"test_fraction", cfg.test_fraction},
      {"strict", cfg.strict},
  };
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
  std::vector<std::string> problems;
  TrainConfig cfg;
  const auto mode = parse_mode(a.mode);
  if (!mode) throw UsageError("unknown mode '" + a.mode + "'");
  cfg.mode = *mode;
  cfg.epochs = a.epochs;
  cfg.eta_w = a.eta_w;
  cfg.eta_d = a.eta_d;
  cfg.eta_A = a.eta_a;
  cfg.batch = a.batch;
  cfg.workers = a.workers;
  cfg.seed = a.seed;
  cfg.loss.kind = parse_loss(a.loss);
  cfg.loss.xi = a.xi;
  cfg.loss.no_spike_penalty = a.penalty;
  cfg.neuron.theta0 = a.theta0;
  cfg.neuron.tau_a = a.tau_a;
  try {
    cfg.neuron.kernel = KernelSpec::make(parse_kernel(a.kernel), a.tau_m, a.tau_s);
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  if (a.w_init.size() != 2) problems.push_back("--w-init takes lo,hi");
  if (a.d_init.size() != 2) problems.push_back("--d-init takes lo,hi");
  if (a.w_init.size() == 2) cfg.init.w_lo = a.w_init[0], cfg.init.w_hi = a.w_init[1];
  if (a.d_init.size() == 2) cfg.init.d_lo = a.d_init[0], cfg.init.d_hi = a.d_init[1];
  cfg.init.A_init = a.a_init;
  cfg.d_max = a.d_max;
  cfg.A_max = a.a_max;
  cfg.test_fraction = a.test_fraction;
  cfg.strict = a.strict;
  for (auto h : a.hidden)
    if (h == 0) problems.push_back("--hidden sizes must be >= 1");

  const std::string bytes = fs::exists(a.data) ? io::read_file(a.data) : std::string();
  if (bytes.empty()) throw UsageError(a.data + ": no such file or empty");
  Dataset ds;
  try {
    ds = io::dataset_from_json(json::parse(bytes));
  } catch (const json::exception& e) {
    throw FormatError(a.data + ": " + e.what());
  }
  cfg.neuron.window_T = ds.window_T;
  for (auto& p : cfg.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::cerr << "train: invalid configuration:\n";
    for (const auto& p : problems) std::cerr << "  - " << p << "\n";
    return kUsage;
  }

  std::vector<std::size_t> sizes{ds.n_inputs};
  sizes.insert(sizes.end(), a.hidden.begin(), a.hidden.end());
  sizes.push_back(ds.n_classes);
  const Topology topo(sizes);

  const fs::path out = a.out_dir;
  fs::create_directories(out);
  json manifest;
  manifest["command"] = argv;
  manifest["dataset"] = {{"path", a.data}, {"fnv1a64", fingerprint(bytes)}, {"task", ds.task},
                         {"train", ds.train.size()}, {"test", ds.test.size()}};
  manifest["config"] = config_json(cfg, topo);
  manifest["formats"] = {{"checkpoint", io::kCheckpointVersion}, {"dataset", io::kDatasetSchema},
                         {"metrics_columns", io::metrics_csv_header(topo.num_layers() - 1)}};
  manifest["outputs"] = {{"metrics", "metrics.csv"}, {"timing", "timing.csv"}, {"checkpoint", "checkpoint_final.json"}};
  io::write_file((out / "manifest.json").string(), manifest.dump(2) + "\n");

  std::ofstream metrics(out / "metrics.csv", std::ios::binary);
  std::ofstream timing(out / "timing.csv", std::ios::binary);
  metrics << io::metrics_csv_header(topo.num_layers() - 1) << "\n";
  timing << "epoch,wall_seconds\n";
  auto on_epoch = [&](const EpochMetrics& m, const Parameters& p) {
    metrics << io::metrics_csv_row(m) << "\n" << std::flush;
    timing << m.epoch << ',' << m.wall_seconds << "\n" << std::flush;
    std::cout << "epoch " << m.epoch << " loss " << m.train_loss << " train_acc " << m.train_accuracy << " test_acc "
              << m.test_accuracy << "\n";
    if (a.checkpoint_every && m.epoch % a.checkpoint_every == 0)
      io::save_checkpoint((out / ("checkpoint_epoch" + std::to_string(m.epoch) + ".json")).string(), p);
  };
  const TrainResult r = train(ds, topo, cfg, on_epoch);
  io::save_checkpoint((out / "checkpoint_final.json").string(), r.params);
  std::cout << "wrote " << out.string() << "/{manifest.json,metrics.csv,timing.csv,checkpoint_final.json}\n";
  return kOk;
}

// ----------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::vector<std::size_t> topology{3, 4, 2};
  std::size_t trials = 50;
  double h = 1e-4;
  std::string kernel = "double";
  std::string loss = "ttfs";
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool sweep = false;
  std::string report;
  std::string dump;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  if (a.trials == 0) throw UsageError("--trials must be >= 1");
  if (!(a.h > 0.0)) throw UsageError("--h must be > 0");
  if (a.topology.size() < 2) throw UsageError("--topology needs at least two layers");
  GradcheckConfig cfg;
  cfg.topology = a.topology;
  cfg.trials = a.trials;
  cfg.h = a.h;
  cfg.kernel = parse_kernel(a.kernel);
  cfg.loss = parse_loss(a.loss);
  cfg.seed = a.seed;
  cfg.workers = a.workers;

  auto summarize = [](double h, const GradcheckSummary& s) {
    std::cout << "h=" << h << " rows=" << s.rows << " stable_eligible=" << s.eligible << " passed=" << s.passed
              << " unstable=" << s.unstable << " jump_flagged=" << s.jump << " redrawn=" << s.regenerated
              << " pass_ratio=" << s.ratio() << "\n";
  };

  if (a.sweep) {
    for (double h : {1e-3, 1e-4, 1e-5}) {
      if (h == a.h) continue;
      GradcheckConfig c = cfg;
      c.h = h;
      GradcheckSummary s;
      run_gradcheck(c, &s);
      summarize(h, s);
    }
  }
  GradcheckSummary sum;
  const auto rows = run_gradcheck(cfg, &sum);
  summarize(cfg.h, sum);

  fs::path report = a.report;
  if (report.is_relative()) report = fs::path(default_out_dir(".")) / report;
  if (report.has_parent_path()) fs::create_directories(report.parent_path());
  io::write_file(report.string(), gradcheck_csv(rows));
  std::cout << "wrote " << report.string() << "\n";
  if (!a.dump.empty()) {
    json d = json::object();
    for (const auto& r : rows) d[r.param_id()] = {{"analytic", r.analytic}, {"numeric", r.numeric}, {"rel_err", r.rel_err}};
    io::write_file(a.dump, json{{"schema_version", io::kReportSchema}, {"h", cfg.h}, {"gradients", d}}.dump(1) + "\n");
  }
  std::cout << (sum.ok() ? "PASS" : "FAIL") << ": " << sum.passed << "/" << sum.eligible
            << " stable coordinates with rel_err < " << kGradcheckTolerance << "\n";
  return sum.ok() ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string split = "all";
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
  std::string loss = "ttfs";
  double xi = 20.0, penalty = 0.1;
  std::size_t workers = 1;
};

std::vector<Sample> select_split(const Dataset& ds, const std::string& which, double test_fraction, std::uint64_t seed) {
  if (which == "all") {
    std::vector<Sample> all = ds.train;
    all.insert(all.end(), ds.test.begin(), ds.test.end());
    return all;
  }
  Split s = split_dataset(ds, test_fraction, seed);
  return which == "train" ? s.train : s.test;
}

int cmd_eval(const EvalArgs& a) {
  const Dataset ds = load_dataset_or_usage(a.data);
  if (!fs::exists(a.checkpoint)) throw UsageError(a.checkpoint + ": no such file");
  const Parameters params = io::load_checkpoint(a.checkpoint);
  if (params.topology.input_size() != ds.n_inputs)
    throw FormatError("checkpoint expects " + std::to_string(params.topology.input_size()) +
                      " inputs but dataset has " + std::to_string(ds.n_inputs));
  if (params.topology.output_size() < ds.n_classes)
    throw FormatError("checkpoint has " + std::to_string(params.topology.output_size()) +
                      " outputs but dataset has " + std::to_string(ds.n_classes) + " classes");
  LossSpec loss;
  loss.kind = parse_loss(a.loss);
  loss.xi = a.xi;
  loss.no_spike_penalty = a.penalty;
  const auto samples = select_split(ds, a.split, a.test_fraction, a.seed);
  const EvalResult r = evaluate(samples, params, loss, a.workers);

  std::cout << std::setprecision(17) << "samples " << samples.size() << "\naccuracy " << r.accuracy << "\nmean_loss "
            << r.mean_loss << "\nskipped " << r.skipped << "\nconfusion (rows: true, cols: predicted)\n";
  for (const auto& row : r.confusion) {
    for (std::size_t c = 0; c < row.size(); ++c) std::cout << (c ? " " : "") << row[c];
    std::cout << "\n";
  }
  if (!a.out.empty()) {
    json j{{"schema_version", io::kReportSchema}, {"split", a.split},          {"samples", samples.size()},
           {"accuracy", r.accuracy},              {"mean_loss", r.mean_loss},  {"skipped", r.skipped},
           {"confusion", r.confusion}};
    io::write_file(a.out, j.dump(2) + "\n");
  }
  return kOk;
}

// -------------------------------------------------------------------- raster

struct RasterArgs {
  std::string data;
  std::string checkpoint;
  std::size_t index = 0;
  std::string split = "train";
  std::string out;
};

int cmd_raster(const RasterArgs& a) {
  const Dataset ds = load_dataset_or_usage(a.data);
  if (!fs::exists(a.checkpoint)) throw UsageError(a.checkpoint + ": no such file");
  const Parameters params = io::load_checkpoint(a.checkpoint);
  const auto& pool = a.split == "test" ? ds.test : ds.train;
  if (a.index >= pool.size())
    throw UsageError("--index " + std::to_string(a.index) + " out of range (" + std::to_string(pool.size()) + " samples)");
  const Sample& s = pool[a.index];
  if (s.inputs.size() != params.topology.input_size())
    throw FormatError("checkpoint expects " + std::to_string(params.topology.input_size()) +
                      " inputs but dataset has " + std::to_string(s.inputs.size()));
  json j = io::raster_to_json(simulate(params, s.inputs));
  j["label"] = s.label;
  io::write_file(a.out, j.dump(1) + "\n");
  std::cout << "wrote " << a.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikegrad: exact spike-time gradients for weights, delays and adaptive thresholds"};
  app.require_subcommand(1);
  const std::vector<std::string> kernels{"causal", "double"};
  const std::vector<std::string> losses{"ttfs", "mse"};

  GenDataArgs g;
  auto* gen = app.add_subcommand("gen-data", "generate a dataset JSON");
  gen->add_option("--task", g.task, "synthetic | yinyang | digits")
      ->required()
      ->check(CLI::IsMember({"synthetic", "yinyang", "digits"}));
  gen->add_option("--n", g.n, "number of samples (synthetic, yinyang)");
  gen->add_option("--n-test", g.n_test, "held-out samples (yinyang)");
  gen->add_option("--seed", g.seed, "generator seed");
  gen->add_option("--out", g.out, "output path")->required();
  gen->add_option("--images", g.images, "IDX image file, plain or gzip (digits)");
  gen->add_option("--labels", g.labels, "IDX label file, plain or gzip (digits)");
  gen->add_option("--classes", g.classes, "digit classes to keep")->delimiter(',');
  gen->add_option("--train-per-class", g.train_per_class);
  gen->add_option("--test-per-class", g.test_per_class);
  gen->add_option("--rate", g.rate, "peak Poisson rate in Hz (digits)");
  gen->add_option("--window", g.window, "encoding window in ms");
  gen->add_option("--inputs", g.inputs, "input neurons (synthetic)");
  gen->add_option("--n-classes", g.n_classes, "classes (synthetic)");
  gen->add_option("--sigma", g.sigma, "jitter in ms (synthetic)");

  TrainArgs t;
  t.out_dir = default_out_dir("run");
  auto* tr = app.add_subcommand("train", "train a network and write metrics, checkpoint and manifest");
  tr->add_option("--data", t.data)->required();
  tr->add_option("--mode", t.mode)->check(CLI::IsMember({"weights", "delays", "full"}));
  tr->add_option("--epochs", t.epochs);
  tr->add_option("--eta-w", t.eta_w);
  tr->add_option("--eta-d", t.eta_d);
  tr->add_option("--eta-a", t.eta_a);
  tr->add_option("--hidden", t.hidden, "hidden layer sizes, e.g. 64 or 32,16")->delimiter(',');
  tr->add_option("--kernel", t.kernel)->check(CLI::IsMember(kernels));
  tr->add_option("--tau-m", t.tau_m);
  tr->add_option("--tau-s", t.tau_s);
  tr->add_option("--tau-a", t.tau_a);
  tr->add_option("--theta0", t.theta0);
  tr->add_option("--loss", t.loss)->check(CLI::IsMember(losses));
  tr->add_option("--xi", t.xi);
  tr->add_option("--no-spike-penalty", t.penalty);
  tr->add_option("--w-init", t.w_init, "lo,hi")->delimiter(',');
  tr->add_option("--d-init", t.d_init, "lo,hi")->delimiter(',');
  tr->add_option("--a-init", t.a_init);
  tr->add_option("--d-max", t.d_max, "delay clamp; negative means window/2");
  tr->add_option("--a-max", t.a_max, "adaptation clamp; negative means 10*theta0");
  tr->add_option("--test-fraction", t.test_fraction);
  tr->add_option("--batch", t.batch);
  tr->add_option("--workers", t.workers);
  tr->add_option("--seed", t.seed);
  tr->add_option("--checkpoint-every", t.checkpoint_every, "also checkpoint every K epochs");
  tr->add_flag("--strict", t.strict, "abort on a degenerate crossing instead of skipping the sample");
  tr->add_option("--out-dir", t.out_dir, std::string("output directory (default $") + kOutDirEnv + " or ./run)");

  GradcheckArgs gc;
  gc.report = "gradcheck.csv";
  auto* gcc = app.add_subcommand("gradcheck", "compare analytic gradients with central differences");
  gcc->set_help_flag("--help", "print this help and exit");
  gcc->add_option("--topology", gc.topology)->delimiter(',');
  gcc->add_option("--trials", gc.trials);
  gcc->add_option("--h", gc.h);
  gcc->add_option("--kernel", gc.kernel)->check(CLI::IsMember(kernels));
  gcc->add_option("--loss", gc.loss)->check(CLI::IsMember(losses));
  gcc->add_option("--seed", gc.seed);
  gcc->add_option("--workers", gc.workers);
  gcc->add_flag("--sweep", gc.sweep, "also report pass ratios for h in {1e-3, 1e-4, 1e-5}");
  gcc->add_option("--report", gc.report, "CSV report path (relative paths go under $SPIKEGRAD_OUT_DIR)");
  gcc->add_option("--dump", gc.dump, "optional JSON gradient dump");

  EvalArgs e;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--data", e.data)->required();
  ev->add_option("--checkpoint", e.checkpoint)->required();
  ev->add_option("--out", e.out, "JSON report path");
  ev->add_option("--split", e.split)->check(CLI::IsMember({"all", "train", "test"}));
  ev->add_option("--seed", e.seed, "split seed, as given to train");
  ev->add_option("--test-fraction", e.test_fraction);
  ev->add_option("--loss", e.loss)->check(CLI::IsMember(losses));
  ev->add_option("--xi", e.xi);
  ev->add_option("--no-spike-penalty", e.penalty);
  ev->add_option("--workers", e.workers);

  RasterArgs r;
  auto* ra = app.add_subcommand("raster", "export the spike raster of one sample as JSON");
  ra->add_option("--data", r.data)->required();
  ra->add_option("--checkpoint", r.checkpoint)->required();
  ra->add_option("--index", r.index);
  ra->add_option("--split", r.split)->check(CLI::IsMember({"train", "test"}));
  ra->add_option("--out", r.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(g);
    if (*tr) return cmd_train(t, std::vector<std::string>(argv, argv + argc));
    if (*gcc) return cmd_gradcheck(gc);
    if (*ev) return cmd_eval(e);
    if (*ra) return cmd_raster(r);
  } catch (const UsageError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kCheckFailed;
  }
  return kUsage;
}
