// Command-line front end: wires data generation, preprocessing, ground truth,
// training, and the evaluation harnesses into seeded, reproducible runs.
// Every artifact-producing subcommand writes a run manifest beside its
// outputs; identical (inputs, seed, config) reproduce identical report bytes.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dtwapprox/data/dataset_io.hpp"
#include "dtwapprox/data/preprocess.hpp"
#include "dtwapprox/data/sampling.hpp"
#include "dtwapprox/data/synth.hpp"
#include "dtwapprox/eval/knn.hpp"
#include "dtwapprox/eval/metric_handle.hpp"
#include "dtwapprox/eval/prototypes.hpp"
#include "dtwapprox/eval/retrieval.hpp"
#include "dtwapprox/eval/timing.hpp"
#include "dtwapprox/metrics/ground_truth.hpp"
#include "dtwapprox/rng.hpp"
#include "dtwapprox/train/config.hpp"
#include "dtwapprox/train/trainer.hpp"
#include "dtwapprox/util/fs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dtwapprox;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 runtime failure, 2 usage error. A UsageError marks
// problems with the request itself (unreadable inputs, bad values) so the
// top-level handler can map them to 2 instead of 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Runs the input-loading phase of a subcommand; any failure there is the
// caller pointing at something unusable, not a runtime fault.
template <class F>
auto input_stage(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw UsageError(std::string(what) + ": " + e.what());
  }
}

void log_line(const std::string& msg) { std::cerr << "[dtwapprox] " << msg << "\n"; }

struct WallClock {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// ---------------------------------------------------------------------------
// Shared metric flags

struct MetricFlags {
  double gamma = 0.1;
  int radius = 1;
  std::string cost = "absolute";
  bool raw = false;
  bool symmetrize = false;
};

void add_metric_flags(CLI::App* sc, MetricFlags& mf, bool with_raw = true) {
  sc->add_option("--gamma", mf.gamma, "Smoothing of the soft alignment cost")
      ->capture_default_str();
  sc->add_option("--radius", mf.radius, "Corridor radius of the multiscale approximation")
      ->capture_default_str();
  sc->add_option("--cost", mf.cost, "Inner point cost")
      ->check(CLI::IsMember({"absolute", "squared"}))
      ->capture_default_str();
  if (with_raw)
    sc->add_flag("--no-normalize", mf.raw,
                 "Report raw alignment costs instead of dividing by max length");
  sc->add_flag("--symmetrize", mf.symmetrize,
               "Average the pair model over both input orders");
}

MetricOptions metric_options(const MetricFlags& mf) {
  MetricOptions opt;
  opt.gamma = mf.gamma;
  opt.radius = mf.radius;
  opt.cost = cost_kind_from_string(mf.cost);
  opt.normalize = !mf.raw;
  opt.symmetrize = mf.symmetrize;
  return opt;
}

MetricHandle resolve_or_usage(const std::string& spec, const MetricOptions& opt) {
  return input_stage("metric", [&] { return resolve_metric(spec, opt); });
}

// ---------------------------------------------------------------------------
// Config files: flat key=value lines ('#' comments), keys named after long
// flags. Values fill only options the command line left untouched, so
// explicit flags always win. Unknown keys are hard errors.

void apply_config(CLI::App& sc, const std::string& path) {
  if (path.empty()) return;
  const std::string text = input_stage("config", [&] { return read_file(path); });
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config " + path + ":" + std::to_string(line_no) +
                       ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config")
      throw UsageError("config " + path + ": config files cannot nest");
    CLI::Option* op = sc.get_option_no_throw("--" + key);
    if (op == nullptr)
      throw UsageError("config " + path + ": unknown key '" + key + "'");
    if (op->count() > 0) continue;  // explicit flag wins
    op->add_result(value);
    op->run_callback();
  }
}

void add_config_flag(CLI::App* sc, std::string& slot) {
  sc->add_option("--config", slot, "Flat key=value config file; explicit flags win")
      ->check(CLI::ExistingFile);
}

std::vector<MetricHandle> resolve_all(const std::vector<std::string>& specs,
                                      const MetricOptions& opt) {
  std::vector<MetricHandle> out;
  out.reserve(specs.size());
  for (const std::string& s : specs) out.push_back(resolve_or_usage(s, opt));
  return out;
}

// ---------------------------------------------------------------------------
// Run manifest

// Echoes the subcommand's fully resolved option values (defaults, config file
// and flags merged; flags win) as a flat string map.
json config_echo(const CLI::App& sc) {
  json cfg = json::object();
  std::istringstream lines(sc.config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '[' || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
      val = val.substr(1, val.size() - 2);
    cfg[key] = val;
  }
  return cfg;
}

void write_manifest(const fs::path& path, const std::string& subcommand, const CLI::App& sc,
                    std::uint64_t seed, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_seconds) {
  const json j{{"subcommand", subcommand}, {"config", config_echo(sc)},
               {"seed", seed},             {"inputs", inputs},
               {"outputs", outputs},       {"tool_version", kToolVersion},
               {"wall_seconds", wall_seconds}};
  atomic_write_file(path, j.dump(2) + "\n");
  log_line("wrote " + path.string());
}

void write_report(const fs::path& path, const std::string& content) {
  atomic_write_file(path, content);
  log_line("wrote " + path.string());
}

// ---------------------------------------------------------------------------
// Dataset helpers

Dataset load_dataset_or_usage(const std::string& dir) {
  return input_stage("dataset", [&] { return load_dataset(dir); });
}

std::vector<TimeSeries> split_pool(const Dataset& ds, const std::string& which) {
  if (which == "all") return ds.signals;
  const Split s = split_from_string(which);
  std::vector<TimeSeries> out;
  for (std::size_t i = 0; i < ds.signals.size(); ++i)
    if (ds.split[i] == s) out.push_back(ds.signals[i]);
  if (out.empty())
    throw std::invalid_argument("no signals carry the '" + which + "' split tag");
  return out;
}

// ---------------------------------------------------------------------------
// compute

struct ComputeOpts {
  std::string x, y, metric = "dtw", out;
  bool normalize = false;
  MetricFlags mf;
};

void run_compute(const ComputeOpts& o, const CLI::App& sc) {
  WallClock clock;
  MetricOptions opt = metric_options(o.mf);
  // Unlike the evaluation harnesses, a bare pair distance is reported raw;
  // --normalize opts into the per-length scaling.
  opt.normalize = o.normalize;
  const MetricHandle m = resolve_or_usage(o.metric, opt);

  TimeSeries a, b;
  a.values = input_stage("x", [&] { return load_signal_file(o.x); });
  a.id = o.x;
  b.values = input_stage("y", [&] { return load_signal_file(o.y); });
  b.id = o.y;

  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", m.distance(a, b));
  std::cout << buf << "\n";
  if (!o.out.empty()) {
    write_report(o.out, std::string(buf) + "\n");
    write_manifest(o.out + ".manifest.json", "compute", sc, 0, {o.x, o.y}, {o.out},
                   clock.seconds());
  }
}

// ---------------------------------------------------------------------------
// gen-data

struct GenOpts {
  std::string out;
  std::vector<std::string> bands;  // "lo:hi" per class
  SynthConfig cfg;
  std::string config;
};

void run_gen_data(GenOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  for (const std::string& b : o.bands) {
    const auto colon = b.find(':');
    if (colon == std::string::npos)
      throw UsageError("--class_band expects lo:hi, got '" + b + "'");
    o.cfg.class_bands.emplace_back(std::stod(b.substr(0, colon)),
                                   std::stod(b.substr(colon + 1)));
  }
  const Dataset ds = synth_gen(o.cfg);
  save_dataset(o.out, ds);
  log_line("wrote " + o.out + " (" + std::to_string(ds.signals.size()) + " signals)");
  write_manifest(fs::path(o.out) / "run_manifest.json", "gen-data", sc, o.cfg.seed, {},
                 {o.out}, clock.seconds());
}

// ---------------------------------------------------------------------------
// preprocess

struct PrepOpts {
  std::string in, out;
  long slice = 0;
  long len_min = 0, len_max = 0;
  std::uint64_t seed = 0;
  std::string config;
};

void run_preprocess(const PrepOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  Dataset ds = load_dataset_or_usage(o.in);
  if (o.slice > 0 && (o.len_min > 0 || o.len_max > 0))
    throw std::invalid_argument("--slice and --len_min/--len_max are mutually exclusive");
  if ((o.len_min > 0) != (o.len_max > 0))
    throw std::invalid_argument("--len_min and --len_max must be given together");

  const PreprocessStats stats = compute_stats(ds);
  clip(ds, stats);
  minmax(ds, stats);
  Rng rng(o.seed);
  if (o.slice > 0)
    ds = slice_fixed(ds, o.slice, rng);
  else if (o.len_min > 0)
    ds = sample_lengths(ds, o.len_min, o.len_max, rng);

  save_dataset(o.out, ds);
  save_stats(fs::path(o.out) / "preprocess_stats.json", stats);
  log_line("wrote " + o.out);
  write_manifest(fs::path(o.out) / "run_manifest.json", "preprocess", sc, o.seed, {o.in},
                 {o.out}, clock.seconds());
}

// ---------------------------------------------------------------------------
// ground-truth

struct GtOpts {
  std::string in, out;
  std::uint64_t n_pairs = 1000000, n_pairs_val = 100000, n_pairs_test = 1000;
  std::string format = "csv";
  std::uint64_t seed = 0;
  unsigned workers = 0;
  MetricFlags mf;
  std::string config;
};

void run_ground_truth(const GtOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  const Dataset ds = load_dataset_or_usage(o.in);
  const Rng root(o.seed);

  // Pairs never cross splits, so one file can feed training (train pairs),
  // early stopping (val pairs) and reporting (test pairs).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  {
    Rng rt = root.fork(1), rv = root.fork(2), rs = root.fork(3);
    auto train = sample_split_pairs(ds, Split::train, o.n_pairs, rt);
    auto val = sample_split_pairs(ds, Split::val, o.n_pairs_val, rv);
    auto test = sample_split_pairs(ds, Split::test, o.n_pairs_test, rs);
    pairs.reserve(train.size() + val.size() + test.size());
    pairs.insert(pairs.end(), train.begin(), train.end());
    pairs.insert(pairs.end(), val.begin(), val.end());
    pairs.insert(pairs.end(), test.begin(), test.end());
  }

  const PairGroundTruth gt = build_ground_truth(ds.signals, pairs, !o.mf.raw,
                                                cost_kind_from_string(o.mf.cost), o.workers);
  fs::create_directories(o.out);
  const fs::path file = fs::path(o.out) / ("ground_truth." + o.format);
  save_ground_truth(file, gt);
  log_line("wrote " + file.string() + " (" + std::to_string(gt.entries.size()) + " pairs)");
  write_manifest(fs::path(o.out) / "run_manifest.json", "ground-truth", sc, o.seed, {o.in},
                 {file.string()}, clock.seconds());
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
  std::string data, gt, out;
  TrainConfig cfg;
  std::string config;
};

void run_train(const TrainOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  const Dataset ds = load_dataset_or_usage(o.data);
  const PairGroundTruth gt = input_stage("ground truth", [&] { return load_ground_truth(o.gt); });

  const TrainResult r = train_model(o.cfg, ds, gt);

  fs::create_directories(o.out);
  const fs::path ckpt_path = fs::path(o.out) / "model.ckpt";
  save_checkpoint(ckpt_path, r.checkpoint);
  log_line("wrote " + ckpt_path.string());
  write_report(fs::path(o.out) / "losses.csv", losses_csv(r.report));
  // Wall time lives in the manifest only, keeping the report reproducible.
  json rep = report_to_json(r.report);
  rep.erase("wall_seconds");
  write_report(fs::path(o.out) / "report.json", rep.dump(2) + "\n");
  write_manifest(fs::path(o.out) / "run_manifest.json", "train", sc, o.cfg.seed,
                 {o.data, o.gt}, {o.out}, clock.seconds());
  log_line("best val loss " + fmt_g9(r.report.best_val_loss) + " at epoch " +
           std::to_string(r.report.best_epoch));
}

// ---------------------------------------------------------------------------
// eval retrieval / eval knn

struct RetrievalOpts {
  std::string data, out, reference = "exact_dtw", split = "test";
  std::vector<std::string> metrics;
  std::size_t nt = 100;
  int top_k = 5, reps = 8;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  MetricFlags mf;
  std::string config;
};

void run_eval_retrieval(const RetrievalOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  const Dataset ds = load_dataset_or_usage(o.data);
  const std::vector<TimeSeries> pool = split_pool(ds, o.split);
  const MetricOptions opt = metric_options(o.mf);
  const MetricHandle reference = resolve_or_usage(o.reference, opt);
  const std::vector<MetricHandle> metrics = resolve_all(o.metrics, opt);

  // Same seed for every metric: all columns see identical query subsets.
  const Rng rng(o.seed);
  std::vector<RetrievalReport> reports;
  json arr = json::array();
  for (const MetricHandle& m : metrics) {
    log_line("retrieval: " + m.name + " vs " + reference.name);
    reports.push_back(
        nn_retrieval_agreement(m, reference, pool, o.nt, o.top_k, o.reps, rng, o.workers));
    arr.push_back(retrieval_to_json(reports.back()));
  }

  fs::create_directories(o.out);
  write_report(fs::path(o.out) / "retrieval.csv", retrieval_csv(reports));
  write_report(fs::path(o.out) / "retrieval.json", arr.dump(2) + "\n");
  write_manifest(fs::path(o.out) / "run_manifest.json", "eval retrieval", sc, o.seed,
                 {o.data}, {o.out}, clock.seconds());
}

struct KnnOpts {
  std::string data, out, split = "test";
  std::vector<std::string> metrics;
  int k = 1, reps = 5;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  MetricFlags mf;
  std::string config;
};

void run_eval_knn(const KnnOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  const Dataset ds = load_dataset_or_usage(o.data);
  const std::vector<TimeSeries> pool = split_pool(ds, o.split);
  const std::vector<MetricHandle> metrics = resolve_all(o.metrics, metric_options(o.mf));

  std::vector<ClassifReport> reports;
  json arr = json::array();
  for (const MetricHandle& m : metrics) {
    log_line("knn: " + m.name);
    reports.push_back(knn_macro_f1(m, pool, {}, o.k, o.reps, Rng(o.seed), o.workers));
    for (const std::string& w : reports.back().warnings) log_line("warning: " + w);
    arr.push_back(knn_to_json(reports.back()));
  }

  fs::create_directories(o.out);
  write_report(fs::path(o.out) / "knn.csv", knn_csv(reports));
  write_report(fs::path(o.out) / "knn.json", arr.dump(2) + "\n");
  write_manifest(fs::path(o.out) / "run_manifest.json", "eval knn", sc, o.seed, {o.data},
                 {o.out}, clock.seconds());
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::string out;
  std::string config;
  std::vector<std::string> metrics;
  std::vector<Eigen::Index> lengths = {500, 1000, 3000};
  int reps = 1000, warmup = 2;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  MetricFlags mf;
};

void run_bench(const BenchOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  if (o.workers > 1) log_line("timing runs on one worker; ignoring --workers");
  const std::vector<MetricHandle> metrics = resolve_all(o.metrics, metric_options(o.mf));

  const TimingReport report = timing_bench(metrics, o.lengths, o.reps, Rng(o.seed), o.warmup);

  fs::create_directories(o.out);
  write_report(fs::path(o.out) / "timing.csv", timing_csv(report));
  write_report(fs::path(o.out) / "timing.json", timing_to_json(report).dump(2) + "\n");
  write_manifest(fs::path(o.out) / "run_manifest.json", "bench", sc, o.seed, {}, {o.out},
                 clock.seconds());
}

// ---------------------------------------------------------------------------
// prototypes

struct ProtoOpts {
  std::string data, model, out;
  std::uint64_t seed = 0;
  PrototypeConfig cfg;
  MetricFlags mf;
  std::string config;
};

void run_prototypes(const ProtoOpts& o, CLI::App& sc) {
  WallClock clock;
  apply_config(sc, o.config);
  const Dataset ds = load_dataset_or_usage(o.data);
  const MetricHandle m = resolve_or_usage(o.model, metric_options(o.mf));
  if (!m.model)
    throw std::invalid_argument(
        "prototypes require a model-backed metric (siamese@file or direct@file), got '" +
        m.name + "'");

  const PrototypeResult result = train_prototypes(m, ds, o.cfg, Rng(o.seed));

  fs::create_directories(o.out);
  write_report(fs::path(o.out) / "prototypes.json", prototypes_to_json(result).dump(2) + "\n");
  write_report(fs::path(o.out) / "prototypes.csv", prototype_csv(result.report));
  write_manifest(fs::path(o.out) / "run_manifest.json", "prototypes", sc, o.seed,
                 {o.data, o.model}, {o.out}, clock.seconds());
  log_line("final val accuracy " + fmt_g9(result.report.val_accuracy.back()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DTW neural approximation toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // --- compute ---
  ComputeOpts co;
  CLI::App* compute = app.add_subcommand("compute", "Print the distance between two signals");
  compute->add_option("x", co.x, "First signal file (.f32 or .csv)")
      ->required()
      ->check(CLI::ExistingFile);
  compute->add_option("y", co.y, "Second signal file (.f32 or .csv)")
      ->required()
      ->check(CLI::ExistingFile);
  compute->add_option("--metric", co.metric, "Metric spec: name[@checkpoint]")
      ->capture_default_str();
  compute->add_option("--out", co.out, "Also write the value to this file");
  compute->add_flag("--normalize", co.normalize, "Divide the cost by max(len_x, len_y)");
  add_metric_flags(compute, co.mf, /*with_raw=*/false);
  compute->callback([&] { run_compute(co, *compute); });

  // --- gen-data ---
  GenOpts go;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic labeled dataset");
  add_config_flag(gen, go.config);
  gen->add_option("--out", go.out, "Output dataset directory")->required();
  gen->add_option("--seed", go.cfg.seed, "Generator seed")->capture_default_str();
  gen->add_option("--n_classes", go.cfg.n_classes, "Number of classes")->capture_default_str();
  gen->add_option("--signals_per_class", go.cfg.signals_per_class, "Signals per class")
      ->capture_default_str();
  gen->add_option("--total_signals", go.cfg.total_signals,
                  "Exact total signal count (overrides signals_per_class)")
      ->capture_default_str();
  gen->add_option("--min_len", go.cfg.min_len, "Minimum signal length")->capture_default_str();
  gen->add_option("--max_len", go.cfg.max_len, "Maximum signal length")->capture_default_str();
  gen->add_option("--sample_rate", go.cfg.sample_rate, "Samples per second")
      ->capture_default_str();
  gen->add_option("--class_band", go.bands,
                  "Per-class frequency band lo:hi in Hz (repeatable)");
  gen->add_option("--waves_per_signal", go.cfg.waves_per_signal, "Sinusoids per signal")
      ->capture_default_str();
  gen->add_option("--noise_level", go.cfg.noise_level, "Smooth noise innovation scale")
      ->capture_default_str();
  gen->add_option("--outlier_rate", go.cfg.outlier_rate, "Per-sample spike probability")
      ->capture_default_str();
  gen->add_option("--signals_per_subject", go.cfg.signals_per_subject,
                  "Signals per subject group")
      ->capture_default_str();
  gen->add_option("--train_frac", go.cfg.train_frac, "Train split fraction")
      ->capture_default_str();
  gen->add_option("--val_frac", go.cfg.val_frac, "Validation split fraction")
      ->capture_default_str();
  gen->callback([&] { run_gen_data(go, *gen); });

  // --- preprocess ---
  PrepOpts po;
  CLI::App* prep = app.add_subcommand("preprocess", "Clip, min-max normalize and slice");
  add_config_flag(prep, po.config);
  prep->add_option("--in", po.in, "Input dataset directory")->required();
  prep->add_option("--out", po.out, "Output dataset directory")->required();
  prep->add_option("--slice", po.slice, "Slice every signal to this fixed length")
      ->capture_default_str();
  prep->add_option("--len_min", po.len_min, "Lower bound for uniform random lengths")
      ->capture_default_str();
  prep->add_option("--len_max", po.len_max, "Upper bound for uniform random lengths")
      ->capture_default_str();
  prep->add_option("--seed", po.seed, "Slicing seed")->capture_default_str();
  prep->callback([&] { run_preprocess(po, *prep); });

  // --- ground-truth ---
  GtOpts gt;
  CLI::App* gtc = app.add_subcommand("ground-truth", "Exact alignment costs for sampled pairs");
  add_config_flag(gtc, gt.config);
  gtc->add_option("--in", gt.in, "Input dataset directory")->required();
  gtc->add_option("--out", gt.out, "Output directory")->required();
  gtc->add_option("--n_pairs", gt.n_pairs, "Train-split pairs")->capture_default_str();
  gtc->add_option("--n_pairs_val", gt.n_pairs_val, "Val-split pairs")->capture_default_str();
  gtc->add_option("--n_pairs_test", gt.n_pairs_test, "Test-split pairs")->capture_default_str();
  gtc->add_option("--format", gt.format, "Output format")
      ->check(CLI::IsMember({"csv", "bin"}))
      ->capture_default_str();
  gtc->add_option("--seed", gt.seed, "Pair sampling seed")->capture_default_str();
  gtc->add_option("--workers", gt.workers, "Parallel workers (0 = all cores)")
      ->capture_default_str();
  gtc->add_option("--cost", gt.mf.cost, "Inner point cost")
      ->check(CLI::IsMember({"absolute", "squared"}))
      ->capture_default_str();
  gtc->add_flag("--no-normalize", gt.mf.raw,
                "Store raw alignment costs instead of dividing by max length");
  gtc->callback([&] { run_ground_truth(gt, *gtc); });

  // --- train ---
  TrainOpts to;
  CLI::App* train = app.add_subcommand("train", "Train an approximation model");
  add_config_flag(train, to.config);
  train->add_option("--data", to.data, "Preprocessed dataset directory")->required();
  train->add_option("--gt", to.gt, "Ground-truth pair file")->required();
  train->add_option("--out", to.out, "Output directory")->required();
  train->add_option("--model_kind", to.cfg.model_kind, "'siamese' or 'direct'")
      ->capture_default_str();
  train->add_option("--L", to.cfg.L, "Slice length the model expects")->capture_default_str();
  train->add_option("--H", to.cfg.H, "Embedding size")->capture_default_str();
  train->add_option("--batch_size", to.cfg.batch_size, "Pairs per mini-batch")
      ->capture_default_str();
  train->add_option("--lambda", to.cfg.lambda, "Reconstruction weight")->capture_default_str();
  train->add_option("--lr", to.cfg.lr, "Learning rate")->capture_default_str();
  train->add_option("--max_epochs", to.cfg.max_epochs, "Epoch budget")->capture_default_str();
  train->add_option("--patience", to.cfg.patience, "Early-stopping patience")
      ->capture_default_str();
  train->add_option("--seed", to.cfg.seed, "Training seed")->capture_default_str();
  train->add_option("--n_signals", to.cfg.n_signals, "Train signals (echoed)")
      ->capture_default_str();
  train->add_option("--n_pairs", to.cfg.n_pairs, "Train pairs (echoed)")->capture_default_str();
  train->add_option("--n_signals_val", to.cfg.n_signals_val, "Val signals (echoed)")
      ->capture_default_str();
  train->add_option("--n_pairs_val", to.cfg.n_pairs_val, "Val pairs (echoed)")
      ->capture_default_str();
  train->add_option("--n_signals_test", to.cfg.n_signals_test, "Test signals (echoed)")
      ->capture_default_str();
  train->add_option("--n_pairs_test", to.cfg.n_pairs_test, "Test pairs (echoed)")
      ->capture_default_str();
  train->callback([&] { run_train(to, *train); });

  // --- eval ---
  CLI::App* eval = app.add_subcommand("eval", "Evaluation harnesses");
  eval->require_subcommand(1);

  RetrievalOpts ro;
  CLI::App* ret = eval->add_subcommand("retrieval", "Nearest-neighbour retrieval agreement");
  add_config_flag(ret, ro.config);
  ret->add_option("--data", ro.data, "Dataset directory")->required();
  ret->add_option("--out", ro.out, "Output directory")->required();
  ret->add_option("--metric", ro.metrics, "Metric spec: name[@checkpoint] (repeatable)")
      ->required();
  ret->add_option("--reference", ro.reference, "Reference metric")->capture_default_str();
  ret->add_option("--nt", ro.nt, "Signals sampled per repetition")->capture_default_str();
  ret->add_option("--top_k", ro.top_k, "Reference neighbourhood size")->capture_default_str();
  ret->add_option("--reps", ro.reps, "Repetitions")->capture_default_str();
  ret->add_option("--seed", ro.seed, "Subset sampling seed")->capture_default_str();
  ret->add_option("--workers", ro.workers, "Parallel workers (0 = all cores)")
      ->capture_default_str();
  ret->add_option("--split", ro.split, "Signal pool")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  add_metric_flags(ret, ro.mf);
  ret->callback([&] { run_eval_retrieval(ro, *ret); });

  KnnOpts ko;
  CLI::App* knn = eval->add_subcommand("knn", "KNN classification macro-F1");
  add_config_flag(knn, ko.config);
  knn->add_option("--data", ko.data, "Dataset directory")->required();
  knn->add_option("--out", ko.out, "Output directory")->required();
  knn->add_option("--metric", ko.metrics, "Metric spec: name[@checkpoint] (repeatable)")
      ->required();
  knn->add_option("--k", ko.k, "Neighbours per vote")->capture_default_str();
  knn->add_option("--reps", ko.reps, "Random 50/50 re-splits")->capture_default_str();
  knn->add_option("--seed", ko.seed, "Re-split seed")->capture_default_str();
  knn->add_option("--workers", ko.workers, "Parallel workers (0 = all cores)")
      ->capture_default_str();
  knn->add_option("--split", ko.split, "Signal pool")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  add_metric_flags(knn, ko.mf);
  knn->callback([&] { run_eval_knn(ko, *knn); });

  // --- bench ---
  BenchOpts bo;
  CLI::App* bench = app.add_subcommand("bench", "Wall-clock timing per metric and length");
  add_config_flag(bench, bo.config);
  bench->add_option("--out", bo.out, "Output directory")->required();
  bench->add_option("--metric", bo.metrics, "Metric spec: name[@checkpoint] (repeatable)")
      ->required();
  bench->add_option("--lengths", bo.lengths, "Series lengths (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--reps", bo.reps, "Distance computations per cell")->capture_default_str();
  bench->add_option("--warmup", bo.warmup, "Unmeasured warm-up runs per cell")
      ->capture_default_str();
  bench->add_option("--seed", bo.seed, "Pair generation seed")->capture_default_str();
  bench->add_option("--workers", bo.workers, "Accepted for symmetry; timing is serial")
      ->capture_default_str();
  add_metric_flags(bench, bo.mf);
  bench->callback([&] { run_bench(bo, *bench); });

  // --- prototypes ---
  ProtoOpts pr;
  CLI::App* proto = app.add_subcommand("prototypes", "Learn class prototypes through a model");
  add_config_flag(proto, pr.config);
  proto->add_option("--data", pr.data, "Labeled dataset directory")->required();
  proto->add_option("--model", pr.model, "Model metric spec (siamese@file or direct@file)")
      ->required();
  proto->add_option("--out", pr.out, "Output directory")->required();
  proto->add_option("--epochs", pr.cfg.epochs, "Training epochs")->capture_default_str();
  proto->add_option("--lr", pr.cfg.lr, "Step size on prototype values")->capture_default_str();
  proto->add_option("--beta", pr.cfg.beta, "Prototype-separation weight")
      ->capture_default_str();
  proto->add_option("--batch_size", pr.cfg.batch_size, "Samples per mini-batch")
      ->capture_default_str();
  proto->add_option("--init_members", pr.cfg.init_members,
                    "Class members averaged into the initial prototype")
      ->capture_default_str();
  proto->add_option("--seed", pr.seed, "Initialization and shuffling seed")
      ->capture_default_str();
  add_metric_flags(proto, pr.mf);
  proto->callback([&] { run_prototypes(pr, *proto); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
