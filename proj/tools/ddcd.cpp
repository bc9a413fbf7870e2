// ddcd command line: gen, fit, eval, bench, h, config.
//
// Exit codes: 0 ok, 1 every benchmark run failed, 2 usage or input error,
// 3 non-finite training loss.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddcd/acyclicity.hpp"
#include "ddcd/error.hpp"
#include "ddcd/evaluation.hpp"
#include "ddcd/fit.hpp"
#include "ddcd/graph_synth.hpp"
#include "ddcd/io.hpp"
#include "ddcd/rng.hpp"
#include "ddcd/version.hpp"

namespace fs = std::filesystem;
using namespace ddcd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSweepFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("DDCD_SEED");
  if (!s || !*s) return std::nullopt;
  std::uint64_t v = 0;
  const char* end = s + std::char_traits<char>::length(s);
  const auto [ptr, ec] = std::from_chars(s, end, v);
  if (ec != std::errc() || ptr != end)
    throw ValidationError(std::string("DDCD_SEED is not an unsigned integer: ") + s);
  return v;
}

// Collects what a run read and wrote; written last so a manifest only
// exists for runs that finished.
struct Manifest {
  Json j;
  explicit Manifest(const std::string& command, const std::vector<std::string>& argv) {
    j["command"] = command;
    j["argv"] = argv;
    j["build_id"] = std::string(build_id());
    j["started_utc"] = utc_now();
    j["inputs"] = Json::array();
    j["outputs"] = Json::array();
  }
  void input(const fs::path& p) { j["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { j["outputs"].push_back(p.string()); }
  void write(const fs::path& path) {
    j["finished_utc"] = utc_now();
    write_json_file(path.string(), j);
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

// ---- gen ----

struct GenArgs {
  std::size_t d = 20;
  std::string family = "er";
  double degree = 4.0;
  std::string mech = "linear";
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise_std = 1.0;
  double weight_low = 0.5;
  double weight_high = 2.0;
  std::string out = ".";
};

int cmd_gen(const GenArgs& a, const std::vector<std::string>& argv) {
  GraphSpec g;
  g.d = a.d;
  g.family = parse_graph_family(a.family);
  g.expected_degree = a.degree;
  g.seed = env_seed().value_or(a.seed);
  g.weight_low = a.weight_low;
  g.weight_high = a.weight_high;
  SemSpec sem;
  sem.mechanism = parse_mechanism(a.mech);
  sem.n = a.n;
  sem.noise_std = a.noise_std;

  Manifest m("gen", argv);
  const GroundTruth gt = gen_dag(g);
  const SemSample sample = simulate_sem(gt, sem, derive_seed(g.seed, Stream::kNoise));

  const fs::path dir(a.out);
  ensure_dir(dir);
  write_dataset_csv((dir / "X.csv").string(), sample.data);
  write_adjacency_tsv((dir / "gt.tsv").string(), gt.adjacency, AdjacencyFormat::kEdgeList);

  Json side;
  side["graph"] = graph_spec_to_json(g);
  side["sem"] = sem_spec_to_json(sem);
  side["edges"] = edge_count(gt.adjacency);
  side["topological_order"] = gt.topological_order;
  write_json_file((dir / "gt.json").string(), side);

  m.j["config"] = side;
  m.j["seed"] = g.seed;
  for (const char* f : {"X.csv", "gt.tsv", "gt.json"}) m.output(dir / f);
  m.write(dir / "gen.manifest.json");
  return kExitOk;
}

// ---- fit ----

struct FitArgs {
  std::string data;
  std::string model = "linear";
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string format = "dense";
  std::string out = ".";
};

std::pair<double, double> data_range(const Matrix& X) {
  const auto [lo, hi] = std::minmax_element(X.values().begin(), X.values().end());
  return {*lo, *hi};
}

int cmd_fit(const FitArgs& a, const std::vector<std::string>& argv) {
  const ModelKind kind = parse_model_kind(a.model);
  TrainConfig config = TrainConfig::defaults_for(kind);
  Manifest m("fit", argv);
  if (!a.config.empty()) {
    config = config_from_json(read_json_file(a.config), config);
    m.input(a.config);
  }
  // flag beats environment beats file
  if (auto s = env_seed()) config.seed = *s;
  if (a.seed) config.seed = *a.seed;
  validate(config);

  const AdjacencyFormat format =
      a.format == "edges" ? AdjacencyFormat::kEdgeList : AdjacencyFormat::kDense;
  const Dataset data = read_dataset_csv(a.data);
  m.input(a.data);

  FitResult r;
  try {
    r = fit_model(kind, data, config);
  } catch (const NumericAbort& e) {
    std::cerr << "ddcd fit: numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  }

  const fs::path dir(a.out);
  ensure_dir(dir);
  Matrix W = r.W;
  // An edge list of raw weights would list every pair; keep the ones the
  // threshold would keep.
  if (format == AdjacencyFormat::kEdgeList)
    for (double& v : W.values())
      if (std::abs(v) <= config.threshold) v = 0.0;
  write_adjacency_tsv((dir / "W.tsv").string(), W, format);
  write_history_csv((dir / "history.csv").string(), r.history);
  m.output(dir / "W.tsv");
  m.output(dir / "history.csv");

  if (r.nonlinear) {
    const auto [lo, hi] = data_range(data.X);
    write_curve_csv((dir / "encoder_curve.csv").string(),
                    sample_curve(r.nonlinear->encoder, lo, hi, 201));
    // decoder inputs are unit-RMS latents mixed by W
    write_curve_csv((dir / "decoder_curve.csv").string(),
                    sample_curve(r.nonlinear->decoder, -3.0, 3.0, 201));
    m.output(dir / "encoder_curve.csv");
    m.output(dir / "decoder_curve.csv");
  }
  if (r.normalizer) {
    write_curve_csv((dir / "normalizer_curve.csv").string(),
                    sample_curve(r.normalizer->mlp, -4.0, 4.0, 201));
    m.output(dir / "normalizer_curve.csv");
  }

  m.j["config"] = config_to_json(config);
  m.j["model"] = std::string(to_string(kind));
  m.j["seed"] = config.seed;
  m.j["format"] = a.format;
  m.write(dir / "fit.manifest.json");
  return kExitOk;
}

// ---- eval ----

int cmd_eval(const std::string& pred_path, const std::string& truth_path, double omega) {
  const Matrix W = read_adjacency_tsv(pred_path);
  const Matrix truth = read_adjacency_tsv(truth_path);
  require(W.rows() == truth.rows(), "eval: prediction and truth have different node counts");
  const EvalReport rep = compute_metrics(threshold_edges(W, omega), truth);
  if (rep.prediction_cyclic) std::cerr << "ddcd eval: warning: thresholded prediction is cyclic\n";
  std::cout << report_to_json(rep).dump(2) << "\n";
  return kExitOk;
}

// ---- bench ----

struct BenchArgs {
  std::string grid;
  std::string out = "bench_out";
  int workers = 1;
  bool resume = false;
};

int cmd_bench(const BenchArgs& a, const std::vector<std::string>& argv) {
  Manifest m("bench", argv);
  const Json grid_json = read_json_file(a.grid);
  m.input(a.grid);
  BenchGrid grid = grid_from_json(grid_json);
  if (auto s = env_seed())
    for (auto& cell : grid.cells) cell.config.seed = *s;
  require(a.workers >= 1, "bench: --workers must be at least 1");

  const fs::path dir(a.out);
  ensure_dir(dir);
  const fs::path rows_path = dir / "rows.csv";

  std::vector<BenchRow> previous;
  BenchOptions opt;
  opt.workers = a.workers;
  if (a.resume && fs::exists(rows_path)) {
    previous = read_bench_rows(rows_path.string());
    for (const auto& r : previous) opt.completed.insert({r.cell, r.seed});
  }

  // Rows are appended as they finish so an interrupted sweep leaves usable
  // partial output for --resume.
  std::ofstream live(rows_path, a.resume && !previous.empty() ? std::ios::app : std::ios::trunc);
  if (!live) throw IoError("cannot open " + rows_path.string() + " for writing");
  if (previous.empty()) write_bench_rows(live, {}, true);
  opt.on_row = [&live](const BenchRow& row) {
    write_bench_rows(live, {row}, false);
    live.flush();
  };

  std::vector<BenchRow> rows = run_benchmark(grid, opt);
  live.close();

  rows.insert(rows.end(), previous.begin(), previous.end());
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& x, const BenchRow& y) {
    return x.cell != y.cell ? x.cell < y.cell : x.seed < y.seed;
  });
  {
    std::ofstream final_out(rows_path, std::ios::trunc);
    if (!final_out) throw IoError("cannot open " + rows_path.string() + " for writing");
    write_bench_rows(final_out, rows, true);
  }
  write_aggregate_csv((dir / "aggregate.csv").string(), aggregate(rows));

  std::size_t failed = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      ++failed;
      std::cerr << "ddcd bench: cell " << r.cell << " seed " << r.seed << ": " << r.error << "\n";
    }

  Json cells = Json::array();
  for (const auto& c : grid.cells)
    cells.push_back({{"graph", graph_spec_to_json(c.graph)},
                     {"sem", sem_spec_to_json(c.sem)},
                     {"model", std::string(to_string(c.model))},
                     {"config", config_to_json(c.config)}});
  m.j["config"] = {{"cells", cells}, {"seeds", grid.seeds}, {"workers", a.workers}};
  m.j["seed"] = grid.seeds;
  m.j["rows"] = rows.size();
  m.j["failed"] = failed;
  m.output(rows_path);
  m.output(dir / "aggregate.csv");
  m.write(dir / "bench.manifest.json");

  return !rows.empty() && failed == rows.size() ? kExitSweepFailed : kExitOk;
}

// ---- h ----

int cmd_h(const std::string& input, int k, double gamma) {
  const Matrix W = read_adjacency_tsv(input);
  const int kk = k > 0 ? k : static_cast<int>(W.rows());
  std::cout << format_double(h_khop_value(W, kk, gamma)) << "\n";
  return kExitOk;
}

// ---- config ----

int cmd_config(const std::string& model, const std::string& file) {
  TrainConfig c = TrainConfig::defaults_for(parse_model_kind(model));
  if (!file.empty()) c = config_from_json(read_json_file(file), c);
  if (auto s = env_seed()) c.seed = *s;
  validate(c);
  std::cout << config_to_json(c).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ddcd: causal structure learning by denoising diffusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(build_id()));
  const std::vector<std::string> args(argv, argv + argc);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a random DAG and data sampled from it");
  g->add_option("--d", gen.d, "number of variables")->check(CLI::Range(2, 100000));
  g->add_option("--family", gen.family, "graph family")->check(CLI::IsMember({"er", "sf"}));
  g->add_option("--degree", gen.degree, "ER expected degree or SF attachment count");
  g->add_option("--mech", gen.mech, "link function (linear, sin, cos, ...)");
  g->add_option("--n", gen.n, "number of samples")->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "seed for graph, weights and noise");
  g->add_option("--noise-std", gen.noise_std, "additive Gaussian noise std");
  g->add_option("--weight-low", gen.weight_low, "smallest edge weight magnitude");
  g->add_option("--weight-high", gen.weight_high, "largest edge weight magnitude");
  g->add_option("--out", gen.out, "output directory");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "learn a weighted adjacency from a data CSV");
  f->add_option("--data", fit.data, "data CSV")->required();
  f->add_option("--model", fit.model, "model")->check(CLI::IsMember({"linear", "nonlinear", "smooth"}));
  f->add_option("--config", fit.config, "JSON config overriding the model defaults");
  f->add_option("--seed", fit.seed, "training seed (overrides config and DDCD_SEED)");
  f->add_option("--format", fit.format, "W.tsv layout")->check(CLI::IsMember({"dense", "edges"}));
  f->add_option("--out", fit.out, "output directory");

  std::string pred, truth;
  double omega = 0.3;
  auto* e = app.add_subcommand("eval", "score a learned adjacency against the truth");
  e->add_option("--pred", pred, "learned adjacency TSV")->required();
  e->add_option("--truth", truth, "true adjacency TSV")->required();
  e->add_option("--omega", omega, "edge threshold on |W|")->check(CLI::NonNegativeNumber);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "run a grid of generate, fit, evaluate");
  b->add_option("--grid", bench.grid, "grid JSON")->required();
  b->add_option("--out", bench.out, "output directory");
  b->add_option("--workers", bench.workers, "parallel runs");
  b->add_flag("--resume", bench.resume, "skip (cell, seed) pairs already in rows.csv");

  std::string h_input;
  int k = 0;
  double gamma = 1.0;
  auto* h = app.add_subcommand("h", "evaluate the k-hop acyclicity score of an adjacency");
  h->add_option("--input", h_input, "adjacency TSV (dense or edge list)")->required();
  h->add_option("--k", k, "hops; 0 means d")->check(CLI::NonNegativeNumber);
  h->add_option("--gamma", gamma, "scaling, leaves the value unchanged")->check(CLI::PositiveNumber);

  bool show_default = false;
  std::string cfg_model = "linear", cfg_file;
  auto* c = app.add_subcommand("config", "print a resolved training config");
  c->add_flag("--default", show_default, "print the defaults for --model");
  c->add_option("--model", cfg_model, "model")->check(CLI::IsMember({"linear", "nonlinear", "smooth"}));
  c->add_option("--config", cfg_file, "config JSON to merge over the defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen, args);
    if (*f) return cmd_fit(fit, args);
    if (*e) return cmd_eval(pred, truth, omega);
    if (*b) return cmd_bench(bench, args);
    if (*h) return cmd_h(h_input, k, gamma);
    if (*c) return cmd_config(cfg_model, show_default ? std::string() : cfg_file);
  } catch (const ValidationError& err) {
    std::cerr << "ddcd: " << err.what() << "\n";
    return kExitUsage;
  } catch (const IoError& err) {
    std::cerr << "ddcd: " << err.what() << "\n";
    return kExitUsage;
  } catch (const Json::exception& err) {
    std::cerr << "ddcd: bad JSON: " << err.what() << "\n";
    return kExitUsage;
  } catch (const NumericAbort& err) {
    std::cerr << "ddcd: numeric abort: " << err.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
