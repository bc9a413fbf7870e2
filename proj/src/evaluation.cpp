#include "ddcd/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>

#include "ddcd/error.hpp"
#include "ddcd/fit.hpp"
#include "ddcd/io.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

Matrix threshold_edges(const Matrix& W, double omega) {
  require(omega >= 0.0, "threshold: omega must be nonnegative");
  require(W.is_square(), "threshold: W must be square");
  Matrix B(W.rows(), W.cols());
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = 0; j < W.cols(); ++j)
      if (i != j && std::abs(W(i, j)) > omega) B(i, j) = 1.0;
  return B;
}

EvalReport compute_metrics(const Matrix& pred, const Matrix& truth) {
  require(pred.is_square() && truth.is_square(), "metrics: adjacency matrices must be square");
  require(pred.rows() == truth.rows(), "metrics: dimension mismatch");
  const std::size_t d = truth.rows();
  auto p = [&](std::size_t i, std::size_t j) { return i != j && pred(i, j) != 0.0; };
  auto t = [&](std::size_t i, std::size_t j) { return i != j && truth(i, j) != 0.0; };

  EvalReport r;
  std::size_t reversed = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (t(i, j)) ++r.condition_positive;
      if (!p(i, j)) continue;
      ++r.predicted;
      if (t(i, j))
        ++r.true_positive;
      else if (t(j, i))
        ++reversed;
      else
        ++r.false_positive;
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const bool ps = p(i, j) || p(j, i);
      const bool ts = t(i, j) || t(j, i);
      if (ps && !ts) ++r.shd_extra;
      if (ts && !ps) ++r.shd_missing;
    }
  r.shd_reversed = reversed;
  r.shd = r.shd_extra + r.shd_missing + r.shd_reversed;

  const std::size_t pairs = d * (d > 0 ? d - 1 : 0) / 2;
  r.condition_negative = pairs > r.condition_positive ? pairs - r.condition_positive : 0;
  const auto safe = [](std::size_t v) { return static_cast<double>(std::max<std::size_t>(v, 1)); };
  r.tpr = static_cast<double>(r.true_positive) / safe(r.condition_positive);
  r.fdr = static_cast<double>(reversed + r.false_positive) / safe(r.predicted);
  r.fpr = std::min(1.0, static_cast<double>(reversed + r.false_positive) / safe(r.condition_negative));
  r.prediction_cyclic = !is_acyclic(pred);
  return r;
}

double skeleton_tpr(const Matrix& pred, const Matrix& truth) {
  require(pred.is_square() && truth.is_square() && pred.rows() == truth.rows(),
          "skeleton_tpr: dimension mismatch");
  std::size_t hit = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < truth.rows(); ++i)
    for (std::size_t j = i + 1; j < truth.rows(); ++j) {
      if (truth(i, j) == 0.0 && truth(j, i) == 0.0) continue;
      ++total;
      if (pred(i, j) != 0.0 || pred(j, i) != 0.0) ++hit;
    }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

BenchRow run_one(const BenchCell& cell, std::size_t index, std::uint64_t seed) {
  BenchRow row;
  row.cell = index;
  row.family = std::string(to_string(cell.graph.family));
  row.d = cell.graph.d;
  row.degree = cell.graph.expected_degree;
  row.mechanism = std::string(to_string(cell.sem.mechanism));
  row.model = std::string(to_string(cell.model));
  row.n = cell.sem.n;
  row.seed = seed;
  try {
    GraphSpec g = cell.graph;
    g.seed = seed;
    const GroundTruth gt = gen_dag(g);
    const SemSample sample = simulate_sem(gt, cell.sem, derive_seed(seed, Stream::kNoise));
    TrainConfig config = cell.config;
    config.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    const FitResult fit = fit_model(cell.model, sample.data, config);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.report = compute_metrics(threshold_edges(fit.W, config.threshold), gt.adjacency);
    row.report.runtime_seconds = seconds;
    row.report.config_fingerprint = fingerprint(config_to_json(config).dump());
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::vector<BenchRow> run_benchmark(const BenchGrid& grid, const BenchOptions& options) {
  require(!grid.cells.empty(), "benchmark: grid has no cells");
  require(!grid.seeds.empty(), "benchmark: grid has no seeds");
  require(options.workers >= 1, "benchmark: workers must be at least 1");
  std::vector<std::pair<std::size_t, std::uint64_t>> tasks;
  for (std::size_t c = 0; c < grid.cells.size(); ++c)
    for (std::uint64_t s : grid.seeds)
      if (!options.completed.count({c, s})) tasks.emplace_back(c, s);

  std::vector<BenchRow> rows(tasks.size());
  const std::int64_t count = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic) num_threads(options.workers)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto [c, s] = tasks[static_cast<std::size_t>(i)];
    rows[static_cast<std::size_t>(i)] = run_one(grid.cells[c], c, s);
    if (options.on_row) {
#pragma omp critical(ddcd_bench_row)
      options.on_row(rows[static_cast<std::size_t>(i)]);
    }
  }
  return rows;
}

const std::vector<std::string>& aggregate_metric_names() {
  static const std::vector<std::string> names{"shd", "shd_rev", "shd_extra", "shd_miss",
                                              "tpr", "fdr",     "fpr",       "runtime_s"};
  return names;
}

std::vector<BenchAggregate> aggregate(const std::vector<BenchRow>& rows) {
  std::map<std::size_t, std::vector<const BenchRow*>> by_cell;
  for (const BenchRow& r : rows) by_cell[r.cell].push_back(&r);

  const std::size_t m = aggregate_metric_names().size();
  std::vector<BenchAggregate> out;
  for (const auto& [cell, group] : by_cell) {
    BenchAggregate a;
    const BenchRow& first = *group.front();
    a.cell = cell;
    a.family = first.family;
    a.d = first.d;
    a.degree = first.degree;
    a.mechanism = first.mechanism;
    a.model = first.model;
    a.n = first.n;
    a.runs = group.size();
    std::vector<std::vector<double>> values(m);
    for (const BenchRow* r : group) {
      if (!r->error.empty()) {
        ++a.failures;
        continue;
      }
      const EvalReport& e = r->report;
      const double v[] = {static_cast<double>(e.shd),       static_cast<double>(e.shd_reversed),
                          static_cast<double>(e.shd_extra), static_cast<double>(e.shd_missing),
                          e.tpr, e.fdr, e.fpr, e.runtime_seconds};
      for (std::size_t k = 0; k < m; ++k) values[k].push_back(v[k]);
    }
    a.mean.assign(m, std::nan(""));
    a.std.assign(m, std::nan(""));
    for (std::size_t k = 0; k < m; ++k) {
      const auto& xs = values[k];
      if (xs.empty()) continue;
      double mu = 0.0;
      for (double x : xs) mu += x;
      mu /= static_cast<double>(xs.size());
      double var = 0.0;
      for (double x : xs) var += (x - mu) * (x - mu);
      a.mean[k] = mu;
      a.std[k] = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    }
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace ddcd
