#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ddcd/graph_synth.hpp"
#include "ddcd/matrix.hpp"
#include "ddcd/optimizer.hpp"

namespace ddcd {

// Directed 0/1 adjacency: edge (i, j) iff |W(i, j)| > omega, diagonal excluded.
Matrix threshold_edges(const Matrix& W, double omega);

struct EvalReport {
  std::size_t shd = 0;
  std::size_t shd_reversed = 0;
  std::size_t shd_extra = 0;
  std::size_t shd_missing = 0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;  // absent from the truth in both directions
  std::size_t predicted = 0;
  std::size_t condition_positive = 0;
  std::size_t condition_negative = 0;  // unordered non-adjacent pairs
  double tpr = 0.0;
  double fdr = 0.0;
  double fpr = 0.0;
  bool prediction_cyclic = false;
  double runtime_seconds = 0.0;
  std::string config_fingerprint;
};

// Metrics of a directed prediction against the true DAG. Nonzero entries of
// either matrix count as edges. A cyclic prediction only sets the flag.
EvalReport compute_metrics(const Matrix& pred, const Matrix& truth);

// Fraction of true unordered adjacencies present in the prediction's skeleton.
double skeleton_tpr(const Matrix& pred, const Matrix& truth);

// Short stable hash of a config's JSON text.
std::string fingerprint(const std::string& text);

struct BenchCell {
  GraphSpec graph;
  SemSpec sem;
  ModelKind model = ModelKind::kLinear;
  TrainConfig config;
};

struct BenchGrid {
  std::vector<BenchCell> cells;
  std::vector<std::uint64_t> seeds;
};

struct BenchRow {
  std::size_t cell = 0;
  std::string family;
  std::size_t d = 0;
  double degree = 0.0;
  std::string mechanism;
  std::string model;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  EvalReport report;
  std::string error;  // empty on success
};

struct BenchAggregate {
  std::size_t cell = 0;
  std::string family;
  std::size_t d = 0;
  double degree = 0.0;
  std::string mechanism;
  std::string model;
  std::size_t n = 0;
  std::size_t runs = 0;
  std::size_t failures = 0;
  // mean and sample std over successful runs, in the order
  // shd, shd_rev, shd_extra, shd_miss, tpr, fdr, fpr, runtime_s.
  std::vector<double> mean;
  std::vector<double> std;
};

struct BenchOptions {
  int workers = 1;
  // (cell, seed) pairs already done; skipped.
  std::set<std::pair<std::size_t, std::uint64_t>> completed;
  // Called once per finished row, serialized across workers.
  std::function<void(const BenchRow&)> on_row;
};

// generate -> fit -> evaluate for every cell x seed. The seed drives the
// graph, the data and the fit, so models in one grid see identical data.
// Failures become rows with `error` set. Rows come back ordered by
// (cell, seed position) whatever the worker count.
std::vector<BenchRow> run_benchmark(const BenchGrid& grid, const BenchOptions& options = {});

std::vector<BenchAggregate> aggregate(const std::vector<BenchRow>& rows);

// Column order of BenchAggregate::mean / std.
const std::vector<std::string>& aggregate_metric_names();

}  // namespace ddcd
