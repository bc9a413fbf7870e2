#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ddcd/diffusion.hpp"
#include "ddcd/evaluation.hpp"
#include "ddcd/graph_synth.hpp"
#include "ddcd/linear_model.hpp"
#include "ddcd/optimizer.hpp"

namespace ddcd {

using Json = nlohmann::json;

// Shortest text that reads back to the same double (at most 17 digits).
std::string format_double(double v);

// Dataset CSV: one header line of column names, then one row per sample.
void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);
// Headerless files get default names. Ragged rows and non-numeric cells
// raise ValidationError naming the 1-based line.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::string& path);

enum class AdjacencyFormat { kDense, kEdgeList };

// Dense: d lines of d tab-separated weights. Edge list: "# nodes d", a
// "source\ttarget\tweight" header, then one line per nonzero entry.
void write_adjacency_tsv(std::ostream& out, const Matrix& W, AdjacencyFormat format);
void write_adjacency_tsv(const std::string& path, const Matrix& W, AdjacencyFormat format);
// Detects the format from the first line.
Matrix read_adjacency_tsv(std::istream& in);
Matrix read_adjacency_tsv(const std::string& path);

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);
void write_curve_csv(const std::string& path, const std::vector<std::pair<double, double>>& curve);

// JSON round trips. Readers start from defaults, so partial objects are
// fine; unknown keys are rejected to catch typos.
Json schedule_to_json(const ScheduleSpec& s);
ScheduleSpec schedule_from_json(const Json& j);
Json khop_to_json(const KHopSchedule& s);
KHopSchedule khop_from_json(const Json& j);
Json config_to_json(const TrainConfig& c);
TrainConfig config_from_json(const Json& j, const TrainConfig& base = {});
Json graph_spec_to_json(const GraphSpec& g);
GraphSpec graph_spec_from_json(const Json& j);
Json sem_spec_to_json(const SemSpec& s);
SemSpec sem_spec_from_json(const Json& j);
Json report_to_json(const EvalReport& r);

// Grid file: {"graphs": [...], "sems": [...], "models": [...], "seeds": [...],
// "config": {...}}; cells are the cross product graphs x sems x models.
BenchGrid grid_from_json(const Json& j);

// Long-format results: family, d, degree, mechanism, model, n, seed, shd,
// shd_rev, shd_extra, shd_miss, tpr, fdr, fpr, runtime_s, cell, error.
void write_bench_rows(std::ostream& out, const std::vector<BenchRow>& rows, bool header);
std::vector<BenchRow> read_bench_rows(const std::string& path);
void write_aggregate_csv(const std::string& path, const std::vector<BenchAggregate>& rows);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace ddcd
