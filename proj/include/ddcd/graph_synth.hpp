#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddcd/matrix.hpp"

// Ground-truth DAG generation and synthetic observational data.
namespace ddcd {

enum class GraphFamily { kErdosRenyi, kScaleFree };

struct GraphSpec {
  std::size_t d = 10;
  GraphFamily family = GraphFamily::kErdosRenyi;
  // ER: expected total degree per node. SF: attachment count m per new node.
  double expected_degree = 2.0;
  std::uint64_t seed = 0;
  double weight_low = 0.5;
  double weight_high = 2.0;
};

struct GroundTruth {
  Matrix adjacency;  // adjacency(i, j) != 0 means i -> j
  std::vector<std::size_t> topological_order;
};

enum class Mechanism { kLinear, kSin, kCos, kQuadratic, kSigmoid, kTanh, kRelu, kLeakyRelu };

struct SemSpec {
  Mechanism mechanism = Mechanism::kLinear;
  double noise_std = 1.0;
  std::size_t n = 1000;
};

struct Dataset {
  Matrix X;
  std::vector<std::string> column_names;

  std::size_t n() const { return X.rows(); }
  std::size_t d() const { return X.cols(); }
};

// A simulated dataset together with the additive noise that produced it.
struct SemSample {
  Dataset data;
  Matrix noise;
};

std::string_view to_string(GraphFamily f);
std::string_view to_string(Mechanism m);
GraphFamily parse_graph_family(std::string_view s);
Mechanism parse_mechanism(std::string_view s);
const std::vector<Mechanism>& all_mechanisms();

void validate(const GraphSpec& spec);
void validate(const SemSpec& spec);

// Kahn's algorithm over the nonzero pattern of `adjacency`. Empty when cyclic.
std::optional<std::vector<std::size_t>> topological_sort(const Matrix& adjacency);
bool is_acyclic(const Matrix& adjacency);
std::size_t edge_count(const Matrix& adjacency);

// Scalar link function for a mechanism. cos is evaluated as cos(u + 1).
double apply_mechanism(Mechanism m, double u);

GroundTruth gen_dag(const GraphSpec& spec);

// Nonzero entries of `skeleton` become weights uniform on
// [-high, -low] U [low, high]; zeros stay zero.
Matrix sample_weights(const Matrix& skeleton, double low, double high, std::uint64_t seed);

SemSample simulate_linear_sem(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed);
SemSample simulate_nonlinear_sem(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed);
// Dispatches on sem.mechanism.
SemSample simulate_sem(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed);

std::vector<std::string> default_column_names(std::size_t d);

}  // namespace ddcd
