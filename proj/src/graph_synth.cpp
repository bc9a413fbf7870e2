#include "ddcd/graph_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ddcd/error.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

namespace {

struct MechanismName {
  Mechanism mechanism;
  std::string_view name;
};

constexpr MechanismName kMechanismNames[] = {
    {Mechanism::kLinear, "linear"},   {Mechanism::kSin, "sin"},
    {Mechanism::kCos, "cos"},         {Mechanism::kQuadratic, "quadratic"},
    {Mechanism::kSigmoid, "sigmoid"}, {Mechanism::kTanh, "tanh"},
    {Mechanism::kRelu, "relu"},       {Mechanism::kLeakyRelu, "leaky_relu"},
};

std::vector<std::size_t> random_permutation(std::size_t d, Engine& rng) {
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

// Skeleton over positions 0..d-1 where every edge runs from a lower to a
// higher position.
Matrix erdos_renyi_positions(std::size_t d, double degree, Engine& rng) {
  const double p = std::min(1.0, degree / static_cast<double>(d - 1));
  std::bernoulli_distribution coin(p);
  Matrix skel(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b)
      if (coin(rng)) skel(a, b) = 1.0;
  return skel;
}

// Barabasi-Albert growth: a clique on the first m nodes, then every new node
// attaches to m distinct existing nodes with probability proportional to
// degree. Edges point from the older node to the newer one.
Matrix scale_free_positions(std::size_t d, std::size_t m, Engine& rng) {
  Matrix skel(d, d);
  std::vector<double> degree(d, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      skel(a, b) = 1.0;
      degree[a] += 1.0;
      degree[b] += 1.0;
    }
  std::vector<std::size_t> targets;
  for (std::size_t node = m; node < d; ++node) {
    std::vector<double> w(degree.begin(), degree.begin() + static_cast<std::ptrdiff_t>(node));
    if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) std::fill(w.begin(), w.end(), 1.0);
    targets.clear();
    while (targets.size() < m) {
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      const std::size_t t = pick(rng);
      targets.push_back(t);
      w[t] = 0.0;
      if (std::accumulate(w.begin(), w.end(), 0.0) == 0.0) {
        for (std::size_t i = 0; i < node; ++i)
          if (std::find(targets.begin(), targets.end(), i) == targets.end()) w[i] = 1.0;
      }
    }
    for (std::size_t t : targets) {
      skel(t, node) = 1.0;
      degree[t] += 1.0;
      degree[node] += 1.0;
    }
  }
  return skel;
}

void check_finite(const Matrix& X) {
  if (!all_finite(X))
    throw ValidationError("simulation produced non-finite values; reduce weights or depth");
}

}  // namespace

std::string_view to_string(GraphFamily f) {
  return f == GraphFamily::kErdosRenyi ? "er" : "sf";
}

std::string_view to_string(Mechanism m) {
  for (const auto& e : kMechanismNames)
    if (e.mechanism == m) return e.name;
  return "unknown";
}

GraphFamily parse_graph_family(std::string_view s) {
  if (s == "er" || s == "ER") return GraphFamily::kErdosRenyi;
  if (s == "sf" || s == "SF") return GraphFamily::kScaleFree;
  throw ValidationError("unknown graph family '" + std::string(s) + "' (expected er or sf)");
}

Mechanism parse_mechanism(std::string_view s) {
  for (const auto& e : kMechanismNames)
    if (e.name == s) return e.mechanism;
  throw ValidationError("unknown mechanism '" + std::string(s) + "'");
}

const std::vector<Mechanism>& all_mechanisms() {
  static const std::vector<Mechanism> all = [] {
    std::vector<Mechanism> v;
    for (const auto& e : kMechanismNames) v.push_back(e.mechanism);
    return v;
  }();
  return all;
}

void validate(const GraphSpec& spec) {
  require(spec.d >= 2, "graph spec: d must be at least 2");
  require(spec.expected_degree > 0.0, "graph spec: expected degree must be positive");
  require(spec.expected_degree < static_cast<double>(spec.d),
          "graph spec: expected degree must be below d");
  if (spec.family == GraphFamily::kScaleFree)
    require(std::floor(spec.expected_degree) == spec.expected_degree,
            "graph spec: scale-free attachment count must be an integer");
  require(spec.weight_low > 0.0 && spec.weight_low < spec.weight_high,
          "graph spec: weight range must satisfy 0 < low < high");
}

void validate(const SemSpec& spec) {
  require(spec.noise_std > 0.0, "sem spec: noise_std must be positive");
  require(spec.n >= 1, "sem spec: n must be at least 1");
}

std::optional<std::vector<std::size_t>> topological_sort(const Matrix& adjacency) {
  require(adjacency.is_square(), "topological_sort: adjacency must be square");
  const std::size_t d = adjacency.rows();
  std::vector<std::size_t> indegree(d, 0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (adjacency(i, j) != 0.0) ++indegree[j];

  std::vector<std::size_t> order;
  order.reserve(d);
  std::vector<std::size_t> ready;
  for (std::size_t j = d; j-- > 0;)
    if (indegree[j] == 0) ready.push_back(j);
  while (!ready.empty()) {
    const std::size_t i = ready.back();
    ready.pop_back();
    order.push_back(i);
    for (std::size_t j = d; j-- > 0;) {
      if (adjacency(i, j) != 0.0 && --indegree[j] == 0) ready.push_back(j);
    }
  }
  if (order.size() != d) return std::nullopt;
  return order;
}

bool is_acyclic(const Matrix& adjacency) { return topological_sort(adjacency).has_value(); }

std::size_t edge_count(const Matrix& adjacency) {
  return static_cast<std::size_t>(std::count_if(adjacency.values().begin(), adjacency.values().end(),
                                                [](double v) { return v != 0.0; }));
}

double apply_mechanism(Mechanism m, double u) {
  switch (m) {
    case Mechanism::kLinear:
      return u;
    case Mechanism::kSin:
      return std::sin(u);
    case Mechanism::kCos:
      return std::cos(u + 1.0);
    case Mechanism::kQuadratic:
      return u * u;
    case Mechanism::kSigmoid:
      return 1.0 / (1.0 + std::exp(-u));
    case Mechanism::kTanh:
      return std::tanh(u);
    case Mechanism::kRelu:
      return u > 0.0 ? u : 0.0;
    case Mechanism::kLeakyRelu:
      return u > 0.0 ? u : 0.1 * u;
  }
  return u;
}

GroundTruth gen_dag(const GraphSpec& spec) {
  validate(spec);
  Engine rng = make_engine(derive_seed(spec.seed, Stream::kGraph));
  const std::size_t d = spec.d;

  const Matrix positions =
      spec.family == GraphFamily::kErdosRenyi
          ? erdos_renyi_positions(d, spec.expected_degree, rng)
          : scale_free_positions(d, static_cast<std::size_t>(spec.expected_degree), rng);

  // Position p is carried by node order[p].
  const std::vector<std::size_t> order = random_permutation(d, rng);
  Matrix skeleton(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      if (positions(a, b) != 0.0) skeleton(order[a], order[b]) = 1.0;

  GroundTruth gt;
  gt.adjacency = sample_weights(skeleton, spec.weight_low, spec.weight_high,
                                derive_seed(spec.seed, Stream::kWeights));
  gt.topological_order = order;
  return gt;
}

Matrix sample_weights(const Matrix& skeleton, double low, double high, std::uint64_t seed) {
  require(skeleton.is_square(), "sample_weights: skeleton must be square");
  require(low > 0.0 && low < high, "sample_weights: require 0 < low < high");
  require(is_acyclic(skeleton), "sample_weights: skeleton contains a cycle");
  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> magnitude(low, high);
  std::bernoulli_distribution negative(0.5);
  Matrix w(skeleton.rows(), skeleton.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      if (skeleton(i, j) == 0.0) continue;
      const double m = magnitude(rng);
      w(i, j) = negative(rng) ? -m : m;
    }
  return w;
}

namespace {

SemSample simulate(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed) {
  validate(sem);
  const Matrix& W = gt.adjacency;
  require(W.is_square(), "simulate: adjacency must be square");
  const std::size_t d = W.rows();
  const std::size_t n = sem.n;
  const auto order = topological_sort(W);
  require(order.has_value(), "simulate: adjacency is cyclic");

  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, sem.noise_std);
  SemSample out;
  out.noise = Matrix(n, d);
  for (double& v : out.noise.values()) v = normal(rng);

  std::vector<std::vector<std::size_t>> parents(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (W(i, j) != 0.0) parents[j].push_back(i);

  Matrix X(n, d);
  for (std::size_t j : *order) {
    const bool root = parents[j].empty();
    for (std::size_t r = 0; r < n; ++r) {
      if (root) {
        X(r, j) = out.noise(r, j);
        continue;
      }
      double u = 0.0;
      for (std::size_t i : parents[j]) u += W(i, j) * X(r, i);
      X(r, j) = apply_mechanism(sem.mechanism, u) + out.noise(r, j);
    }
  }
  check_finite(X);
  out.data.X = std::move(X);
  out.data.column_names = default_column_names(d);
  return out;
}

}  // namespace

SemSample simulate_linear_sem(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed) {
  require(sem.mechanism == Mechanism::kLinear, "simulate_linear_sem: mechanism must be linear");
  return simulate(gt, sem, seed);
}

SemSample simulate_nonlinear_sem(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed) {
  require(sem.mechanism != Mechanism::kLinear,
          "simulate_nonlinear_sem: mechanism must be nonlinear");
  return simulate(gt, sem, seed);
}

SemSample simulate_sem(const GroundTruth& gt, const SemSpec& sem, std::uint64_t seed) {
  return simulate(gt, sem, seed);
}

std::vector<std::string> default_column_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace ddcd
