#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "ddcd/error.hpp"
#include "ddcd/graph_synth.hpp"
#include "ddcd/kernels.hpp"
#include "support.hpp"

using namespace ddcd;

namespace {

// Independent cycle check: depth-first search with colors.
bool has_cycle_dfs(const Matrix& A) {
  const std::size_t d = A.rows();
  std::vector<int> color(d, 0);
  std::function<bool(std::size_t)> visit = [&](std::size_t u) {
    color[u] = 1;
    for (std::size_t v = 0; v < d; ++v) {
      if (A(u, v) == 0.0) continue;
      if (color[v] == 1) return true;
      if (color[v] == 0 && visit(v)) return true;
    }
    color[u] = 2;
    return false;
  };
  for (std::size_t u = 0; u < d; ++u)
    if (color[u] == 0 && visit(u)) return true;
  return false;
}

GroundTruth chain2(double w) {
  GroundTruth gt;
  gt.adjacency = Matrix(2, 2);
  gt.adjacency(0, 1) = w;
  gt.topological_order = {0, 1};
  return gt;
}

double column_var(const Matrix& X, std::size_t j) {
  double m = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) m += X(r, j);
  m /= static_cast<double>(X.rows());
  double v = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) v += (X(r, j) - m) * (X(r, j) - m);
  return v / static_cast<double>(X.rows() - 1);
}

}  // namespace

TEST_CASE("two-node ER graph never has a 2-cycle") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    GraphSpec g{2, GraphFamily::kErdosRenyi, 1.0, s};
    const auto gt = gen_dag(g);
    CHECK(edge_count(gt.adjacency) <= 1);
    CHECK(is_acyclic(gt.adjacency));
  }
}

TEST_CASE("scale-free edge count follows the attachment rule") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    GraphSpec g{20, GraphFamily::kScaleFree, 10.0, s};
    const auto gt = gen_dag(g);
    CHECK(edge_count(gt.adjacency) == 10 * 10 + 45);
    CHECK(topological_sort(gt.adjacency).has_value());
    CHECK_FALSE(has_cycle_dfs(gt.adjacency));
  }
}

TEST_CASE("ER edge count concentrates on the binomial mean") {
  const std::size_t d = 100;
  const double p = 10.0 / 99.0;
  const double pairs = d * (d - 1) / 2.0;
  double total = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    const auto gt = gen_dag({d, GraphFamily::kErdosRenyi, 10.0, static_cast<std::uint64_t>(s)});
    total += static_cast<double>(edge_count(gt.adjacency));
  }
  const double mean = total / seeds;
  const double sigma_of_mean = std::sqrt(pairs * p * (1 - p) / seeds);
  CHECK(std::abs(mean - p * pairs) <= 3.0 * sigma_of_mean);
}

TEST_CASE("generated graphs respect their topological order and weight range") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    GraphSpec g{15, s % 2 ? GraphFamily::kScaleFree : GraphFamily::kErdosRenyi, 2.0, s};
    const auto gt = gen_dag(g);
    std::vector<std::size_t> pos(g.d);
    for (std::size_t p = 0; p < g.d; ++p) pos[gt.topological_order[p]] = p;
    for (std::size_t i = 0; i < g.d; ++i) {
      CHECK(gt.adjacency(i, i) == 0.0);
      for (std::size_t j = 0; j < g.d; ++j) {
        const double w = std::abs(gt.adjacency(i, j));
        if (w == 0.0) continue;
        CHECK(pos[i] < pos[j]);
        CHECK(w >= 0.5);
        CHECK(w <= 2.0);
      }
    }
  }
}

TEST_CASE("Kahn's sort agrees with a depth-first cycle check") {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.2);
  for (int trial = 0; trial < 300; ++trial) {
    Matrix A(7, 7);
    for (std::size_t i = 0; i < 7; ++i)
      for (std::size_t j = 0; j < 7; ++j)
        if (i != j && coin(rng)) A(i, j) = 1.0;
    const auto order = topological_sort(A);
    CHECK(order.has_value() == !has_cycle_dfs(A));
    if (order) {
      std::vector<std::size_t> pos(7);
      for (std::size_t p = 0; p < 7; ++p) pos[(*order)[p]] = p;
      for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j)
          if (A(i, j) != 0.0) CHECK(pos[i] < pos[j]);
    }
  }
}

TEST_CASE("sample_weights") {
  SUBCASE("empty skeleton stays empty") {
    CHECK(sample_weights(Matrix(5, 5), 0.5, 2.0, 1) == Matrix(5, 5));
  }
  SUBCASE("signs are balanced") {
    Matrix skel(142, 142);
    for (std::size_t i = 0; i < 142; ++i)
      for (std::size_t j = i + 1; j < 142; ++j) skel(i, j) = 1.0;
    const Matrix W = sample_weights(skel, 0.5, 2.0, 11);
    std::size_t neg = 0, total = 0;
    for (double v : W.values()) {
      if (v == 0.0) continue;
      ++total;
      neg += v < 0.0;
    }
    REQUIRE(total >= 10000);
    const double frac = static_cast<double>(neg) / static_cast<double>(total);
    CHECK(frac >= 0.45);
    CHECK(frac <= 0.55);
  }
  SUBCASE("cyclic skeleton is rejected") {
    Matrix skel(2, 2);
    skel(0, 1) = skel(1, 0) = 1.0;
    CHECK_THROWS_AS(sample_weights(skel, 0.5, 2.0, 0), ValidationError);
  }
  SUBCASE("bad range is rejected") {
    CHECK_THROWS_AS(sample_weights(Matrix(2, 2), 2.0, 1.0, 0), ValidationError);
  }
}

TEST_CASE("linear SEM sampling") {
  SUBCASE("pure noise has the noise moments") {
    GroundTruth gt{Matrix(3, 3), {0, 1, 2}};
    const auto s = simulate_linear_sem(gt, {Mechanism::kLinear, 1.0, 10000}, 5);
    for (std::size_t j = 0; j < 3; ++j) {
      double m = 0.0;
      for (std::size_t r = 0; r < 10000; ++r) m += s.data.X(r, j);
      CHECK(std::abs(m / 10000.0) <= 4.0 / 100.0);
      const double v = column_var(s.data.X, j);
      CHECK(v >= 0.9);
      CHECK(v <= 1.1);
    }
  }
  SUBCASE("chain variance is w^2 + 1") {
    const auto s = simulate_linear_sem(chain2(2.0), {Mechanism::kLinear, 1.0, 10000}, 9);
    const double v = column_var(s.data.X, 1);
    CHECK(v >= 4.7);
    CHECK(v <= 5.3);
  }
  SUBCASE("X equals XW + E exactly") {
    const auto gt = gen_dag({12, GraphFamily::kErdosRenyi, 3.0, 4});
    const auto s = simulate_linear_sem(gt, {Mechanism::kLinear, 1.0, 200}, 4);
    Matrix rhs = kernels::serial::matmul(s.data.X, gt.adjacency);
    rhs += s.noise;
    // Same parents, same order: the only difference could come from summing
    // the zero weights, which is exact.
    CHECK(max_abs_diff(s.data.X, rhs) == 0.0);
  }
  SUBCASE("linear sampler refuses other mechanisms") {
    CHECK_THROWS_AS(simulate_linear_sem(chain2(1.0), {Mechanism::kCos, 1.0, 10}, 0),
                    ValidationError);
  }
}

TEST_CASE("nonlinear SEM sampling") {
  SUBCASE("tanh keeps x - z within one") {
    const auto gt = gen_dag({10, GraphFamily::kErdosRenyi, 3.0, 2});
    const auto s = simulate_nonlinear_sem(gt, {Mechanism::kTanh, 1.0, 500}, 2);
    for (std::size_t r = 0; r < 500; ++r)
      for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(s.data.X(r, j) - s.noise(r, j)) <= 1.0);
  }
  SUBCASE("relu of a standard normal parent has mean 1/sqrt(2 pi)") {
    const auto s = simulate_nonlinear_sem(chain2(1.0), {Mechanism::kRelu, 1.0, 10000}, 13);
    double m = 0.0;
    for (std::size_t r = 0; r < 10000; ++r) m += s.data.X(r, 1) - s.noise(r, 1);
    m /= 10000.0;
    CHECK(m >= 0.36);
    CHECK(m <= 0.44);
  }
  SUBCASE("roots never see the mechanism") {
    GroundTruth gt{Matrix(4, 4), {0, 1, 2, 3}};
    const auto a = simulate_nonlinear_sem(gt, {Mechanism::kCos, 1.0, 300}, 21);
    const auto b = simulate_linear_sem(gt, {Mechanism::kLinear, 1.0, 300}, 21);
    CHECK(a.data.X == b.data.X);
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  const auto gt = gen_dag({8, GraphFamily::kScaleFree, 2.0, 1});
  const auto a = simulate_sem(gt, {Mechanism::kSin, 1.0, 100}, 77);
  const auto b = simulate_sem(gt, {Mechanism::kSin, 1.0, 100}, 77);
  const auto c = simulate_sem(gt, {Mechanism::kSin, 1.0, 100}, 78);
  CHECK(a.data.X == b.data.X);
  CHECK_FALSE(a.data.X == c.data.X);
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(gen_dag({1, GraphFamily::kErdosRenyi, 0.5, 0}), ValidationError);
  CHECK_THROWS_AS(gen_dag({10, GraphFamily::kScaleFree, 1.5, 0}), ValidationError);
  CHECK_THROWS_AS(parse_mechanism("cube"), ValidationError);
  CHECK(parse_graph_family("SF") == GraphFamily::kScaleFree);
}
