#include <doctest.h>

#include <cmath>

#include "ddcd/diffusion.hpp"
#include "ddcd/evaluation.hpp"
#include "ddcd/kernels.hpp"
#include "ddcd/linear_model.hpp"
#include "ddcd/rng.hpp"
#include "support.hpp"

using namespace ddcd;

namespace {

DiffusionBatch random_batch(std::size_t b, std::size_t d, std::uint64_t seed) {
  const auto s = build_schedule({});
  const Matrix X0 = testing::random_matrix(b, d, seed, -2.0, 2.0);
  return perturb(X0, s, sample_timesteps(b, s.T(), seed + 1), seed + 2);
}

GroundTruth chain3() {
  GroundTruth gt{Matrix(3, 3), {0, 1, 2}};
  gt.adjacency(0, 1) = gt.adjacency(1, 2) = 1.0;
  return gt;
}

// Least squares of x_j on x_{j-1} without intercept.
double ols_slope(const Matrix& X, std::size_t from, std::size_t to) {
  double xy = 0.0, xx = 0.0;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    xy += X(r, from) * X(r, to);
    xx += X(r, from) * X(r, from);
  }
  return xy / xx;
}

}  // namespace

TEST_CASE("scalar denoising loss by hand") {
  Matrix X0(1, 1, 2.0), Z(1, 1, 1.0);
  const std::vector<double> ab{0.25};
  const auto batch = perturb_with_alpha_bars(X0, ab, Z);
  const auto r = denoising_loss_linear(batch, Matrix(1, 1), 0.0, 0.0);
  CHECK(r.loss == doctest::Approx(0.5).epsilon(1e-14));
  // Theorem 1 in scalar form: half of abar * x0^2
  CHECK(r.loss == doctest::Approx(0.5 * 0.25 * 4.0).epsilon(1e-14));
}

TEST_CASE("no noise reduces to the reconstruction objective") {
  const std::size_t b = 16, d = 5;
  const Matrix X0 = testing::random_matrix(b, d, 4);
  const Matrix Z = testing::random_matrix(b, d, 5);
  Matrix W = testing::random_matrix(d, d, 6);
  W.zero_diagonal();
  const std::vector<double> ab(b, 1.0);
  const auto r = denoising_loss_linear(perturb_with_alpha_bars(X0, ab, Z), W, 0.01, 0.02);
  const Matrix R = X0 - kernels::serial::matmul(X0, W);
  const double expected = frobenius_sq(R) / (2.0 * b) + 0.01 * l1_norm(W) + 0.02 * frobenius_sq(W);
  CHECK(r.loss == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("linear loss gradient matches finite differences") {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto batch = random_batch(32, 5, 10 * s);
    Matrix W = testing::random_matrix(5, 5, 10 * s + 7, -0.5, 0.5);
    W.zero_diagonal();
    const double l2 = s == 0 ? 0.0 : 0.05;
    const Matrix g = denoising_loss_linear(batch, W, 0.0, l2).grad;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        if (i == j) {
          CHECK(g(i, j) == 0.0);
          continue;
        }
        const double fd = testing::central_diff(
            [&] { return denoising_loss_linear(batch, W, 0.0, l2).loss; }, W(i, j), 1e-6);
        CHECK(testing::rel_err(g(i, j), fd, 1e-3) <= 1e-5);
      }
  }
}

TEST_CASE("Theorem 1 residual") {
  const auto sched = build_schedule({});
  SUBCASE("random tuples") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Matrix X0 = testing::random_matrix(64, 10, s, -3.0, 3.0);
      const Matrix W = testing::random_matrix(10, 10, s + 100);
      const Matrix Z = standard_normal(64, 10, s + 200);
      const auto t = sample_timesteps(64, sched.T(), s + 300);
      CHECK(theorem1_identity(X0, W, sched, t, Z) <= 1e-10);
    }
  }
  SUBCASE("W = 0") {
    const Matrix X0 = testing::random_matrix(64, 10, 1);
    const Matrix Z = standard_normal(64, 10, 2);
    CHECK(theorem1_identity(X0, Matrix(10, 10), sched, sample_timesteps(64, sched.T(), 3), Z) <= 1e-12);
  }
  SUBCASE("large entries") {
    const Matrix X0 = testing::random_matrix(64, 10, 1, -1e6, 1e6);
    const Matrix W = testing::random_matrix(10, 10, 2);
    const Matrix Z = standard_normal(64, 10, 3);
    CHECK(theorem1_identity(X0, W, sched, sample_timesteps(64, sched.T(), 4), Z) <= 1e-4);
  }
}

TEST_CASE("three-node chain is recovered exactly") {
  const auto s = simulate_linear_sem(chain3(), {Mechanism::kLinear, 0.1, 1000}, 17);
  // oracle: regression along the known order gives weights near one
  CHECK(ols_slope(s.data.X, 0, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(ols_slope(s.data.X, 1, 2) == doctest::Approx(1.0).epsilon(0.05));

  const auto fit = fit_linear(s.data, TrainConfig{});
  const Matrix pred = threshold_edges(fit.W, 0.3);
  Matrix expected(3, 3);
  expected(0, 1) = expected(1, 2) = 1.0;
  CHECK(pred == expected);
  CHECK(edge_count(pred) == 2);
}

TEST_CASE("twenty-node ER graphs") {
  double tpr = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto gt = gen_dag({20, GraphFamily::kErdosRenyi, 4.0, seed});
    const auto s = simulate_linear_sem(gt, {Mechanism::kLinear, 1.0, 1000}, derive_seed(seed, Stream::kNoise));
    TrainConfig c;
    c.seed = seed;
    tpr += compute_metrics(threshold_edges(fit_linear(s.data, c).W, c.threshold), gt.adjacency).tpr;
  }
  CHECK(tpr / 5.0 >= 0.9);
}

TEST_CASE("pure noise gives an empty graph") {
  GroundTruth gt{Matrix(6, 6), {0, 1, 2, 3, 4, 5}};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = simulate_linear_sem(gt, {Mechanism::kLinear, 1.0, 1000}, seed);
    TrainConfig c;
    c.seed = seed;
    CHECK(edge_count(threshold_edges(fit_linear(s.data, c).W, 0.3)) == 0);
  }
}

TEST_CASE("fit is deterministic and keeps a zero diagonal") {
  const auto gt = gen_dag({8, GraphFamily::kErdosRenyi, 2.0, 3});
  const auto s = simulate_linear_sem(gt, {Mechanism::kLinear, 1.0, 400}, 3);
  TrainConfig c;
  c.n_iter = 600;
  c.seed = 9;
  const auto a = fit_linear(s.data, c);
  const auto b = fit_linear(s.data, c);
  CHECK(a.W == b.W);
  for (std::size_t i = 0; i < 8; ++i) CHECK(a.W(i, i) == 0.0);
  REQUIRE_FALSE(a.history.empty());
  CHECK(a.history.back().iter == c.n_iter - 1);
}
