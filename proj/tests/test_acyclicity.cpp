#include <doctest.h>

#include <cmath>

#include "ddcd/acyclicity.hpp"
#include "ddcd/error.hpp"
#include "ddcd/kernels.hpp"
#include "support.hpp"

using namespace ddcd;

namespace {

// tr(exp(M)) - d from the plain power series, summed to `terms`.
double h_series(const Matrix& W, int terms) {
  const Matrix M = hadamard(W, W);
  Matrix P = Matrix::identity(W.rows());
  double h = 0.0, fact = 1.0;
  for (int j = 1; j <= terms; ++j) {
    P = kernels::serial::matmul(P, M);
    fact *= j;
    h += trace(P) / fact;
  }
  return h;
}

Matrix swap2() {
  Matrix W(2, 2);
  W(0, 1) = W(1, 0) = 1.0;
  return W;
}

void check_gradient(const std::function<AcyclicityResult(const Matrix&)>& h, Matrix W) {
  const Matrix g = h(W).gradient;
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = 0; j < W.cols(); ++j) {
      const double fd = testing::central_diff([&] { return h(W).value; }, W(i, j), 1e-6);
      CHECK(testing::rel_err(g(i, j), fd, 1e-4) <= 1e-5);
    }
}

}  // namespace

TEST_CASE("matrix exponential matches the power series") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix A = testing::random_matrix(6, 6, s, -2.0, 2.0);
    Matrix P = Matrix::identity(6), E = Matrix::identity(6);
    double fact = 1.0;
    for (int j = 1; j <= 60; ++j) {
      P = kernels::serial::matmul(P, A);
      fact *= j;
      E.add_scaled(P, 1.0 / fact);
    }
    CHECK(max_abs_diff(matrix_exponential(A), E) <= 1e-10 * (1.0 + max_abs(E)));
  }
}

TEST_CASE("exponential score") {
  SUBCASE("zero matrix") {
    const auto r = h_exponential(Matrix(5, 5));
    CHECK(r.value == 0.0);
    CHECK(max_abs(r.gradient) == 0.0);
  }
  SUBCASE("nilpotent 2x2") {
    Matrix W(2, 2);
    W(0, 1) = 0.8;
    CHECK(h_exponential(W).value == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("two-cycle equals the power series") {
    const double oracle = h_series(swap2(), 30);
    CHECK(oracle == doctest::Approx(2.0 * std::cosh(1.0) - 2.0).epsilon(1e-14));
    CHECK(h_exponential(swap2()).value == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(h_exponential(swap2()).value == doctest::Approx(1.086161).epsilon(1e-6));
  }
  SUBCASE("random matrices equal the power series") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Matrix W = testing::random_matrix(8, 8, 100 + s);
      CHECK(h_exponential(W).value == doctest::Approx(h_series(W, 40)).epsilon(1e-10));
    }
  }
  SUBCASE("gradient matches finite differences") {
    for (std::uint64_t s = 0; s < 3; ++s) check_gradient(h_exponential, testing::random_matrix(5, 5, s));
  }
}

TEST_CASE("k-hop score hand expansions") {
  CHECK(h_khop(swap2(), 1).value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(h_khop(swap2(), 3).value == doctest::Approx(1.0 + 2.0 / 24.0).epsilon(1e-15));
}

TEST_CASE("k-hop score is a truncation of the series") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix W = testing::random_matrix(7, 7, 200 + s);
    for (int k : {1, 2, 4, 6}) CHECK(h_khop(W, k).value == doctest::Approx(h_series(W, k + 1)).epsilon(1e-12));
    CHECK(h_khop_value(W, 3, 2.0) == doctest::Approx(h_khop(W, 3, 2.0).value).epsilon(1e-15));
  }
}

TEST_CASE("both scores vanish exactly on DAGs") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Matrix W = testing::random_dag(12, 0.4, s);
    CHECK(h_exponential(W).value == 0.0);
    for (int k : {1, 3, 12})
      for (double g : {0.1, 1.0, 10.0}) CHECK(h_khop(W, k, g).value == 0.0);
  }
}

TEST_CASE("k-hop gradient matches finite differences") {
  for (int k : {1, 3, 5})
    for (double g : {1.0, 0.3}) {
      CAPTURE(k);
      CAPTURE(g);
      check_gradient([&](const Matrix& W) { return h_khop(W, k, g); }, testing::random_matrix(5, 5, 7 + k));
    }
}

TEST_CASE("gamma cancels") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix W = testing::random_matrix(10, 10, 300 + s);
    const double h1 = h_khop(W, 4, 1.0).value;
    for (double g : {0.1, 10.0}) CHECK(std::abs(h_khop(W, 4, g).value - h1) <= 1e-8 * (1.0 + h1));
  }
}

TEST_CASE("k curriculum") {
  const KHopSchedule s;
  CHECK(k_at_iteration(0, 5000, 100, s) == 3);
  CHECK(k_at_iteration(1999, 5000, 100, s) == 3);
  CHECK(k_at_iteration(2000, 5000, 100, s) == 10);
  CHECK(k_at_iteration(4499, 5000, 100, s) == 10);
  CHECK(k_at_iteration(4500, 5000, 100, s) == 100);
  CHECK(k_at_iteration(0, 5000, 100, KHopSchedule::full()) == 100);
  // k never exceeds d
  CHECK(k_at_iteration(2500, 5000, 5, s) == 5);
}

TEST_CASE("k-hop argument checks") {
  CHECK_THROWS_AS(h_khop(Matrix(3, 3), 0), ValidationError);
  CHECK_THROWS_AS(h_khop(Matrix(3, 3), 2, 0.0), ValidationError);
  CHECK_THROWS_AS(h_exponential(Matrix(2, 3)), ValidationError);
  KHopSchedule bad{{0.9, 0.4}, {3, 10}, 1.0};
  CHECK_THROWS_AS(validate(bad), ValidationError);
}
