#include "ddcd/acyclicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddcd/error.hpp"
#include "ddcd/kernels.hpp"

namespace ddcd {

void validate(const KHopSchedule& s) {
  require(s.boundaries.size() == s.phase_k.size(),
          "k-hop schedule: one k value per boundary required");
  require(s.gamma > 0.0, "k-hop schedule: gamma must be positive");
  double prev = 0.0;
  for (double b : s.boundaries) {
    require(b > prev && b < 1.0, "k-hop schedule: boundaries must increase strictly inside (0, 1)");
    prev = b;
  }
  for (int k : s.phase_k) require(k >= 1, "k-hop schedule: k must be at least 1");
}

Matrix matrix_exponential(const Matrix& a) {
  require(a.is_square(), "matrix_exponential: matrix must be square");
  const std::size_t n = a.rows();

  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += std::abs(a(i, j));
    norm1 = std::max(norm1, col);
  }
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Matrix scaled = a * std::ldexp(1.0, -squarings);

  // Horner: I + A(I + A/2 (I + A/3 (... (I + A/18))))
  constexpr int kDegree = 18;
  const Matrix eye = Matrix::identity(n);
  Matrix e = eye;
  for (int j = kDegree; j >= 1; --j) {
    e = kernels::matmul(scaled, e) * (1.0 / j);
    e += eye;
  }
  for (int s = 0; s < squarings; ++s) e = kernels::matmul(e, e);
  return e;
}

AcyclicityResult h_exponential(const Matrix& W) {
  require(W.is_square(), "h_exponential: W must be square");
  const Matrix M = hadamard(W, W);
  const Matrix E = matrix_exponential(M);
  AcyclicityResult r;
  r.value = trace(E) - static_cast<double>(W.rows());
  r.gradient = hadamard(E.transposed(), W) * 2.0;
  return r;
}

namespace {

// Terms decay like 1/j!, so deep hops underflow into subnormals, which are
// both irrelevant to the sum and very slow to multiply. Flushes them to zero
// and reports whether the whole term vanished.
bool flush_subnormal(Matrix& T) {
  bool all_zero = true;
  for (double& v : T.values()) {
    if (std::abs(v) < std::numeric_limits<double>::min()) v = 0.0;
    else all_zero = false;
  }
  return all_zero;
}

// Accumulates the truncated series; `grad_m` receives dh/dM when non-null.
double khop_series(const Matrix& W, int k, double gamma, Matrix* grad_m) {
  require(W.is_square(), "h_khop: W must be square");
  require(k >= 1, "h_khop: k must be at least 1");
  require(gamma > 0.0, "h_khop: gamma must be positive");
  const std::size_t d = W.rows();
  const double g2 = gamma * gamma;

  Matrix A(d, d);  // gamma^2 (W o W)
  for (std::size_t i = 0; i < W.size(); ++i) A.data()[i] = g2 * W.data()[i] * W.data()[i];

  // Sum of T_0..T_k, transposed once at the end.
  Matrix power_sum;
  if (grad_m) power_sum = Matrix::identity(d);

  // T_1 = A / gamma^2
  Matrix T = A * (1.0 / g2);
  double value = trace(T);
  for (int j = 2; j <= k + 1; ++j) {
    if (grad_m) power_sum += T;
    const double scale = 1.0 / (static_cast<double>(j) * g2);
    if (j == k + 1) {
      // Only the trace of the last term is needed.
      value += kernels::trace_of_product(T, A) * scale;
      break;
    }
    T = kernels::matmul(T, A);
    T *= scale;
    value += trace(T);
    if (flush_subnormal(T)) break;  // every further term is exactly zero
  }
  if (grad_m) *grad_m = power_sum.transposed();
  return value;
}

}  // namespace

AcyclicityResult h_khop(const Matrix& W, int k, double gamma) {
  AcyclicityResult r;
  Matrix grad_m;
  r.value = khop_series(W, k, gamma, &grad_m);
  r.gradient = hadamard(grad_m, W) * 2.0;
  return r;
}

double h_khop_value(const Matrix& W, int k, double gamma) {
  return khop_series(W, k, gamma, nullptr);
}

int k_at_iteration(std::size_t tau, std::size_t n_iter, std::size_t d, const KHopSchedule& schedule) {
  require(n_iter >= 1 && tau < n_iter, "k_at_iteration: tau must lie in [0, N_iter)");
  const double t = static_cast<double>(tau);
  const double n = static_cast<double>(n_iter);
  for (std::size_t i = 0; i < schedule.boundaries.size(); ++i) {
    if (t < schedule.boundaries[i] * n)
      return std::min(schedule.phase_k[i], static_cast<int>(d));
  }
  return static_cast<int>(d);
}

}  // namespace ddcd
