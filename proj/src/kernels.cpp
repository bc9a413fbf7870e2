#include "ddcd/kernels.hpp"

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ddcd/error.hpp"

namespace ddcd::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

inline bool worth_parallel(std::size_t work) { return work >= kParallelWork; }

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t m = b.cols();
  Matrix c(a.rows(), m);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();

#pragma omp parallel for schedule(static) if (worth_parallel(a.rows() * inner * m))
  for (std::int64_t i = 0; i < n; ++i) {
    double* __restrict crow = pc + i * m;
    const double* arow = pa + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* __restrict brow = pb + k * m;
#pragma omp simd
      for (std::size_t j = 0; j < m; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: row counts differ");
  const std::int64_t n = static_cast<std::int64_t>(a.cols());
  const std::size_t inner = a.rows();
  const std::size_t m = b.cols();
  const std::size_t lda = a.cols();
  Matrix c(a.cols(), m);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();

#pragma omp parallel for schedule(static) if (worth_parallel(a.cols() * inner * m))
  for (std::int64_t i = 0; i < n; ++i) {
    double* __restrict crow = pc + i * m;
    for (std::size_t r = 0; r < inner; ++r) {
      const double ari = pa[r * lda + i];
      if (ari == 0.0) continue;
      const double* __restrict brow = pb + r * m;
#pragma omp simd
      for (std::size_t j = 0; j < m; ++j) crow[j] += ari * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: column counts differ");
  const std::int64_t n = static_cast<std::int64_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t m = b.rows();
  Matrix c(a.rows(), m);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();

#pragma omp parallel for schedule(static) if (worth_parallel(a.rows() * inner * m))
  for (std::int64_t i = 0; i < n; ++i) {
    const double* __restrict arow = pa + i * inner;
    for (std::size_t j = 0; j < m; ++j) {
      const double* __restrict brow = pb + j * inner;
      double s = 0.0;
      for (std::size_t k = 0; k < inner; ++k) s += arow[k] * brow[k];
      pc[i * m + j] = s;
    }
  }
  return c;
}

double trace_of_product(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows() && a.rows() == b.cols(), "trace_of_product: shape mismatch");
  // tr(AB) = sum_ij A_ij B_ji; rows are summed in order so the result is
  // independent of scheduling.
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t += a(i, j) * b(j, i);
  return t;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < a.rows(); ++r) s += a(r, i) * b(r, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: column counts differ");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      c(i, j) = s;
    }
  return c;
}

double trace_of_product(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows() && a.rows() == b.cols(), "trace_of_product: shape mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) t += a(i, k) * b(k, i);
  return t;
}

}  // namespace serial

}  // namespace ddcd::kernels
