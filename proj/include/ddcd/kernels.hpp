#pragma once

#include "ddcd/matrix.hpp"

// Dense products used by the training loops. The default entry points are
// OpenMP-parallel over output rows; every output row is reduced in a fixed
// order, so results do not depend on the thread count. The `serial`
// namespace holds straightforward triple loops kept as a reference for tests
// and for the kernel benchmark.
namespace ddcd::kernels {

// A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// tr(A * B) without forming the product.
double trace_of_product(const Matrix& a, const Matrix& b);

int max_threads();

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
double trace_of_product(const Matrix& a, const Matrix& b);
}  // namespace serial

}  // namespace ddcd::kernels
