#pragma once

#include <cstddef>
#include <vector>

#include "ddcd/matrix.hpp"

// Continuous acyclicity scores. Both vanish exactly on DAGs.
namespace ddcd {

struct AcyclicityResult {
  double value = 0.0;
  Matrix gradient;  // dh/dW
};

// Piecewise-constant k curriculum. Phase i (0-based) covers
// tau < boundaries[i] * N_iter and uses k = phase_k[i]; after the last
// boundary k = d. Empty vectors mean k = d throughout.
struct KHopSchedule {
  std::vector<double> boundaries{0.4, 0.9};
  std::vector<int> phase_k{3, 10};
  double gamma = 1.0;

  static KHopSchedule full() { return KHopSchedule{{}, {}, 1.0}; }
};

void validate(const KHopSchedule& s);

// e^A by scaling and squaring around a degree-18 Taylor core.
Matrix matrix_exponential(const Matrix& a);

// h(W) = tr(exp(W o W)) - d with gradient 2 exp(W o W)^T o W.
AcyclicityResult h_exponential(const Matrix& W);

// h(W, k, gamma) = sum_{j=1}^{k+1} tr((gamma W o gamma W)^j) / (j! gamma^{2j}).
// Built from the running product T_j = T_{j-1} (gamma^2 M) / (j gamma^2),
// M = W o W, so each extra hop costs one d x d product and the factorial
// never overflows. dh/dM = sum_{j=0}^{k} T_j^T.
AcyclicityResult h_khop(const Matrix& W, int k, double gamma = 1.0);

// Value only; skips the gradient accumulation.
double h_khop_value(const Matrix& W, int k, double gamma = 1.0);

int k_at_iteration(std::size_t tau, std::size_t n_iter, std::size_t d, const KHopSchedule& schedule);

}  // namespace ddcd
