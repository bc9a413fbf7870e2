#pragma once

#include <span>
#include <vector>

#include "ddcd/diffusion.hpp"
#include "ddcd/graph_synth.hpp"
#include "ddcd/matrix.hpp"
#include "ddcd/optimizer.hpp"

namespace ddcd {

struct LossGrad {
  double loss = 0.0;       // total including L1/L2 penalties
  double quadratic = 0.0;  // denoising term alone
  Matrix grad;             // diagonal zeroed
};

// (1/2b) ||(X_t - X_t W) - diag(sqrt(1-abar)) Z (I - W)||_F^2
//   + lambda1 ||W||_1 + lambda2 ||W||_F^2
// L1 enters the gradient as the subgradient lambda1 * sign(W).
LossGrad denoising_loss_linear(const DiffusionBatch& batch, const Matrix& W, double lambda1,
                               double lambda2);

// max |diag(sqrt abar)(X0 - X0 W) - [(X_t - X_t W) - diag(sqrt(1-abar)) Z (I - W)]|
// with X_t rebuilt from (X0, Z, t).
double theorem1_identity(const Matrix& X0, const Matrix& W, const NoiseSchedule& schedule,
                         std::span<const int> t, const Matrix& Z);

// Same residual for an already perturbed batch whose clean rows are X0.
double theorem1_residual(const Matrix& X0, const Matrix& W, const DiffusionBatch& batch);

struct HistoryRow {
  std::size_t iter = 0;
  double loss = 0.0;
  double h = 0.0;
  int k = 0;
  double lambda_dag = 0.0;
};

struct LinearFit {
  Matrix W;
  std::vector<HistoryRow> history;
};

// Runs the denoising fit of a linear SEM on the rows of `features`.
// W starts at zero and its diagonal is re-zeroed after every Adam step.
// Throws NumericAbort on a non-finite loss.
LinearFit fit_linear_features(const Matrix& features, const TrainConfig& config);

LinearFit fit_linear(const Dataset& data, const TrainConfig& config);

}  // namespace ddcd
