#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ddcd/graph_synth.hpp"
#include "ddcd/linear_model.hpp"
#include "ddcd/matrix.hpp"
#include "ddcd/mlp.hpp"
#include "ddcd/optimizer.hpp"

namespace ddcd {

// Latent linear SEM between scalar encoder/decoder maps:
// Y = f1(X), X ~ f2(Y W).
struct NonlinearModel {
  ScalarMLP encoder;
  ScalarMLP decoder;
  Matrix W;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  // Rescale f1's output to unit RMS over the batch. Without it the latent
  // scale is free and the denoising term shrinks Y (and W) toward zero.
  bool normalize_latent = true;

  static NonlinearModel init(std::size_t d, std::size_t hidden, std::uint64_t seed);
};

struct NonlinearLossOptions {
  double dag_multiplier = 0.0;
  int k = 1;
  double gamma = 1.0;
  double denoise_weight = 1.0;
};

struct NonlinearLoss {
  double loss = 0.0;
  double reconstruction = 0.0;
  double denoising = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double h = 0.0;
  Matrix grad_W;
  std::vector<double> grad_encoder;
  std::vector<double> grad_decoder;
};

// (1/2b)||X0 - f2(f1(X0) W)||^2
//   + denoise_weight (1/2b)||(Y_t - Y_t W) - diag(sqrt(1-abar)) Z (I - W)||^2
//   + lambda1 ||W||_1 + lambda2 ||W||^2 + dag_multiplier * h_khop(W, k)
// where Y = f1(X0) (RMS-normalized over the batch when the model asks for it) and
// Y_t = diag(sqrt abar) Y + diag(sqrt(1-abar)) Z.
// grad_W has its diagonal zeroed.
NonlinearLoss nonlinear_loss(const NonlinearModel& model, const Matrix& X0,
                             std::span<const double> alpha_bars, const Matrix& Z,
                             const NonlinearLossOptions& opt);

struct NonlinearFit {
  NonlinearModel model;
  std::vector<HistoryRow> history;
};

NonlinearFit fit_nonlinear(const Dataset& data, const TrainConfig& config);

// Per-column standardization followed by a fixed tanh ScalarMLP, so every
// feature lands strictly inside (-1, 1) whatever its original scale.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1/std, zero for constant columns
  ScalarMLP mlp;

  static Normalizer fit(const Matrix& X, double gain);
  Matrix apply(const Matrix& X) const;
};

struct SmoothFit {
  Matrix W;  // normalized scale
  Normalizer normalizer;
  std::vector<HistoryRow> history;
};

SmoothFit fit_smooth(const Dataset& data, const TrainConfig& config);

struct NoiseCheck {
  double empirical_var = 0.0;     // mean over columns of Var((W^T z)_j) sqrt(1-abar)^2
  double predicted_var = 0.0;     // mean over columns of sum_i w_ij^2 (1 - abar)
  double predicted_coarse = 0.0;  // (1 - abar) / d
};

// Monte-Carlo check of the variance carried by W^T z under a normalized
// adjacency; z ~ N(0, I) scaled by sqrt(1 - abar).
NoiseCheck theorem2_noise_check(const Matrix& W, double alpha_bar, std::size_t n_mc,
                                std::uint64_t seed);

// (x, f(x)) on an even grid of `points` values over [lo, hi].
std::vector<std::pair<double, double>> sample_curve(const ScalarMLP& mlp, double lo, double hi,
                                                    std::size_t points);

struct LatentAlignment {
  double scale = 1.0;
  double shift = 0.0;
  double mse = 0.0;
};

// Finds u -> scale * u + shift minimizing mean (f(scale u + shift) - target(u))^2
// over an even grid on [lo, hi]; resolves the latent scale indeterminacy
// before comparing a learned decoder with a known mechanism.
LatentAlignment align_latent_affine(const ScalarMLP& f, const std::function<double(double)>& target,
                                    double lo, double hi, std::size_t points = 201);

}  // namespace ddcd
