#include "ddcd/linear_model.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "ddcd/error.hpp"
#include "ddcd/kernels.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

void check_shapes(const DiffusionBatch& batch, const Matrix& W) {
  require(W.is_square(), "linear loss: W must be square");
  require(batch.X_t.cols() == W.rows() && batch.Z.rows() == batch.X_t.rows() &&
              batch.Z.cols() == batch.X_t.cols() &&
              batch.sqrt_one_minus_abar.size() == batch.X_t.rows(),
          "linear loss: batch and W dimensions differ");
}

}  // namespace

LossGrad denoising_loss_linear(const DiffusionBatch& batch, const Matrix& W, double lambda1,
                               double lambda2) {
  check_shapes(batch, W);
  const std::size_t b = batch.rows();
  const std::size_t d = batch.cols();

  // V = X_t - diag(sqrt(1-abar)) Z, residual R = V (I - W).
  Matrix V = batch.X_t;
  for (std::size_t r = 0; r < b; ++r) {
    const double q = batch.sqrt_one_minus_abar[r];
    for (std::size_t j = 0; j < d; ++j) V(r, j) -= q * batch.Z(r, j);
  }
  Matrix R = V - kernels::matmul(V, W);

  const double inv_b = 1.0 / static_cast<double>(b);
  LossGrad out;
  out.quadratic = 0.5 * inv_b * frobenius_sq(R);
  out.loss = out.quadratic + lambda1 * l1_norm(W) + lambda2 * frobenius_sq(W);
  out.grad = kernels::matmul_tn(V, R) * (-inv_b);
  for (std::size_t i = 0; i < W.size(); ++i)
    out.grad.data()[i] += lambda1 * sign(W.data()[i]) + 2.0 * lambda2 * W.data()[i];
  out.grad.zero_diagonal();
  return out;
}

double theorem1_residual(const Matrix& X0, const Matrix& W, const DiffusionBatch& batch) {
  check_shapes(batch, W);
  require(X0.rows() == batch.rows() && X0.cols() == batch.cols(),
          "theorem1: X0 and batch shapes differ");
  const std::size_t b = X0.rows();
  const std::size_t d = X0.cols();

  // Left: diag(sqrt abar)(X0 - X0 W)
  const Matrix left = scale_rows(X0 - kernels::matmul(X0, W), batch.sqrt_abar);
  // Right: (X_t - X_t W) - diag(sqrt(1-abar)) Z (I - W)
  const Matrix sz = scale_rows(batch.Z, batch.sqrt_one_minus_abar);
  const Matrix right =
      (batch.X_t - kernels::matmul(batch.X_t, W)) - (sz - kernels::matmul(sz, W));

  double worst = 0.0;
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t j = 0; j < d; ++j) worst = std::max(worst, std::abs(left(r, j) - right(r, j)));
  return worst;
}

double theorem1_identity(const Matrix& X0, const Matrix& W, const NoiseSchedule& schedule,
                         std::span<const int> t, const Matrix& Z) {
  require(W.is_square() && W.rows() == X0.cols(), "theorem1: W and X0 dimensions differ");
  require(t.size() == X0.rows(), "theorem1: one timestep per row required");
  std::vector<double> abar(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    require(t[r] >= 1 && t[r] <= schedule.T(), "theorem1: timestep out of range");
    abar[r] = schedule.alpha_bar(t[r]);
  }
  DiffusionBatch batch = perturb_with_alpha_bars(X0, abar, Z);
  batch.t.assign(t.begin(), t.end());
  return theorem1_residual(X0, W, batch);
}

LinearFit fit_linear_features(const Matrix& features, const TrainConfig& config) {
  validate(config);
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  require(n >= 2, "fit: at least two samples required");
  require(d >= 1, "fit: at least one variable required");
  require(all_finite(features), "fit: data contains non-finite values");

  const NoiseSchedule schedule(config.noise);
  const AdamOptions adam_opt{config.adam_beta1, config.adam_beta2, config.adam_epsilon};
  DagPenaltyController penalty(config);

  LinearFit fit;
  fit.W = Matrix(d, d);
  AdamState adam(d * d);

  for (std::size_t tau = 0; tau < config.n_iter; ++tau) {
    const int k = k_at_iteration(tau, config.n_iter, d, config.khop);
    const auto idx = bootstrap_batch(n, config.batch_size, config.seed, tau);
    const Matrix X0 = gather_rows(features, idx);
    const auto t = sample_timesteps(config.batch_size, schedule.T(),
                                    derive_seed(config.seed, Stream::kTimestep, tau));
    const DiffusionBatch batch =
        perturb(X0, schedule, t, derive_seed(config.seed, Stream::kDiffusion, tau));
#ifndef NDEBUG
    if (tau % 500 == 0) assert(theorem1_residual(X0, fit.W, batch) <= 1e-10 * (1.0 + max_abs(X0)));
#endif

    LossGrad lg = denoising_loss_linear(batch, fit.W, config.lambda1, config.lambda2);
    const AcyclicityResult h = h_khop(fit.W, k, config.khop.gamma);

    const double multiplier = penalty.multiplier(tau, h.value);
    const double loss = lg.loss + penalty.value(tau, h.value);
    if (!std::isfinite(loss) || !all_finite(lg.grad) || !all_finite(h.gradient)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << tau << ": denoising=" << lg.quadratic
          << " l1=" << config.lambda1 * l1_norm(fit.W)
          << " l2=" << config.lambda2 * frobenius_sq(fit.W) << " h=" << h.value
          << " multiplier=" << multiplier;
      throw NumericAbort(msg.str());
    }

    lg.grad.add_scaled(h.gradient, multiplier);
    lg.grad.zero_diagonal();
    adam.step(fit.W.values(), lg.grad.values(), config.learning_rate, adam_opt);
    fit.W.zero_diagonal();

    if (penalty.round_ends(tau)) penalty.end_round(h_khop_value(fit.W, k, config.khop.gamma));

    if (tau % config.log_every == 0 || tau + 1 == config.n_iter)
      fit.history.push_back({tau, loss, h.value, k, multiplier});
  }
  return fit;
}

LinearFit fit_linear(const Dataset& data, const TrainConfig& config) {
  return fit_linear_features(data.X, config);
}

}  // namespace ddcd
