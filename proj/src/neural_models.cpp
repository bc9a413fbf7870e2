#include "ddcd/neural_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddcd/acyclicity.hpp"
#include "ddcd/diffusion.hpp"
#include "ddcd/error.hpp"
#include "ddcd/kernels.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

constexpr double kLatentEps = 1e-8;

// Divides the whole batch by its root-mean-square. One scale for all
// columns, so a shared decoder still sees every column on the same axis.
Matrix rms_normalize(const Matrix& U, double& inv_scale) {
  inv_scale = 1.0 / std::sqrt(frobenius_sq(U) / static_cast<double>(U.size()) + kLatentEps);
  return U * inv_scale;
}

// dL/dU from dL/dY for Y = rms_normalize(U).
Matrix rms_normalize_backward(const Matrix& Y, const Matrix& gY, double inv_scale) {
  double mean_gy = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) mean_gy += gY.data()[i] * Y.data()[i];
  mean_gy /= static_cast<double>(Y.size());
  Matrix gU(Y.rows(), Y.cols());
  for (std::size_t i = 0; i < Y.size(); ++i)
    gU.data()[i] = inv_scale * (gY.data()[i] - Y.data()[i] * mean_gy);
  return gU;
}

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

NonlinearModel NonlinearModel::init(std::size_t d, std::size_t hidden, std::uint64_t seed) {
  NonlinearModel m;
  m.encoder = ScalarMLP::one_hidden(hidden, Activation::kIdentity, derive_seed(seed, {1}));
  m.decoder = ScalarMLP::one_hidden(hidden, Activation::kIdentity, derive_seed(seed, {2}));
  m.W = Matrix(d, d);
  return m;
}

NonlinearLoss nonlinear_loss(const NonlinearModel& model, const Matrix& X0,
                             std::span<const double> alpha_bars, const Matrix& Z,
                             const NonlinearLossOptions& opt) {
  const Matrix& W = model.W;
  require(W.is_square() && W.rows() == X0.cols(), "nonlinear loss: W and X0 dimensions differ");
  require(Z.rows() == X0.rows() && Z.cols() == X0.cols(), "nonlinear loss: noise shape mismatch");
  require(alpha_bars.size() == X0.rows(), "nonlinear loss: one alpha_bar per row required");
  const std::size_t b = X0.rows();
  const std::size_t d = X0.cols();
  const double inv_b = 1.0 / static_cast<double>(b);

  NonlinearLoss out;

  // Reconstruction through the latent SEM.
  MLPCache enc_cache;
  MLPCache dec_cache;
  const Matrix U = mlp_forward(model.encoder, X0, &enc_cache);
  double inv_scale = 1.0;
  const Matrix Y = model.normalize_latent ? rms_normalize(U, inv_scale) : U;
  const Matrix V = kernels::matmul(Y, W);
  const Matrix Xhat = mlp_forward(model.decoder, V, &dec_cache);
  Matrix E = Xhat - X0;
  out.reconstruction = 0.5 * inv_b * frobenius_sq(E);
  E *= inv_b;
  const MLPGrads dec = mlp_backward(model.decoder, E, dec_cache);
  out.grad_decoder = dec.params;
  out.grad_W = kernels::matmul_tn(Y, dec.input);
  Matrix grad_Y = kernels::matmul_nt(dec.input, W);

  // Latent denoising. P = Y_t - diag(sqrt(1-abar)) Z, residual R = P (I - W).
  const DiffusionBatch latent = perturb_with_alpha_bars(Y, alpha_bars, Z);
  Matrix P = latent.X_t;
  for (std::size_t r = 0; r < b; ++r)
    for (std::size_t j = 0; j < d; ++j) P(r, j) -= latent.sqrt_one_minus_abar[r] * Z(r, j);
  const Matrix R = P - kernels::matmul(P, W);
  out.denoising = opt.denoise_weight * 0.5 * inv_b * frobenius_sq(R);
  if (opt.denoise_weight != 0.0) {
    const double c = opt.denoise_weight * inv_b;
    out.grad_W.add_scaled(kernels::matmul_tn(P, R), -c);
    // dP = c R (I - W)^T; P depends on Y through diag(sqrt abar).
    Matrix dP = (R - kernels::matmul_nt(R, W)) * c;
    for (std::size_t r = 0; r < b; ++r)
      for (std::size_t j = 0; j < d; ++j) grad_Y(r, j) += latent.sqrt_abar[r] * dP(r, j);
  }

  const MLPGrads enc = mlp_backward(
      model.encoder, model.normalize_latent ? rms_normalize_backward(Y, grad_Y, inv_scale) : grad_Y,
      enc_cache);
  out.grad_encoder = enc.params;

  // Penalties on W.
  out.l1 = model.lambda1 * l1_norm(W);
  out.l2 = model.lambda2 * frobenius_sq(W);
  for (std::size_t i = 0; i < W.size(); ++i)
    out.grad_W.data()[i] += model.lambda1 * sign(W.data()[i]) + 2.0 * model.lambda2 * W.data()[i];
  double dag = 0.0;
  if (opt.dag_multiplier != 0.0) {
    const AcyclicityResult h = h_khop(W, opt.k, opt.gamma);
    out.h = h.value;
    dag = opt.dag_multiplier * h.value;
    out.grad_W.add_scaled(h.gradient, opt.dag_multiplier);
  }
  out.grad_W.zero_diagonal();
  out.loss = out.reconstruction + out.denoising + out.l1 + out.l2 + dag;
  return out;
}

NonlinearFit fit_nonlinear(const Dataset& data, const TrainConfig& config) {
  validate(config);
  const Matrix& X = data.X;
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  require(n >= 2, "fit: at least two samples required");
  require(all_finite(X), "fit: data contains non-finite values");

  const NoiseSchedule schedule(config.noise);
  const AdamOptions adam_opt{config.adam_beta1, config.adam_beta2, config.adam_epsilon};
  DagPenaltyController penalty(config);

  NonlinearFit fit;
  fit.model = NonlinearModel::init(d, config.hidden_width, derive_seed(config.seed, Stream::kInit));
  fit.model.lambda1 = config.lambda1;
  fit.model.lambda2 = config.lambda2;
  AdamState adam_w(d * d);
  AdamState adam_enc(fit.model.encoder.parameter_count());
  AdamState adam_dec(fit.model.decoder.parameter_count());

  std::vector<double> abar(config.batch_size);
  const bool al_mode = config.penalty_mode == PenaltyMode::kAugmentedLagrangian;
  for (std::size_t tau = 0; tau < config.n_iter; ++tau) {
    const int k = k_at_iteration(tau, config.n_iter, d, config.khop);
    const auto idx = bootstrap_batch(n, config.batch_size, config.seed, tau);
    const Matrix X0 = gather_rows(X, idx);
    const auto t = sample_timesteps(config.batch_size, schedule.T(),
                                    derive_seed(config.seed, Stream::kTimestep, tau));
    for (std::size_t r = 0; r < t.size(); ++r) abar[r] = schedule.alpha_bar(t[r]);
    const Matrix Z = standard_normal(config.batch_size, d,
                                     derive_seed(config.seed, Stream::kDiffusion, tau));

    // The AL slope needs h at the current W before the loss is formed.
    const double h_pre = al_mode ? h_khop_value(fit.model.W, k, config.khop.gamma) : 0.0;
    NonlinearLossOptions opt;
    opt.k = k;
    opt.gamma = config.khop.gamma;
    opt.denoise_weight = config.denoise_weight;
    opt.dag_multiplier = penalty.multiplier(tau, h_pre);

    NonlinearLoss loss = nonlinear_loss(fit.model, X0, abar, Z, opt);
    if (opt.dag_multiplier == 0.0) loss.h = al_mode ? h_pre : h_khop_value(fit.model.W, k, opt.gamma);
    if (al_mode) loss.loss += penalty.value(tau, loss.h) - opt.dag_multiplier * loss.h;

    if (!std::isfinite(loss.loss) || !all_finite(loss.grad_W) || !finite(loss.grad_encoder) ||
        !finite(loss.grad_decoder)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << tau << ": reconstruction=" << loss.reconstruction
          << " denoising=" << loss.denoising << " l1=" << loss.l1 << " l2=" << loss.l2
          << " h=" << loss.h << " multiplier=" << opt.dag_multiplier;
      throw NumericAbort(msg.str());
    }

    adam_w.step(fit.model.W.values(), loss.grad_W.values(), config.learning_rate, adam_opt);
    fit.model.W.zero_diagonal();
    adam_enc.step(fit.model.encoder.mutable_parameters(), loss.grad_encoder, config.learning_rate, adam_opt);
    adam_dec.step(fit.model.decoder.mutable_parameters(), loss.grad_decoder, config.learning_rate, adam_opt);

    if (penalty.round_ends(tau)) penalty.end_round(h_khop_value(fit.model.W, k, config.khop.gamma));

    if (tau % config.log_every == 0 || tau + 1 == config.n_iter)
      fit.history.push_back({tau, loss.loss, loss.h, k, opt.dag_multiplier});
  }
  return fit;
}

Normalizer Normalizer::fit(const Matrix& X, double gain) {
  require(X.rows() >= 1, "normalizer: empty data");
  require(gain > 0.0, "normalizer: gain must be positive");
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  Normalizer norm;
  norm.mean.assign(d, 0.0);
  norm.scale.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t r = 0; r < n; ++r) mu += X(r, j);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (X(r, j) - mu) * (X(r, j) - mu);
    var /= static_cast<double>(n);
    norm.mean[j] = mu;
    // Relative test so a column that is constant up to rounding still counts.
    const double sd = std::sqrt(var);
    norm.scale[j] = sd > 1e-12 * (1.0 + std::abs(mu)) ? 1.0 / sd : 0.0;
  }
  norm.mlp = ScalarMLP({1, 1}, {Activation::kTanh}, 0);
  norm.mlp.set_weight(0, 0, 0, gain);
  norm.mlp.set_bias(0, 0, 0.0);
  return norm;
}

Matrix Normalizer::apply(const Matrix& X) const {
  require(X.cols() == mean.size(), "normalizer: column count differs from the fitted data");
  Matrix S(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t j = 0; j < X.cols(); ++j) S(r, j) = (X(r, j) - mean[j]) * scale[j];
  return mlp_forward(mlp, S);
}

SmoothFit fit_smooth(const Dataset& data, const TrainConfig& config) {
  validate(config);
  SmoothFit fit;
  fit.normalizer = Normalizer::fit(data.X, config.normalizer_gain);
  LinearFit inner = fit_linear_features(fit.normalizer.apply(data.X), config);
  fit.W = std::move(inner.W);
  fit.history = std::move(inner.history);
  return fit;
}

NoiseCheck theorem2_noise_check(const Matrix& W, double alpha_bar, std::size_t n_mc,
                                std::uint64_t seed) {
  require(W.is_square(), "theorem2: W must be square");
  require(alpha_bar >= 0.0 && alpha_bar <= 1.0, "theorem2: alpha_bar outside [0, 1]");
  require(n_mc >= 2, "theorem2: need at least two Monte-Carlo samples");
  const std::size_t d = W.rows();
  const double q = std::sqrt(1.0 - alpha_bar);

  const Matrix Zs = standard_normal(n_mc, d, seed) * q;
  const Matrix S = kernels::matmul(Zs, W);  // row r holds (W^T z_r)^T

  NoiseCheck out;
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t r = 0; r < n_mc; ++r) mu += S(r, j);
    mu /= static_cast<double>(n_mc);
    double var = 0.0;
    for (std::size_t r = 0; r < n_mc; ++r) var += (S(r, j) - mu) * (S(r, j) - mu);
    out.empirical_var += var / static_cast<double>(n_mc - 1);
    double col = 0.0;
    for (std::size_t i = 0; i < d; ++i) col += W(i, j) * W(i, j);
    out.predicted_var += col * (1.0 - alpha_bar);
  }
  out.empirical_var /= static_cast<double>(d);
  out.predicted_var /= static_cast<double>(d);
  out.predicted_coarse = (1.0 - alpha_bar) / static_cast<double>(d);
  return out;
}

std::vector<std::pair<double, double>> sample_curve(const ScalarMLP& mlp, double lo, double hi,
                                                    std::size_t points) {
  require(points >= 2 && hi > lo, "sample_curve: need hi > lo and at least two points");
  std::vector<std::pair<double, double>> curve;
  curve.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    curve.emplace_back(x, mlp.eval(x));
  }
  return curve;
}

LatentAlignment align_latent_affine(const ScalarMLP& f, const std::function<double(double)>& target,
                                    double lo, double hi, std::size_t points) {
  require(points >= 2 && hi > lo, "align_latent_affine: need hi > lo and at least two points");
  std::vector<double> u(points);
  std::vector<double> y(points);
  for (std::size_t i = 0; i < points; ++i) {
    u[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    y[i] = target(u[i]);
  }
  auto mse = [&](double a, double c) {
    double s = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
      const double e = f.eval(a * u[i] + c) - y[i];
      s += e * e;
    }
    return s / static_cast<double>(points);
  };

  // Coarse grid over sign, log-scale and shift, then a shrinking pattern search.
  LatentAlignment best{1.0, 0.0, mse(1.0, 0.0)};
  for (int sgn : {-1, 1})
    for (int e = -20; e <= 20; ++e) {
      const double a = sgn * std::pow(10.0, e / 10.0);
      for (int s = -40; s <= 40; ++s) {
        const double c = s * 0.25;
        const double m = mse(a, c);
        if (m < best.mse) best = {a, c, m};
      }
    }
  double step_a = std::abs(best.scale) * 0.25;
  double step_c = 0.25;
  for (int iter = 0; iter < 200 && (step_a > 1e-7 || step_c > 1e-7); ++iter) {
    bool improved = false;
    const double cand[4][2] = {{step_a, 0}, {-step_a, 0}, {0, step_c}, {0, -step_c}};
    for (const auto& dc : cand) {
      const double a = best.scale + dc[0];
      const double c = best.shift + dc[1];
      const double m = mse(a, c);
      if (m < best.mse) {
        best = {a, c, m};
        improved = true;
      }
    }
    if (!improved) {
      step_a *= 0.5;
      step_c *= 0.5;
    }
  }
  return best;
}

}  // namespace ddcd
