#include "ddcd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ddcd/error.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

std::string_view to_string(PenaltyMode m) {
  return m == PenaltyMode::kLinear ? "linear" : "augmented_lagrangian";
}

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kLinear:
      return "linear";
    case ModelKind::kNonlinear:
      return "nonlinear";
    case ModelKind::kSmooth:
      return "smooth";
  }
  return "linear";
}

PenaltyMode parse_penalty_mode(std::string_view s) {
  if (s == "linear") return PenaltyMode::kLinear;
  if (s == "augmented_lagrangian" || s == "al") return PenaltyMode::kAugmentedLagrangian;
  throw ValidationError("unknown penalty mode '" + std::string(s) + "'");
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "linear") return ModelKind::kLinear;
  if (s == "nonlinear") return ModelKind::kNonlinear;
  if (s == "smooth") return ModelKind::kSmooth;
  throw ValidationError("unknown model '" + std::string(s) + "' (expected linear, nonlinear or smooth)");
}

TrainConfig TrainConfig::defaults_for(ModelKind model) {
  TrainConfig c;
  if (model == ModelKind::kNonlinear) {
    c.n_iter = 1000;
    c.learning_rate = 3e-2;
    c.lambda1 = 1e-2;
    c.lambda_dag_max = 100.0;
    // Edge weights live on the unit-RMS latent scale.
    c.threshold = 0.1;
  }
  if (model == ModelKind::kSmooth) c.threshold = 0.1;
  return c;
}

void validate(const TrainConfig& c) {
  require(c.n_iter >= 1, "config: n_iter must be positive");
  require(c.batch_size >= 1, "config: batch_size must be positive");
  require(c.learning_rate > 0.0, "config: learning_rate must be positive");
  require(c.adam_beta1 >= 0.0 && c.adam_beta1 < 1.0, "config: adam_beta1 must lie in [0, 1)");
  require(c.adam_beta2 >= 0.0 && c.adam_beta2 < 1.0, "config: adam_beta2 must lie in [0, 1)");
  require(c.adam_epsilon > 0.0, "config: adam_epsilon must be positive");
  require(c.lambda1 >= 0.0 && c.lambda2 >= 0.0, "config: lambda1/lambda2 must be non-negative");
  require(c.lambda_dag_max >= 0.0, "config: lambda_dag_max must be non-negative");
  require(c.al_rho_init > 0.0 && c.al_rho_max >= c.al_rho_init, "config: invalid rho range");
  require(c.al_rounds >= 1 && c.al_rounds <= c.n_iter, "config: al_rounds must lie in [1, n_iter]");
  require(c.threshold >= 0.0, "config: threshold must be non-negative");
  require(c.log_every >= 1, "config: log_every must be positive");
  require(c.hidden_width >= 1, "config: hidden_width must be positive");
  require(c.denoise_weight >= 0.0, "config: denoise_weight must be non-negative");
  require(c.normalizer_gain > 0.0, "config: normalizer_gain must be positive");
  validate(c.khop);
  (void)NoiseSchedule(c.noise);
}

void AdamState::step(std::span<double> params, std::span<const double> grads, double lr,
                     const AdamOptions& opt) {
  require(params.size() == m_.size() && grads.size() == m_.size(), "adam: shape mismatch");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = opt.beta1 * m_[i] + (1.0 - opt.beta1) * g;
    v_[i] = opt.beta2 * v_[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

double linear_dag_multiplier(std::size_t tau, std::size_t n_iter, double lambda_max) {
  require(n_iter >= 1 && tau < n_iter, "dag penalty: tau must lie in [0, N_iter)");
  return lambda_max * static_cast<double>(tau) / static_cast<double>(n_iter);
}

void AugmentedLagrangian::end_round(double h) {
  if (h > 0.25 * h_prev_) rho_ = std::min(rho_ * 10.0, rho_max_);
  alpha_ += rho_ * h;
  h_prev_ = h;
}

DagPenaltyController::DagPenaltyController(const TrainConfig& config)
    : mode_(config.penalty_mode),
      n_iter_(config.n_iter),
      lambda_max_(config.lambda_dag_max),
      round_len_(std::max<std::size_t>(1, config.n_iter / config.al_rounds)),
      al_(config.al_rho_init, config.al_rho_max) {}

double DagPenaltyController::multiplier(std::size_t tau, double h) const {
  if (mode_ == PenaltyMode::kAugmentedLagrangian) return al_.slope(h);
  return linear_dag_multiplier(tau, n_iter_, lambda_max_);
}

double DagPenaltyController::value(std::size_t tau, double h) const {
  if (mode_ == PenaltyMode::kAugmentedLagrangian) return al_.value(h);
  return linear_dag_multiplier(tau, n_iter_, lambda_max_) * h;
}

bool DagPenaltyController::round_ends(std::size_t tau) const {
  return mode_ == PenaltyMode::kAugmentedLagrangian && (tau + 1) % round_len_ == 0;
}

std::vector<std::size_t> bootstrap_batch(std::size_t n, std::size_t B, std::uint64_t seed,
                                         std::uint64_t round) {
  require(n >= 1 && B >= 1, "bootstrap_batch: n and B must be positive");
  Engine rng = make_engine(derive_seed(seed, {static_cast<std::uint64_t>(Stream::kBatch), round}));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(B);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

}  // namespace ddcd
