#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "ddcd/acyclicity.hpp"
#include "ddcd/diffusion.hpp"

namespace ddcd {

enum class PenaltyMode { kLinear, kAugmentedLagrangian };
enum class ModelKind { kLinear, kNonlinear, kSmooth };

std::string_view to_string(PenaltyMode m);
std::string_view to_string(ModelKind m);
PenaltyMode parse_penalty_mode(std::string_view s);
ModelKind parse_model_kind(std::string_view s);

struct TrainConfig {
  std::size_t n_iter = 5000;
  std::size_t batch_size = 256;
  double learning_rate = 1e-2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double lambda1 = 1e-3;
  double lambda2 = 1e-3;
  double lambda_dag_max = 1000.0;
  PenaltyMode penalty_mode = PenaltyMode::kLinear;
  // Augmented-Lagrangian comparison mode.
  double al_rho_init = 1.0;
  double al_rho_max = 1e16;
  std::size_t al_rounds = 10;
  KHopSchedule khop;
  ScheduleSpec noise;
  double threshold = 0.3;
  std::uint64_t seed = 0;
  std::size_t log_every = 100;
  // Neural models.
  std::size_t hidden_width = 16;
  double denoise_weight = 1.0;
  double normalizer_gain = 1.0;

  // Model-specific defaults. Nonlinear: 1000 iterations, lr 3e-2,
  // lambda1 1e-2, lambda_dag_max 100, threshold 0.1. Smooth: threshold 0.1.
  static TrainConfig defaults_for(ModelKind model);
};

void validate(const TrainConfig& c);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moments for one parameter tensor. Zero-initialized; bias correction uses
// the number of steps actually taken.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  std::size_t size() const { return m_.size(); }
  std::size_t steps() const { return steps_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

  void step(std::span<double> params, std::span<const double> grads, double lr,
            const AdamOptions& opt = {});


 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t steps_ = 0;
};

inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
                      double lr, const AdamOptions& opt = {}) {
  state.step(params, grads, lr, opt);
}

// lambda_dag(tau) = lambda_max * tau / N_iter.
double linear_dag_multiplier(std::size_t tau, std::size_t n_iter, double lambda_max);

// Penalty alpha h + rho/2 h^2 with NOTEARS-style outer updates.
class AugmentedLagrangian {
 public:
  AugmentedLagrangian() = default;
  AugmentedLagrangian(double rho_init, double rho_max) : rho_(rho_init), rho_max_(rho_max) {}

  double alpha() const { return alpha_; }
  double rho() const { return rho_; }

  double value(double h) const { return alpha_ * h + 0.5 * rho_ * h * h; }
  // d(penalty)/dh; multiplies dh/dW.
  double slope(double h) const { return alpha_ + rho_ * h; }

  // Called with the constraint value at the end of each outer round:
  // rho grows tenfold (capped) when h did not shrink below 0.25 of the
  // previous round, then alpha += rho * h.
  void end_round(double h);

 private:
  double alpha_ = 0.0;
  double rho_ = 1.0;
  double rho_max_ = 1e16;
  double h_prev_ = std::numeric_limits<double>::infinity();
};

// Chooses the DAG multiplier per iteration for either penalty mode and runs
// the augmented-Lagrangian outer updates every N_iter / al_rounds steps.
class DagPenaltyController {
 public:
  explicit DagPenaltyController(const TrainConfig& config);

  // d(penalty)/dh at iteration tau for the current constraint value.
  double multiplier(std::size_t tau, double h) const;
  double value(std::size_t tau, double h) const;
  // True when `tau` closes an outer round; the caller then reports h.
  bool round_ends(std::size_t tau) const;
  void end_round(double h) { al_.end_round(h); }
  const AugmentedLagrangian& augmented_lagrangian() const { return al_; }

 private:
  PenaltyMode mode_;
  std::size_t n_iter_;
  double lambda_max_;
  std::size_t round_len_;
  AugmentedLagrangian al_;
};

// B row indices drawn uniformly with replacement from [0, n); a pure
// function of (seed, round).
std::vector<std::size_t> bootstrap_batch(std::size_t n, std::size_t B, std::uint64_t seed,
                                         std::uint64_t round);

}  // namespace ddcd
