#include "ddcd/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ddcd/error.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kLinear:
      return "linear";
    case ScheduleKind::kCosine:
      return "cosine";
    case ScheduleKind::kPower:
      return "power";
  }
  return "linear";
}

ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "cosine") return ScheduleKind::kCosine;
  if (s == "power") return ScheduleKind::kPower;
  throw ValidationError("unknown noise schedule '" + std::string(s) + "'");
}

namespace {

double cosine_f(double t, double T) {
  const double c = std::cos((t / T + kCosineOffset) / (1.0 + kCosineOffset) * std::numbers::pi / 2.0);
  return c * c;
}

}  // namespace

NoiseSchedule::NoiseSchedule(const ScheduleSpec& spec) : spec_(spec) {
  require(spec.T >= 2, "noise schedule: T must be at least 2");
  require(spec.beta_start > 0.0 && spec.beta_start <= spec.beta_end && spec.beta_end < 1.0,
          "noise schedule: require 0 < beta_start <= beta_end < 1");
  if (spec.kind == ScheduleKind::kPower)
    require(spec.power_exponent > 0.0, "noise schedule: power exponent must be positive");

  const auto T = static_cast<std::size_t>(spec.T);
  betas_.resize(T);
  const double span = spec.beta_end - spec.beta_start;
  for (std::size_t i = 0; i < T; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(T - 1);
    switch (spec.kind) {
      case ScheduleKind::kLinear:
        betas_[i] = spec.beta_start + frac * span;
        break;
      case ScheduleKind::kPower:
        betas_[i] = spec.beta_start + std::pow(frac, spec.power_exponent) * span;
        break;
      case ScheduleKind::kCosine: {
        const double Td = static_cast<double>(T);
        const double t = static_cast<double>(i + 1);
        const double ratio = cosine_f(t, Td) / cosine_f(t - 1.0, Td);
        betas_[i] = std::clamp(1.0 - ratio, spec.beta_start, 0.999);
        break;
      }
    }
  }

  alpha_bars_.resize(T);
  double prod = 1.0;
  for (std::size_t i = 0; i < T; ++i) {
    prod *= 1.0 - betas_[i];
    alpha_bars_[i] = prod;
  }
}

NoiseSchedule build_schedule(const ScheduleSpec& spec) { return NoiseSchedule(spec); }

std::vector<int> sample_timesteps(std::size_t b, int T, std::uint64_t seed) {
  require(b >= 1, "sample_timesteps: batch size must be positive");
  require(T >= 1, "sample_timesteps: T must be positive");
  Engine rng = make_engine(seed);
  std::uniform_int_distribution<int> pick(1, T);
  std::vector<int> t(b);
  for (int& v : t) v = pick(rng);
  return t;
}

Matrix standard_normal(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(rows, cols);
  for (double& v : z.values()) v = normal(rng);
  return z;
}

DiffusionBatch perturb_with_alpha_bars(const Matrix& X0, std::span<const double> alpha_bars,
                                       const Matrix& Z) {
  require(alpha_bars.size() == X0.rows(), "perturb: one alpha_bar per row required");
  require(Z.rows() == X0.rows() && Z.cols() == X0.cols(), "perturb: noise shape mismatch");
  DiffusionBatch batch;
  batch.Z = Z;
  batch.sqrt_abar.resize(X0.rows());
  batch.sqrt_one_minus_abar.resize(X0.rows());
  batch.X_t = Matrix(X0.rows(), X0.cols());
  for (std::size_t r = 0; r < X0.rows(); ++r) {
    const double a = alpha_bars[r];
    require(a >= 0.0 && a <= 1.0, "perturb: alpha_bar outside [0, 1]");
    const double s = std::sqrt(a);
    const double q = std::sqrt(1.0 - a);
    batch.sqrt_abar[r] = s;
    batch.sqrt_one_minus_abar[r] = q;
    for (std::size_t j = 0; j < X0.cols(); ++j) batch.X_t(r, j) = s * X0(r, j) + q * Z(r, j);
  }
  return batch;
}

DiffusionBatch perturb(const Matrix& X0, const NoiseSchedule& schedule, std::span<const int> t,
                       std::uint64_t seed) {
  require(t.size() == X0.rows(), "perturb: one timestep per row required");
  std::vector<double> abar(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    require(t[r] >= 1 && t[r] <= schedule.T(), "perturb: timestep out of range");
    abar[r] = schedule.alpha_bar(t[r]);
  }
  DiffusionBatch batch = perturb_with_alpha_bars(X0, abar, standard_normal(X0.rows(), X0.cols(), seed));
  batch.t.assign(t.begin(), t.end());
  return batch;
}

}  // namespace ddcd
