#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ddcd/matrix.hpp"

// Forward diffusion: beta schedules, cumulative signal retention and the
// one-shot perturbation x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) z.
namespace ddcd {

enum class ScheduleKind { kLinear, kCosine, kPower };

std::string_view to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(std::string_view s);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kLinear;
  int T = 5000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  double power_exponent = 2.0;
};

// Timesteps are 1-indexed: beta(t) and alpha_bar(t) for t in [1, T].
// alpha_bar(0) == 1 is implicit and never stored.
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(const ScheduleSpec& spec);

  const ScheduleSpec& spec() const { return spec_; }
  int T() const { return spec_.T; }
  double beta(int t) const { return betas_.at(static_cast<std::size_t>(t - 1)); }
  double alpha_bar(int t) const { return alpha_bars_.at(static_cast<std::size_t>(t - 1)); }
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

 private:
  ScheduleSpec spec_;
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
};

// Offset of the cosine schedule (improved-DDPM convention).
inline constexpr double kCosineOffset = 0.008;

NoiseSchedule build_schedule(const ScheduleSpec& spec);

// i.i.d. uniform on {1, ..., T}.
std::vector<int> sample_timesteps(std::size_t b, int T, std::uint64_t seed);

struct DiffusionBatch {
  Matrix X_t;
  std::vector<int> t;
  Matrix Z;
  std::vector<double> sqrt_abar;
  std::vector<double> sqrt_one_minus_abar;

  std::size_t rows() const { return X_t.rows(); }
  std::size_t cols() const { return X_t.cols(); }
};

// Fresh standard-normal Z from `seed`; X_t = diag(sqrt abar) X0 + diag(sqrt(1-abar)) Z.
DiffusionBatch perturb(const Matrix& X0, const NoiseSchedule& schedule, std::span<const int> t,
                       std::uint64_t seed);

// Same perturbation with explicit per-row alpha_bar values in [0, 1] and a
// caller-supplied Z. Timesteps are left empty.
DiffusionBatch perturb_with_alpha_bars(const Matrix& X0, std::span<const double> alpha_bars,
                                       const Matrix& Z);

// Samples b x d standard-normal noise.
Matrix standard_normal(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace ddcd
