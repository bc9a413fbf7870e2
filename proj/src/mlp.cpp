#include "ddcd/mlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>

#include "ddcd/error.hpp"
#include "ddcd/rng.hpp"

namespace ddcd {

namespace {

std::atomic<std::uint64_t> next_mlp_id{1};

// Fixed chunking keeps the gradient reduction order independent of the
// number of OpenMP threads.
constexpr std::size_t kChunks = 32;

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kIdentity:
      return z;
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
  }
  return z;
}

// Derivative expressed through the activation's output y.
double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kTanh:
      return 1.0 - y * y;
    case Activation::kRelu:
      return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// Forward for one scalar; writes each layer's input and output to `slot`.
double forward_one(const ScalarMLP& mlp, double x, double* slot) {
  const auto& w = mlp.widths();
  const auto p = mlp.parameters();
  // Two small buffers; widest layer bounds their size.
  double in_buf[256];
  double out_buf[256];
  in_buf[0] = x;
  std::size_t pos = 0;
  for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
    const std::size_t nin = w[l];
    const std::size_t nout = w[l + 1];
    const double* W = p.data() + mlp.weight_offset(l);
    const double* b = p.data() + mlp.bias_offset(l);
    if (slot) std::copy_n(in_buf, nin, slot + pos);
    pos += nin;
    for (std::size_t o = 0; o < nout; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < nin; ++i) z += W[o * nin + i] * in_buf[i];
      out_buf[o] = activate(mlp.activations()[l], z);
      if (slot) slot[pos + o] = out_buf[o];
    }
    pos += nout;
    std::copy_n(out_buf, nout, in_buf);
  }
  return in_buf[0];
}

// Backward for one scalar; accumulates into `grad` and returns d/dx.
double backward_one(const ScalarMLP& mlp, double upstream, const double* slot, double* grad) {
  const auto& w = mlp.widths();
  const auto p = mlp.parameters();
  const std::size_t L = mlp.num_layers();

  // Slot offsets of each layer's input block.
  std::size_t starts[64];
  std::size_t pos = 0;
  for (std::size_t l = 0; l < L; ++l) {
    starts[l] = pos;
    pos += w[l] + w[l + 1];
  }

  double delta[256];
  double prev[256];
  delta[0] = upstream;  // d/d(output), output width is 1
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t nin = w[l];
    const std::size_t nout = w[l + 1];
    const double* input = slot + starts[l];
    const double* output = input + nin;
    const double* W = p.data() + mlp.weight_offset(l);
    double* gW = grad + mlp.weight_offset(l);
    double* gb = grad + mlp.bias_offset(l);
    for (std::size_t o = 0; o < nout; ++o) delta[o] *= activate_grad(mlp.activations()[l], output[o]);
    std::fill_n(prev, nin, 0.0);
    for (std::size_t o = 0; o < nout; ++o) {
      gb[o] += delta[o];
      for (std::size_t i = 0; i < nin; ++i) {
        gW[o * nin + i] += delta[o] * input[i];
        prev[i] += W[o * nin + i] * delta[o];
      }
    }
    std::copy_n(prev, nin, delta);
  }
  return delta[0];
}

void check_cache(const ScalarMLP& mlp, const Matrix& upstream, const MLPCache& cache) {
  require(cache.mlp_id == mlp.id() && cache.mlp_version == mlp.version(),
          "mlp_backward: cache is stale or belongs to another network");
  require(upstream.rows() == cache.rows && upstream.cols() == cache.cols,
          "mlp_backward: upstream gradient shape differs from the forward input");
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "identity";
}

ScalarMLP::ScalarMLP(std::vector<std::size_t> widths, std::vector<Activation> activations,
                     std::uint64_t seed)
    : widths_(std::move(widths)), activations_(std::move(activations)), id_(next_mlp_id++) {
  require(widths_.size() >= 2 && widths_.front() == 1 && widths_.back() == 1,
          "ScalarMLP: widths must start and end with 1");
  require(activations_.size() == widths_.size() - 1, "ScalarMLP: one activation per layer");
  require(activations_.size() <= 64, "ScalarMLP: too many layers");
  for (std::size_t wdt : widths_) require(wdt >= 1 && wdt <= 256, "ScalarMLP: layer width out of range");

  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    offsets_.push_back(total);
    total += widths_[l] * widths_[l + 1] + widths_[l + 1];
    cache_stride_ += widths_[l] + widths_[l + 1];
  }
  params_.assign(total, 0.0);

  Engine rng = make_engine(seed);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(widths_[l] + widths_[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < widths_[l] * widths_[l + 1]; ++i) params_[offsets_[l] + i] = u(rng);
  }
}

ScalarMLP::ScalarMLP(const ScalarMLP& other)
    : widths_(other.widths_),
      activations_(other.activations_),
      offsets_(other.offsets_),
      params_(other.params_),
      cache_stride_(other.cache_stride_),
      id_(next_mlp_id++) {}

ScalarMLP& ScalarMLP::operator=(const ScalarMLP& other) {
  if (this != &other) {
    widths_ = other.widths_;
    activations_ = other.activations_;
    offsets_ = other.offsets_;
    params_ = other.params_;
    cache_stride_ = other.cache_stride_;
    id_ = next_mlp_id++;
    version_ = 0;
  }
  return *this;
}

ScalarMLP ScalarMLP::one_hidden(std::size_t hidden, Activation output, std::uint64_t seed) {
  return ScalarMLP({1, hidden, 1}, {Activation::kTanh, output}, seed);
}

double ScalarMLP::weight(std::size_t layer, std::size_t out, std::size_t in) const {
  return params_.at(weight_offset(layer) + out * widths_[layer] + in);
}

double ScalarMLP::bias(std::size_t layer, std::size_t out) const {
  return params_.at(bias_offset(layer) + out);
}

void ScalarMLP::set_weight(std::size_t layer, std::size_t out, std::size_t in, double v) {
  params_.at(weight_offset(layer) + out * widths_[layer] + in) = v;
  ++version_;
}

void ScalarMLP::set_bias(std::size_t layer, std::size_t out, double v) {
  params_.at(bias_offset(layer) + out) = v;
  ++version_;
}

double ScalarMLP::eval(double x) const { return forward_one(*this, x, nullptr); }

Matrix mlp_forward(const ScalarMLP& mlp, const Matrix& U, MLPCache* cache) {
  require(!mlp.widths().empty(), "mlp_forward: network is empty");
  Matrix out(U.rows(), U.cols());
  const std::size_t stride = mlp.cache_stride();
  if (cache) {
    cache->mlp_id = mlp.id();
    cache->mlp_version = mlp.version();
    cache->rows = U.rows();
    cache->cols = U.cols();
    cache->values.assign(U.size() * stride, 0.0);
  }
  const std::int64_t n = static_cast<std::int64_t>(U.size());
  double* slots = cache ? cache->values.data() : nullptr;
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::int64_t e = 0; e < n; ++e) {
    out.data()[e] = forward_one(mlp, U.data()[e], slots ? slots + e * stride : nullptr);
  }
  return out;
}

MLPGrads mlp_backward(const ScalarMLP& mlp, const Matrix& upstream, const MLPCache& cache) {
  check_cache(mlp, upstream, cache);
  const std::size_t n = upstream.size();
  const std::size_t P = mlp.parameter_count();
  const std::size_t stride = mlp.cache_stride();
  MLPGrads g;
  g.input = Matrix(upstream.rows(), upstream.cols());
  std::vector<double> partial(kChunks * P, 0.0);

#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(kChunks); ++c) {
    const std::size_t lo = n * static_cast<std::size_t>(c) / kChunks;
    const std::size_t hi = n * static_cast<std::size_t>(c + 1) / kChunks;
    double* acc = partial.data() + static_cast<std::size_t>(c) * P;
    for (std::size_t e = lo; e < hi; ++e) {
      g.input.data()[e] =
          backward_one(mlp, upstream.data()[e], cache.values.data() + e * stride, acc);
    }
  }
  g.params.assign(P, 0.0);
  for (std::size_t c = 0; c < kChunks; ++c)
    for (std::size_t i = 0; i < P; ++i) g.params[i] += partial[c * P + i];
  return g;
}

namespace serial {

MLPGrads mlp_backward(const ScalarMLP& mlp, const Matrix& upstream, const MLPCache& cache) {
  check_cache(mlp, upstream, cache);
  MLPGrads g;
  g.input = Matrix(upstream.rows(), upstream.cols());
  g.params.assign(mlp.parameter_count(), 0.0);
  for (std::size_t e = 0; e < upstream.size(); ++e)
    g.input.data()[e] = backward_one(mlp, upstream.data()[e],
                                     cache.values.data() + e * mlp.cache_stride(), g.params.data());
  return g;
}

}  // namespace serial

}  // namespace ddcd
