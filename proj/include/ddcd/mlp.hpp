#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ddcd/matrix.hpp"

namespace ddcd {

enum class Activation { kIdentity, kTanh, kRelu };

std::string_view to_string(Activation a);

// A scalar -> scalar multilayer perceptron applied independently to every
// entry of a matrix; all entries share one parameter set.
//
// Parameters live in one flat buffer, layer by layer: the out x in weight
// block (row-major) followed by the out biases.
class ScalarMLP {
 public:
  ScalarMLP() = default;
  // widths = {1, h1, ..., 1}; one activation per layer (widths.size() - 1).
  // Weights are Glorot-uniform from `seed`, biases zero.
  ScalarMLP(std::vector<std::size_t> widths, std::vector<Activation> activations,
            std::uint64_t seed);

  // Copies are distinct networks and never accept each other's caches.
  ScalarMLP(const ScalarMLP& other);
  ScalarMLP& operator=(const ScalarMLP& other);
  ScalarMLP(ScalarMLP&&) noexcept = default;
  ScalarMLP& operator=(ScalarMLP&&) noexcept = default;

  // 1 -> hidden -> 1 with a tanh hidden layer and the given output activation.
  static ScalarMLP one_hidden(std::size_t hidden, Activation output, std::uint64_t seed);

  const std::vector<std::size_t>& widths() const { return widths_; }
  const std::vector<Activation>& activations() const { return activations_; }
  std::size_t num_layers() const { return activations_.size(); }
  std::size_t parameter_count() const { return params_.size(); }

  std::span<const double> parameters() const { return params_; }
  // Any write access invalidates caches produced by earlier forward passes.
  std::span<double> mutable_parameters() {
    ++version_;
    return params_;
  }

  std::uint64_t id() const { return id_; }
  std::uint64_t version() const { return version_; }

  double weight(std::size_t layer, std::size_t out, std::size_t in) const;
  double bias(std::size_t layer, std::size_t out) const;
  void set_weight(std::size_t layer, std::size_t out, std::size_t in, double v);
  void set_bias(std::size_t layer, std::size_t out, double v);

  double eval(double x) const;

  // Offsets into the flat buffer.
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const {
    return offsets_[layer] + widths_[layer + 1] * widths_[layer];
  }

  // Per-entry cache stride: every layer's input and output.
  std::size_t cache_stride() const { return cache_stride_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Activation> activations_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  std::size_t cache_stride_ = 0;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
};

// Everything mlp_backward needs from the forward pass.
struct MLPCache {
  std::uint64_t mlp_id = 0;
  std::uint64_t mlp_version = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // rows * cols * cache_stride
};

struct MLPGrads {
  std::vector<double> params;  // same layout as ScalarMLP::parameters()
  Matrix input;
};

// Element-wise forward pass. `cache` may be null when no backward follows.
Matrix mlp_forward(const ScalarMLP& mlp, const Matrix& U, MLPCache* cache = nullptr);

// Reverse-mode gradients for `upstream` = dL/d(output). Throws ValidationError
// when the cache came from another network or from stale parameters.
MLPGrads mlp_backward(const ScalarMLP& mlp, const Matrix& upstream, const MLPCache& cache);

namespace serial {
// Single-threaded reference accumulating entries in storage order.
MLPGrads mlp_backward(const ScalarMLP& mlp, const Matrix& upstream, const MLPCache& cache);
}  // namespace serial

}  // namespace ddcd
