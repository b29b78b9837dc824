// Copyright 2026 The InherNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INHERNET_NN_H_
#define INHERNET_NN_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inhernet/linalg.h"
#include "inhernet/rng.h"

namespace inhernet {

enum class LayerKind {
  kDense,
  kRelu,
  kConv2D,
  kInherNet,
  kInherConv,
  kInverse,
  kSymmetric,
};

std::string_view to_string(LayerKind kind);

// A trainable parameter block: its values and the gradient written by the
// most recent backward pass.
struct ParamRef {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// Every persistent tensor of a layer (trainable or frozen), for
// serialization.
struct TensorRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<double> value;
};

// One gradient vector per ParamRef, in params() order.
using GradientSet = std::vector<std::vector<double>>;

// Batches are row-major with one sample per row; every layer maps a
// (batch x input_width) matrix to (batch x output_width).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual std::size_t input_width() const = 0;
  virtual std::size_t output_width() const = 0;

  // Evaluation without caching; safe to call concurrently.
  virtual Matrix apply(const Matrix& x) const = 0;
  // Evaluation that caches what backward() needs.
  virtual Matrix forward(const Matrix& x) = 0;
  // Overwrites parameter gradients for the cached batch and returns the
  // gradient with respect to the layer input. StateError without forward().
  virtual Matrix backward(const Matrix& grad_output) = 0;

  virtual std::vector<ParamRef> params() = 0;
  virtual std::vector<TensorRef> tensors() = 0;
  virtual std::size_t parameter_count() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
};

// Y = X * W + b, with W of shape (inputs x outputs).
class DenseLayer final : public Layer {
 public:
  DenseLayer(std::size_t inputs, std::size_t outputs, bool with_bias = true);
  DenseLayer(Matrix weight, std::optional<std::vector<double>> bias);

  // Kaiming-uniform weights (bound sqrt(6 / inputs)) and zero bias.
  static DenseLayer kaiming_uniform(std::size_t inputs, std::size_t outputs,
                                    bool with_bias, CounterRng& rng);

  const Matrix& weight() const { return weight_; }
  Matrix& weight() { return weight_; }
  bool has_bias() const { return has_bias_; }
  const std::vector<double>& bias() const { return bias_; }
  std::vector<double>& bias() { return bias_; }

  LayerKind kind() const override { return LayerKind::kDense; }
  std::size_t input_width() const override { return weight_.rows(); }
  std::size_t output_width() const override { return weight_.cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override;
  std::vector<TensorRef> tensors() override;
  std::size_t parameter_count() const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  Matrix weight_;
  bool has_bias_;
  std::vector<double> bias_;
  Matrix weight_grad_;
  std::vector<double> bias_grad_;
  std::optional<Matrix> cached_input_;
};

// Elementwise max(0, x); the subgradient at 0 is 0.
class ReluLayer final : public Layer {
 public:
  explicit ReluLayer(std::size_t width) : width_(width) {}

  LayerKind kind() const override { return LayerKind::kRelu; }
  std::size_t input_width() const override { return width_; }
  std::size_t output_width() const override { return width_; }
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override { return {}; }
  std::vector<TensorRef> tensors() override { return {}; }
  std::size_t parameter_count() const override { return 0; }
  std::unique_ptr<Layer> clone() const override;

 private:
  std::size_t width_;
  std::optional<Matrix> cached_input_;
};

// An ordered stack of layers whose widths compose.
class Network {
 public:
  Network() = default;
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  // Throws ShapeError if the layer's input width does not match the current
  // output width.
  void add(std::unique_ptr<Layer> layer);
  template <typename L>
  L& add(L layer) {
    auto owned = std::make_unique<L>(std::move(layer));
    L& ref = *owned;
    add(std::unique_ptr<Layer>(std::move(owned)));
    return ref;
  }
  // Replaces layer i; the widths must match the old layer.
  void replace(std::size_t i, std::unique_ptr<Layer> layer);

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  std::size_t input_width() const;
  std::size_t output_width() const;

  // Throws ShapeError naming the layer index on a width mismatch.
  Matrix forward(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  Matrix backward(const Matrix& loss_grad);

  std::vector<ParamRef> params();
  GradientSet gradients();
  std::size_t parameter_count() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Fully connected ReLU network: widths = {in, h1, ..., out}.
Network make_mlp(std::span<const std::size_t> widths, CounterRng& rng,
                 bool with_bias = true);

struct LossValue {
  double value = 0.0;
  Matrix grad;  // d value / d output, same shape as the output
};

using LossFn = std::function<LossValue(const Matrix& output)>;

// Mean of squared differences over all batch x width entries.
LossValue mse_loss(const Matrix& output, const Matrix& target);
// Mean over the batch of -log softmax(logits)[label]; gradient is
// (softmax - one_hot) / batch. Throws RangeError for a bad label.
LossValue cross_entropy(const Matrix& logits,
                        std::span<const std::size_t> labels);

// Central-difference estimate of d loss / d parameter for every trainable
// scalar of `net`, evaluated at input x.
GradientSet finite_difference_grad(Network& net, const LossFn& loss,
                                   const Matrix& x, double step);

// Largest |a - b| / max(|a|, |b|) over entries where |reference| > floor.
double max_relative_deviation(const GradientSet& candidate,
                              const GradientSet& reference,
                              double floor = 1e-6);
double max_abs_deviation(const GradientSet& a, const GradientSet& b);

}  // namespace inhernet

#endif  // INHERNET_NN_H_
