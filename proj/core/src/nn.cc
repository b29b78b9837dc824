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

#include "inhernet/nn.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "inhernet/errors.h"

namespace inhernet {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense:
      return "dense";
    case LayerKind::kRelu:
      return "relu";
    case LayerKind::kConv2D:
      return "conv2d";
    case LayerKind::kInherNet:
      return "inhernet";
    case LayerKind::kInherConv:
      return "inherconv";
    case LayerKind::kInverse:
      return "inverse";
    case LayerKind::kSymmetric:
      return "symmetric";
  }
  return "unknown";
}

// DenseLayer ----------------------------------------------------------------

DenseLayer::DenseLayer(std::size_t inputs, std::size_t outputs,
                       bool with_bias)
    : weight_(inputs, outputs),
      has_bias_(with_bias),
      bias_(with_bias ? outputs : 0, 0.0) {}

DenseLayer::DenseLayer(Matrix weight, std::optional<std::vector<double>> bias)
    : weight_(std::move(weight)), has_bias_(bias.has_value()) {
  if (has_bias_) {
    if (bias->size() != weight_.cols()) {
      throw ShapeError("dense bias length " + std::to_string(bias->size()) +
                       " does not match weight " + weight_.shape_string());
    }
    bias_ = std::move(*bias);
  }
}

DenseLayer DenseLayer::kaiming_uniform(std::size_t inputs,
                                       std::size_t outputs, bool with_bias,
                                       CounterRng& rng) {
  DenseLayer layer(inputs, outputs, with_bias);
  const double bound = std::sqrt(6.0 / static_cast<double>(inputs));
  for (double& w : layer.weight_.data()) w = rng.uniform(-bound, bound);
  return layer;
}

Matrix DenseLayer::apply(const Matrix& x) const {
  Matrix y = matmul(x, weight_);
  if (has_bias_) {
    for (std::size_t i = 0; i < y.rows(); ++i) {
      auto row = y.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias_[j];
    }
  }
  return y;
}

Matrix DenseLayer::forward(const Matrix& x) {
  cached_input_ = x;
  return apply(x);
}

Matrix DenseLayer::backward(const Matrix& grad_output) {
  if (!cached_input_) throw StateError("dense backward before forward");
  weight_grad_ = matmul_tn(*cached_input_, grad_output);
  if (has_bias_) {
    bias_grad_.assign(weight_.cols(), 0.0);
    for (std::size_t i = 0; i < grad_output.rows(); ++i) {
      auto row = grad_output.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) bias_grad_[j] += row[j];
    }
  }
  return matmul_nt(grad_output, weight_);
}

std::vector<ParamRef> DenseLayer::params() {
  if (weight_grad_.size() != weight_.size()) {
    weight_grad_ = Matrix(weight_.rows(), weight_.cols());
  }
  std::vector<ParamRef> out{{"weight", weight_.data(), weight_grad_.data()}};
  if (has_bias_) {
    bias_grad_.resize(bias_.size(), 0.0);
    out.push_back({"bias", bias_, bias_grad_});
  }
  return out;
}

std::vector<TensorRef> DenseLayer::tensors() {
  std::vector<TensorRef> out{
      {"weight", {weight_.rows(), weight_.cols()}, weight_.data()}};
  if (has_bias_) out.push_back({"bias", {bias_.size()}, bias_});
  return out;
}

std::size_t DenseLayer::parameter_count() const {
  return weight_.size() + (has_bias_ ? bias_.size() : 0);
}

std::unique_ptr<Layer> DenseLayer::clone() const {
  auto copy = std::make_unique<DenseLayer>(*this);
  copy->cached_input_.reset();
  return copy;
}

// ReluLayer -----------------------------------------------------------------

Matrix ReluLayer::apply(const Matrix& x) const {
  Matrix y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix ReluLayer::forward(const Matrix& x) {
  cached_input_ = x;
  return apply(x);
}

Matrix ReluLayer::backward(const Matrix& grad_output) {
  if (!cached_input_) throw StateError("relu backward before forward");
  if (grad_output.rows() != cached_input_->rows() ||
      grad_output.cols() != cached_input_->cols()) {
    throw ShapeError("relu backward gradient " + grad_output.shape_string() +
                     " vs cached " + cached_input_->shape_string());
  }
  Matrix g = grad_output;
  const auto in = cached_input_->data();
  auto out = g.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(in[i] > 0.0)) out[i] = 0.0;
  }
  return g;
}

std::unique_ptr<Layer> ReluLayer::clone() const {
  return std::make_unique<ReluLayer>(width_);
}

// Network -------------------------------------------------------------------

Network::Network(const Network& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() && layer->input_width() != output_width()) {
    throw ShapeError("layer " + std::to_string(layers_.size()) + " (" +
                     std::string(to_string(layer->kind())) + ") expects width " +
                     std::to_string(layer->input_width()) +
                     " but the network produces " +
                     std::to_string(output_width()));
  }
  layers_.push_back(std::move(layer));
}

void Network::replace(std::size_t i, std::unique_ptr<Layer> layer) {
  Layer& old = *layers_.at(i);
  if (layer->input_width() != old.input_width() ||
      layer->output_width() != old.output_width()) {
    throw ShapeError("replacement for layer " + std::to_string(i) +
                     " changes widths " + std::to_string(old.input_width()) +
                     "->" + std::to_string(old.output_width()) + " to " +
                     std::to_string(layer->input_width()) + "->" +
                     std::to_string(layer->output_width()));
  }
  layers_[i] = std::move(layer);
}

std::size_t Network::input_width() const {
  return layers_.empty() ? 0 : layers_.front()->input_width();
}

std::size_t Network::output_width() const {
  return layers_.empty() ? 0 : layers_.back()->output_width();
}

namespace {

void check_width(const Layer& layer, std::size_t index, const Matrix& x) {
  if (x.cols() != layer.input_width()) {
    throw ShapeError("layer " + std::to_string(index) + " (" +
                     std::string(to_string(layer.kind())) + ") expects width " +
                     std::to_string(layer.input_width()) + ", got " +
                     x.shape_string());
  }
}

}  // namespace

Matrix Network::forward(const Matrix& x) {
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_width(*layers_[i], i, h);
    h = layers_[i]->forward(h);
  }
  return h;
}

Matrix Network::apply(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_width(*layers_[i], i, h);
    h = layers_[i]->apply(h);
  }
  return h;
}

Matrix Network::backward(const Matrix& loss_grad) {
  Matrix g = loss_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g);
  }
  return g;
}

std::vector<ParamRef> Network::params() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : layers_[i]->params()) {
      p.name = "layer" + std::to_string(i) + "." + p.name;
      out.push_back(std::move(p));
    }
  }
  return out;
}

GradientSet Network::gradients() {
  GradientSet out;
  for (const auto& p : params()) out.emplace_back(p.grad.begin(), p.grad.end());
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->parameter_count();
  return n;
}

Network make_mlp(std::span<const std::size_t> widths, CounterRng& rng,
                 bool with_bias) {
  if (widths.size() < 2) throw ShapeError("an MLP needs at least two widths");
  Network net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    net.add(DenseLayer::kaiming_uniform(widths[i], widths[i + 1], with_bias,
                                        rng));
    if (i + 2 < widths.size()) net.add(ReluLayer(widths[i + 1]));
  }
  return net;
}

// Losses --------------------------------------------------------------------

LossValue mse_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw ShapeError("mse shape mismatch: output " + output.shape_string() +
                     " vs target " + target.shape_string());
  }
  LossValue lv;
  lv.grad = Matrix(output.rows(), output.cols());
  if (output.empty()) return lv;
  const double count = static_cast<double>(output.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = output.data()[i] - target.data()[i];
    sum += d * d;
    lv.grad.data()[i] = 2.0 * d / count;
  }
  lv.value = sum / count;
  return lv;
}

LossValue cross_entropy(const Matrix& logits,
                        std::span<const std::size_t> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + logits.shape_string());
  }
  LossValue lv;
  lv.grad = Matrix(logits.rows(), logits.cols());
  if (logits.rows() == 0) return lv;
  const double batch = static_cast<double>(logits.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    if (labels[i] >= logits.cols()) {
      throw RangeError("label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(logits.cols()) + ")");
    }
    const auto row = logits.row(i);
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - peak);
    const double log_z = peak + std::log(z);
    total += log_z - row[labels[i]];
    auto g = lv.grad.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      g[j] = std::exp(row[j] - log_z) / batch;
    }
    g[labels[i]] -= 1.0 / batch;
  }
  lv.value = total / batch;
  return lv;
}

GradientSet finite_difference_grad(Network& net, const LossFn& loss,
                                   const Matrix& x, double step) {
  if (!(step > 0.0)) throw RangeError("finite-difference step must be > 0");
  GradientSet out;
  for (auto& p : net.params()) {
    std::vector<double> g(p.value.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + step;
      const double up = loss(net.apply(x)).value;
      p.value[i] = saved - step;
      const double down = loss(net.apply(x)).value;
      p.value[i] = saved;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_relative_deviation(const GradientSet& candidate,
                              const GradientSet& reference, double floor) {
  if (candidate.size() != reference.size()) {
    throw ShapeError("gradient sets differ in block count");
  }
  double worst = 0.0;
  for (std::size_t b = 0; b < candidate.size(); ++b) {
    if (candidate[b].size() != reference[b].size()) {
      throw ShapeError("gradient block " + std::to_string(b) +
                       " differs in length");
    }
    for (std::size_t i = 0; i < candidate[b].size(); ++i) {
      const double a = candidate[b][i];
      const double r = reference[b][i];
      if (std::abs(r) <= floor) continue;
      worst = std::max(worst,
                       std::abs(a - r) / std::max(std::abs(a), std::abs(r)));
    }
  }
  return worst;
}

double max_abs_deviation(const GradientSet& a, const GradientSet& b) {
  if (a.size() != b.size()) {
    throw ShapeError("gradient sets differ in block count");
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) {
      throw ShapeError("gradient block " + std::to_string(k) +
                       " differs in length");
    }
    for (std::size_t i = 0; i < a[k].size(); ++i) {
      worst = std::max(worst, std::abs(a[k][i] - b[k][i]));
    }
  }
  return worst;
}

}  // namespace inhernet
