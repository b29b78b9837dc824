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

#include <algorithm>
#include <cmath>
#include <utility>

#include "inhernet/errors.h"
#include "inhernet/inherit.h"

namespace inhernet {
namespace {

Matrix head_matrix(const Tensor4D& head) {
  const auto& d = head.dims();
  return Matrix(d[0], d[1],
                std::vector<double>(head.data().begin(), head.data().end()));
}

// Sample i of a batch of channel-major maps, viewed as channels x positions.
Matrix sample_map(const Matrix& batch, std::size_t i, std::size_t channels) {
  const auto row = batch.row(i);
  return Matrix(channels, row.size() / channels,
                std::vector<double>(row.begin(), row.end()));
}

}  // namespace

InherConvLayer::InherConvLayer(Conv2DLayer spatial,
                               std::vector<Tensor4D> heads, Gating gate,
                               Combiner combiner)
    : spatial_(std::move(spatial)),
      heads_(std::move(heads)),
      gate_(std::move(gate)),
      combiner_(combiner) {
  if (heads_.empty()) throw RangeError("a conv InherNet layer needs >= 1 head");
  if (spatial_.has_bias()) {
    throw ShapeError("the spatial stage of a conv InherNet layer has no bias");
  }
  const std::size_t r = spatial_.out_channels();
  for (const Tensor4D& h : heads_) {
    const auto& d = h.dims();
    if (d[0] != heads_[0].dims()[0] || d[1] != r || d[2] != 1 || d[3] != 1) {
      throw ShapeError("conv head must be N x " + std::to_string(r) +
                       " x 1 x 1");
    }
  }
  if (gate_.weight.rows() != r || gate_.weight.cols() != heads_.size() ||
      gate_.bias.size() != heads_.size()) {
    throw ShapeError("conv gate weight " + gate_.weight.shape_string() +
                     " does not match rank " + std::to_string(r));
  }
}

void InherConvLayer::set_bias(std::vector<double> bias) {
  if (bias.size() != out_channels()) {
    throw ShapeError("conv bias length " + std::to_string(bias.size()) +
                     " != " + std::to_string(out_channels()) + " channels");
  }
  bias_ = std::move(bias);
}

std::size_t InherConvLayer::output_width() const {
  return out_channels() * spatial_.out_height() * spatial_.out_width();
}

Matrix InherConvLayer::run(const Matrix& code, Cache* cache) const {
  const std::size_t batch = code.rows();
  const std::size_t r = rank();
  const std::size_t positions = code.cols() / r;
  const std::size_t n = out_channels();

  Matrix gate_in(batch, r);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto row = code.row(i);
    for (std::size_t j = 0; j < r; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < positions; ++p) s += row[j * positions + p];
      gate_in(i, j) = s / static_cast<double>(positions);
    }
  }
  Matrix probs = gate_.probabilities(gate_in);

  Matrix y(batch, n * positions);
  std::vector<Matrix> outs(heads_.size(), Matrix(batch, n * positions));
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Matrix weight = head_matrix(heads_[h]);
    for (std::size_t i = 0; i < batch; ++i) {
      const Matrix o = matmul(weight, sample_map(code, i, r));
      const double g = probs(i, h);
      auto yi = y.row(i);
      auto oi = outs[h].row(i);
      const auto src = o.data();
      for (std::size_t k = 0; k < src.size(); ++k) {
        oi[k] = src[k];
        yi[k] += g * src[k];
      }
    }
  }
  if (bias_) {
    for (std::size_t i = 0; i < batch; ++i) {
      auto yi = y.row(i);
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t p = 0; p < positions; ++p) {
          yi[c * positions + p] += (*bias_)[c];
        }
      }
    }
  }
  if (cache) {
    *cache = Cache{code, std::move(gate_in), std::move(probs), std::move(outs)};
  }
  return y;
}

Matrix InherConvLayer::apply(const Matrix& x) const {
  return run(spatial_.apply(x), nullptr);
}

Matrix InherConvLayer::forward(const Matrix& x) {
  const Matrix code = spatial_.forward(x);
  Cache c;
  Matrix y = run(code, &c);
  cache_ = std::move(c);
  return y;
}

Matrix InherConvLayer::backward(const Matrix& dy) {
  if (!cache_) throw StateError("conv inhernet backward before forward");
  const Cache& c = *cache_;
  if (dy.rows() != c.code.rows() || dy.cols() != output_width()) {
    throw ShapeError("conv inhernet backward gradient " + dy.shape_string() +
                     " does not match forward");
  }
  const std::size_t batch = dy.rows();
  const std::size_t r = rank();
  const std::size_t n = out_channels();
  const std::size_t positions = c.code.cols() / r;

  Matrix d_code(batch, r * positions);
  Matrix delta(batch, heads_.size());
  head_grads_.assign(heads_.size(), std::vector<double>(n * r, 0.0));
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Matrix weight = head_matrix(heads_[h]);
    Matrix grad(n, r);
    for (std::size_t i = 0; i < batch; ++i) {
      Matrix d_out = sample_map(dy, i, n);
      delta(i, h) = dot(dy.row(i), c.head_out[h].row(i));
      d_out *= c.probs(i, h);
      grad += matmul_nt(d_out, sample_map(c.code, i, r));
      const Matrix dc = matmul_tn(weight, d_out);
      auto di = d_code.row(i);
      const auto src = dc.data();
      for (std::size_t k = 0; k < src.size(); ++k) di[k] += src[k];
    }
    std::copy(grad.data().begin(), grad.data().end(), head_grads_[h].begin());
  }
  if (gate_.trainable) {
    const Matrix d_logits = Gating::logit_grad(c.probs, delta);
    gate_weight_grad_ = matmul_tn(c.gate_in, d_logits);
    gate_bias_grad_.assign(heads_.size(), 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
      for (std::size_t h = 0; h < heads_.size(); ++h) {
        gate_bias_grad_[h] += d_logits(i, h);
      }
    }
    const Matrix d_gate_in = matmul_nt(d_logits, gate_.weight);
    const double inv = 1.0 / static_cast<double>(positions);
    for (std::size_t i = 0; i < batch; ++i) {
      auto di = d_code.row(i);
      for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t p = 0; p < positions; ++p) {
          di[j * positions + p] += d_gate_in(i, j) * inv;
        }
      }
    }
  }
  if (bias_) {
    bias_grad_.assign(n, 0.0);
    for (std::size_t i = 0; i < batch; ++i) {
      const auto di = dy.row(i);
      for (std::size_t ch = 0; ch < n; ++ch) {
        for (std::size_t p = 0; p < positions; ++p) {
          bias_grad_[ch] += di[ch * positions + p];
        }
      }
    }
  }
  return spatial_.backward(d_code);
}

std::vector<ParamRef> InherConvLayer::params() {
  std::vector<ParamRef> out;
  for (ParamRef& p : spatial_.params()) {
    out.push_back({"spatial_" + p.name, p.value, p.grad});
  }
  head_grads_.resize(heads_.size());
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    if (head_grads_[h].size() != heads_[h].size()) {
      head_grads_[h].assign(heads_[h].size(), 0.0);
    }
    out.push_back({"head" + std::to_string(h), heads_[h].data(),
                   head_grads_[h]});
  }
  if (gate_.trainable) {
    if (gate_weight_grad_.size() != gate_.weight.size()) {
      gate_weight_grad_ = Matrix(gate_.weight.rows(), gate_.weight.cols());
    }
    if (gate_bias_grad_.size() != gate_.bias.size()) {
      gate_bias_grad_.assign(gate_.bias.size(), 0.0);
    }
    out.push_back({"gate_weight", gate_.weight.data(),
                   gate_weight_grad_.data()});
    out.push_back({"gate_bias", gate_.bias, gate_bias_grad_});
  }
  if (bias_) {
    if (bias_grad_.size() != bias_->size()) bias_grad_.assign(bias_->size(), 0.0);
    out.push_back({"bias", *bias_, bias_grad_});
  }
  return out;
}

std::vector<TensorRef> InherConvLayer::tensors() {
  std::vector<TensorRef> out;
  for (TensorRef& t : spatial_.tensors()) {
    out.push_back({"spatial_" + t.name, t.shape, t.value});
  }
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const auto& d = heads_[h].dims();
    out.push_back({"head" + std::to_string(h), {d[0], d[1], d[2], d[3]},
                   heads_[h].data()});
  }
  out.push_back({"gate_weight", {gate_.weight.rows(), gate_.weight.cols()},
                 gate_.weight.data()});
  out.push_back({"gate_bias", {gate_.bias.size()}, gate_.bias});
  if (bias_) out.push_back({"bias", {bias_->size()}, *bias_});
  return out;
}

std::size_t InherConvLayer::parameter_count() const {
  std::size_t count = spatial_.parameter_count();
  for (const Tensor4D& h : heads_) count += h.size();
  if (gate_.trainable) count += gate_.weight.size() + gate_.bias.size();
  if (bias_) count += bias_->size();
  return count;
}

std::unique_ptr<Layer> InherConvLayer::clone() const {
  auto copy = std::make_unique<InherConvLayer>(*this);
  copy->cache_.reset();
  return copy;
}

InherConvLayer inherit_conv(const Tensor4D& kernel,
                            const ConvGeometry& geometry,
                            const InheritOptions& options,
                            std::optional<std::vector<double>> bias) {
  const auto& d = kernel.dims();
  const Matrix flat = kernel.flatten();
  const std::size_t max_rank = std::min(flat.rows(), flat.cols());
  if (options.rank < 1 || options.rank > max_rank) {
    throw RangeError("rank " + std::to_string(options.rank) +
                     " outside [1, " + std::to_string(max_rank) +
                     "] for kernel " + flat.shape_string());
  }
  if (options.heads < 1) throw RangeError("at least one head is required");
  const std::size_t r = options.rank;
  const SvdFactorization f = truncated_svd(flat, r);
  Matrix spatial(r, flat.cols());
  Matrix head(flat.rows(), r);
  const double head_scale = options.combiner == Combiner::kPaperLiteral
                                ? 1.0 / static_cast<double>(options.heads)
                                : 1.0;
  for (std::size_t j = 0; j < r; ++j) {
    const double root = std::sqrt(f.sigma[j]);
    for (std::size_t q = 0; q < flat.cols(); ++q) spatial(j, q) = root * f.v(q, j);
    for (std::size_t o = 0; o < flat.rows(); ++o) {
      head(o, j) = f.u(o, j) * root * head_scale;
    }
  }
  Conv2DLayer stage(Tensor4D::from_matrix(spatial, {r, d[1], d[2], d[3]}),
                    geometry);
  std::vector<Tensor4D> heads(
      options.heads, Tensor4D::from_matrix(head, {d[0], r, 1, 1}));
  CounterRng rng(options.seed, rng_stream::kInit);
  Gating gate = Gating::make(r, options.heads, options.gate_init_scale, rng);
  InherConvLayer layer(std::move(stage), std::move(heads), std::move(gate),
                       options.combiner);
  if (bias) layer.set_bias(std::move(*bias));
  return layer;
}

InherConvLayer inherit_conv(const Conv2DLayer& teacher,
                            const InheritOptions& options) {
  std::optional<std::vector<double>> bias;
  if (teacher.has_bias()) bias = teacher.bias();
  return inherit_conv(teacher.kernel(), teacher.geometry(), options,
                      std::move(bias));
}

}  // namespace inhernet
