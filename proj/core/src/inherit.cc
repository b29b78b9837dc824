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

#include "inhernet/inherit.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "inhernet/errors.h"
#include "inhernet/theory.h"

namespace inhernet {
namespace {

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) s[j] += row[j];
  }
  return s;
}

void add_row_vector(Matrix& m, std::span<const double> v) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += v[j];
  }
}

// Row i of m scaled by column `col` of weights.
Matrix scale_rows(const Matrix& m, const Matrix& weights, std::size_t col) {
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    const double w = weights(i, col);
    for (double& v : out.row(i)) v *= w;
  }
  return out;
}

// Per-sample <a_i, b_i>.
std::vector<double> row_dots(const Matrix& a, const Matrix& b) {
  std::vector<double> d(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) d[i] = dot(a.row(i), b.row(i));
  return d;
}

void ensure_shape(Matrix& grad, const Matrix& like) {
  if (grad.rows() != like.rows() || grad.cols() != like.cols()) {
    grad = Matrix(like.rows(), like.cols());
  }
}

void ensure_size(std::vector<double>& grad, std::size_t n) {
  if (grad.size() != n) grad.assign(n, 0.0);
}

void check_bias(const std::vector<double>& bias, std::size_t n,
                const char* what) {
  if (bias.size() != n) {
    throw ShapeError(std::string(what) + " bias length " +
                     std::to_string(bias.size()) + " != output width " +
                     std::to_string(n));
  }
}

void check_rank_and_heads(const Matrix& w, const InheritOptions& options) {
  const std::size_t max_rank = std::min(w.rows(), w.cols());
  if (options.rank < 1 || options.rank > max_rank) {
    throw RangeError("rank " + std::to_string(options.rank) +
                     " outside [1, " + std::to_string(max_rank) + "] for " +
                     w.shape_string() + " weight");
  }
  if (options.heads < 1) throw RangeError("at least one head is required");
}

// Factors of the rank-r truncation: U_r Sigma^{1/2} (m x r) and
// Sigma^{1/2} V_r^T (r x n).
std::pair<Matrix, Matrix> split_factors(const Matrix& w, std::size_t rank) {
  const SvdFactorization f = truncated_svd(w, rank);
  Matrix left(w.rows(), rank);
  Matrix right(rank, w.cols());
  for (std::size_t j = 0; j < rank; ++j) {
    const double root = std::sqrt(f.sigma[j]);
    for (std::size_t i = 0; i < w.rows(); ++i) left(i, j) = f.u(i, j) * root;
    for (std::size_t k = 0; k < w.cols(); ++k) right(j, k) = root * f.v(k, j);
  }
  return {std::move(left), std::move(right)};
}

void append_gate_params(std::vector<ParamRef>& out, Gating& gate,
                        Matrix& weight_grad, std::vector<double>& bias_grad) {
  if (!gate.trainable) return;
  ensure_shape(weight_grad, gate.weight);
  ensure_size(bias_grad, gate.bias.size());
  out.push_back({"gate_weight", gate.weight.data(), weight_grad.data()});
  out.push_back({"gate_bias", gate.bias, bias_grad});
}

void append_gate_tensors(std::vector<TensorRef>& out, Gating& gate) {
  out.push_back({"gate_weight", {gate.weight.rows(), gate.weight.cols()},
                 gate.weight.data()});
  out.push_back({"gate_bias", {gate.bias.size()}, gate.bias});
}

std::size_t gate_count(const Gating& gate) {
  return gate.trainable ? gate.weight.size() + gate.bias.size() : 0;
}

// Gradient of the gate parameters and of the gate input, given per-sample
// sensitivities to the gate probabilities.
struct GateBackward {
  Matrix weight_grad;
  std::vector<double> bias_grad;
  Matrix input_grad;
};

GateBackward gate_backward(const Gating& gate, const Matrix& gate_in,
                           const Matrix& probs, const Matrix& delta) {
  const Matrix d_logits = Gating::logit_grad(probs, delta);
  return {matmul_tn(gate_in, d_logits), column_sums(d_logits),
          matmul_nt(d_logits, gate.weight)};
}

}  // namespace

std::string_view to_string(Combiner c) {
  return c == Combiner::kConvexExact ? "convex" : "paper";
}

std::string_view to_string(GateInput g) {
  return g == GateInput::kCode ? "code" : "input";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kStandard:
      return "standard";
    case Variant::kNoSvd:
      return "no-svd";
    case Variant::kNoGate:
      return "no-gate";
    case Variant::kSymmetric:
      return "symmetric";
    case Variant::kInverse:
      return "inverse";
  }
  return "unknown";
}

Combiner parse_combiner(std::string_view s) {
  if (s == "convex") return Combiner::kConvexExact;
  if (s == "paper") return Combiner::kPaperLiteral;
  throw RangeError("unknown combiner '" + std::string(s) + "'");
}

GateInput parse_gate_input(std::string_view s) {
  if (s == "code") return GateInput::kCode;
  if (s == "input") return GateInput::kInput;
  throw RangeError("unknown gate input '" + std::string(s) + "'");
}

Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::kStandard, Variant::kNoSvd, Variant::kNoGate,
                    Variant::kSymmetric, Variant::kInverse}) {
    if (s == to_string(v)) return v;
  }
  throw RangeError("unknown variant '" + std::string(s) + "'");
}

// Gating --------------------------------------------------------------------

Matrix Gating::logits(const Matrix& gate_in) const {
  if (gate_in.cols() != weight.rows()) {
    throw ShapeError("gate expects input width " +
                     std::to_string(weight.rows()) + ", got " +
                     gate_in.shape_string());
  }
  Matrix l = matmul(gate_in, weight);
  add_row_vector(l, bias);
  return l;
}

Matrix Gating::probabilities(const Matrix& gate_in) const {
  return softmax_rows(logits(gate_in));
}

Matrix Gating::logit_grad(const Matrix& probs, const Matrix& delta) {
  Matrix d(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double mean = dot(probs.row(i), delta.row(i));
    for (std::size_t h = 0; h < probs.cols(); ++h) {
      d(i, h) = probs(i, h) * (delta(i, h) - mean);
    }
  }
  return d;
}

Gating Gating::make(std::size_t input_dim, std::size_t heads, double scale,
                    CounterRng& rng) {
  Gating g{Matrix(input_dim, heads), std::vector<double>(heads, 0.0), true};
  if (scale != 0.0) {
    for (double& w : g.weight.data()) w = rng.uniform(-scale, scale);
  }
  return g;
}

// InherNetLayer -------------------------------------------------------------

InherNetLayer::InherNetLayer(Matrix w_down, std::vector<Matrix> heads,
                             Gating gate, GateInput gate_input,
                             Combiner combiner)
    : w_down_(std::move(w_down)),
      heads_(std::move(heads)),
      gate_(std::move(gate)),
      gate_input_(gate_input),
      combiner_(combiner) {
  if (heads_.empty()) throw RangeError("an InherNet layer needs >= 1 head");
  const std::size_t r = w_down_.cols();
  const std::size_t n = heads_[0].cols();
  if (r == 0 || r > std::min(w_down_.rows(), n)) {
    throw RangeError("rank " + std::to_string(r) + " outside [1, min(m, n)]");
  }
  for (const Matrix& h : heads_) {
    if (h.rows() != r || h.cols() != n) {
      throw ShapeError("head " + h.shape_string() + " does not match rank " +
                       std::to_string(r) + " and width " + std::to_string(n));
    }
  }
  const std::size_t gate_dim =
      gate_input_ == GateInput::kCode ? r : w_down_.rows();
  if (gate_.weight.rows() != gate_dim ||
      gate_.weight.cols() != heads_.size() ||
      gate_.bias.size() != heads_.size()) {
    throw ShapeError("gate weight " + gate_.weight.shape_string() +
                     " does not match " + std::to_string(gate_dim) + "x" +
                     std::to_string(heads_.size()));
  }
}

void InherNetLayer::set_bias(std::vector<double> bias) {
  check_bias(bias, output_width(), "inhernet");
  bias_ = std::move(bias);
}

void InherNetLayer::set_head_biases(
    std::vector<std::vector<double>> head_biases) {
  if (head_biases.size() != heads_.size()) {
    throw ShapeError("expected " + std::to_string(heads_.size()) +
                     " head biases, got " + std::to_string(head_biases.size()));
  }
  for (const auto& b : head_biases) check_bias(b, output_width(), "head");
  head_biases_ = std::move(head_biases);
}

Matrix InherNetLayer::gates(const Matrix& x) const {
  if (gate_input_ == GateInput::kInput) return gate_.probabilities(x);
  return gate_.probabilities(matmul(x, w_down_));
}

Matrix InherNetLayer::head_output(const Matrix& x, std::size_t h) const {
  Matrix o = matmul(matmul(x, w_down_), heads_.at(h));
  if (head_biases_) add_row_vector(o, (*head_biases_)[h]);
  return o;
}

Matrix InherNetLayer::run(const Matrix& x, Cache* cache) const {
  if (x.cols() != input_width()) {
    throw ShapeError("inhernet layer expects width " +
                     std::to_string(input_width()) + ", got " +
                     x.shape_string());
  }
  Matrix z = matmul(x, w_down_);
  Matrix probs =
      gate_.probabilities(gate_input_ == GateInput::kCode ? z : x);
  Matrix y(x.rows(), output_width());
  std::vector<Matrix> outs;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    Matrix o = matmul(z, heads_[h]);
    if (head_biases_) add_row_vector(o, (*head_biases_)[h]);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      const double g = probs(i, h);
      auto yi = y.row(i);
      const auto oi = o.row(i);
      for (std::size_t j = 0; j < yi.size(); ++j) yi[j] += g * oi[j];
    }
    if (cache) outs.push_back(std::move(o));
  }
  if (bias_) add_row_vector(y, *bias_);
  if (cache) *cache = Cache{x, std::move(z), std::move(probs), std::move(outs)};
  return y;
}

Matrix InherNetLayer::apply(const Matrix& x) const { return run(x, nullptr); }

Matrix InherNetLayer::forward(const Matrix& x) {
  Cache c;
  Matrix y = run(x, &c);
  cache_ = std::move(c);
  return y;
}

Matrix InherNetLayer::backward(const Matrix& dy) {
  if (!cache_) throw StateError("inhernet backward before forward");
  const Cache& c = *cache_;
  if (dy.rows() != c.x.rows() || dy.cols() != output_width()) {
    throw ShapeError("inhernet backward gradient " + dy.shape_string() +
                     " does not match forward");
  }
  Matrix dz(dy.rows(), rank());
  head_grads_.resize(heads_.size());
  head_bias_grads_.assign(head_biases_ ? heads_.size() : 0, {});
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const Matrix d_out = scale_rows(dy, c.probs, h);
    head_grads_[h] = matmul_tn(c.z, d_out);
    if (head_biases_) head_bias_grads_[h] = column_sums(d_out);
    dz += matmul_nt(d_out, heads_[h]);
  }
  Matrix dx_gate;
  if (gate_.trainable) {
    Matrix delta(dy.rows(), heads_.size());
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      const auto d = row_dots(dy, c.head_out[h]);
      for (std::size_t i = 0; i < d.size(); ++i) delta(i, h) = d[i];
    }
    const Matrix& gate_in = gate_input_ == GateInput::kCode ? c.z : c.x;
    GateBackward gb = gate_backward(gate_, gate_in, c.probs, delta);
    gate_weight_grad_ = std::move(gb.weight_grad);
    gate_bias_grad_ = std::move(gb.bias_grad);
    if (gate_input_ == GateInput::kCode) {
      dz += gb.input_grad;
    } else {
      dx_gate = std::move(gb.input_grad);
    }
  }
  if (bias_) bias_grad_ = column_sums(dy);
  w_down_grad_ = matmul_tn(c.x, dz);
  Matrix dx = matmul_nt(dz, w_down_);
  if (!dx_gate.empty()) dx += dx_gate;
  return dx;
}

std::vector<ParamRef> InherNetLayer::params() {
  ensure_shape(w_down_grad_, w_down_);
  head_grads_.resize(heads_.size());
  std::vector<ParamRef> out{{"w_down", w_down_.data(), w_down_grad_.data()}};
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    ensure_shape(head_grads_[h], heads_[h]);
    out.push_back({"head" + std::to_string(h), heads_[h].data(),
                   head_grads_[h].data()});
  }
  if (head_biases_) {
    head_bias_grads_.resize(heads_.size());
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      ensure_size(head_bias_grads_[h], output_width());
      out.push_back({"head_bias" + std::to_string(h), (*head_biases_)[h],
                     head_bias_grads_[h]});
    }
  }
  append_gate_params(out, gate_, gate_weight_grad_, gate_bias_grad_);
  if (bias_) {
    ensure_size(bias_grad_, bias_->size());
    out.push_back({"bias", *bias_, bias_grad_});
  }
  return out;
}

std::vector<TensorRef> InherNetLayer::tensors() {
  std::vector<TensorRef> out{
      {"w_down", {w_down_.rows(), w_down_.cols()}, w_down_.data()}};
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    out.push_back({"head" + std::to_string(h),
                   {heads_[h].rows(), heads_[h].cols()},
                   heads_[h].data()});
  }
  if (head_biases_) {
    for (std::size_t h = 0; h < heads_.size(); ++h) {
      out.push_back({"head_bias" + std::to_string(h), {output_width()},
                     (*head_biases_)[h]});
    }
  }
  append_gate_tensors(out, gate_);
  if (bias_) out.push_back({"bias", {bias_->size()}, *bias_});
  return out;
}

std::size_t InherNetLayer::parameter_count() const {
  std::size_t n = w_down_.size();
  for (const Matrix& h : heads_) n += h.size();
  if (head_biases_) n += heads_.size() * output_width();
  n += gate_count(gate_);
  if (bias_) n += bias_->size();
  return n;
}

std::unique_ptr<Layer> InherNetLayer::clone() const {
  auto copy = std::make_unique<InherNetLayer>(*this);
  copy->cache_.reset();
  return copy;
}

// InverseLayer --------------------------------------------------------------

InverseLayer::InverseLayer(std::vector<Matrix> downs, Matrix w_up,
                           Gating gate, Combiner combiner)
    : downs_(std::move(downs)),
      w_up_(std::move(w_up)),
      gate_(std::move(gate)),
      combiner_(combiner) {
  if (downs_.empty()) throw RangeError("an inverse layer needs >= 1 head");
  for (const Matrix& d : downs_) {
    if (d.rows() != downs_[0].rows() || d.cols() != w_up_.rows()) {
      throw ShapeError("down " + d.shape_string() +
                       " does not match up-projection " +
                       w_up_.shape_string());
    }
  }
  if (gate_.weight.rows() != input_width() ||
      gate_.weight.cols() != downs_.size() ||
      gate_.bias.size() != downs_.size()) {
    throw ShapeError("inverse gate weight " + gate_.weight.shape_string() +
                     " does not match the layer");
  }
}

void InverseLayer::set_bias(std::vector<double> bias) {
  check_bias(bias, output_width(), "inverse");
  bias_ = std::move(bias);
}

Matrix InverseLayer::run(const Matrix& x, Cache* cache) const {
  if (x.cols() != input_width()) {
    throw ShapeError("inverse layer expects width " +
                     std::to_string(input_width()) + ", got " +
                     x.shape_string());
  }
  Matrix probs = gate_.probabilities(x);
  Matrix agg(x.rows(), rank());
  std::vector<Matrix> codes;
  for (std::size_t h = 0; h < downs_.size(); ++h) {
    Matrix z = matmul(x, downs_[h]);
    agg += scale_rows(z, probs, h);
    if (cache) codes.push_back(std::move(z));
  }
  Matrix y = matmul(agg, w_up_);
  if (bias_) add_row_vector(y, *bias_);
  if (cache) *cache = Cache{x, std::move(probs), std::move(agg), std::move(codes)};
  return y;
}

Matrix InverseLayer::apply(const Matrix& x) const { return run(x, nullptr); }

Matrix InverseLayer::forward(const Matrix& x) {
  Cache c;
  Matrix y = run(x, &c);
  cache_ = std::move(c);
  return y;
}

Matrix InverseLayer::backward(const Matrix& dy) {
  if (!cache_) throw StateError("inverse backward before forward");
  const Cache& c = *cache_;
  if (dy.rows() != c.x.rows() || dy.cols() != output_width()) {
    throw ShapeError("inverse backward gradient " + dy.shape_string() +
                     " does not match forward");
  }
  w_up_grad_ = matmul_tn(c.agg, dy);
  if (bias_) bias_grad_ = column_sums(dy);
  const Matrix d_agg = matmul_nt(dy, w_up_);
  Matrix dx(dy.rows(), input_width());
  down_grads_.resize(downs_.size());
  Matrix delta(dy.rows(), downs_.size());
  for (std::size_t h = 0; h < downs_.size(); ++h) {
    const Matrix dz = scale_rows(d_agg, c.probs, h);
    down_grads_[h] = matmul_tn(c.x, dz);
    dx += matmul_nt(dz, downs_[h]);
    const auto d = row_dots(d_agg, c.codes[h]);
    for (std::size_t i = 0; i < d.size(); ++i) delta(i, h) = d[i];
  }
  if (gate_.trainable) {
    GateBackward gb = gate_backward(gate_, c.x, c.probs, delta);
    gate_weight_grad_ = std::move(gb.weight_grad);
    gate_bias_grad_ = std::move(gb.bias_grad);
    dx += gb.input_grad;
  }
  return dx;
}

std::vector<ParamRef> InverseLayer::params() {
  down_grads_.resize(downs_.size());
  std::vector<ParamRef> out;
  for (std::size_t h = 0; h < downs_.size(); ++h) {
    ensure_shape(down_grads_[h], downs_[h]);
    out.push_back({"down" + std::to_string(h), downs_[h].data(),
                   down_grads_[h].data()});
  }
  ensure_shape(w_up_grad_, w_up_);
  out.push_back({"w_up", w_up_.data(), w_up_grad_.data()});
  append_gate_params(out, gate_, gate_weight_grad_, gate_bias_grad_);
  if (bias_) {
    ensure_size(bias_grad_, bias_->size());
    out.push_back({"bias", *bias_, bias_grad_});
  }
  return out;
}

std::vector<TensorRef> InverseLayer::tensors() {
  std::vector<TensorRef> out;
  for (std::size_t h = 0; h < downs_.size(); ++h) {
    out.push_back({"down" + std::to_string(h),
                   {downs_[h].rows(), downs_[h].cols()}, downs_[h].data()});
  }
  out.push_back({"w_up", {w_up_.rows(), w_up_.cols()}, w_up_.data()});
  append_gate_tensors(out, gate_);
  if (bias_) out.push_back({"bias", {bias_->size()}, *bias_});
  return out;
}

std::size_t InverseLayer::parameter_count() const {
  std::size_t n = w_up_.size();
  for (const Matrix& d : downs_) n += d.size();
  n += gate_count(gate_);
  if (bias_) n += bias_->size();
  return n;
}

std::unique_ptr<Layer> InverseLayer::clone() const {
  auto copy = std::make_unique<InverseLayer>(*this);
  copy->cache_.reset();
  return copy;
}

// SymmetricLayer ------------------------------------------------------------

SymmetricLayer::SymmetricLayer(std::vector<Matrix> downs,
                               std::vector<Matrix> ups, Gating gate)
    : downs_(std::move(downs)), ups_(std::move(ups)), gate_(std::move(gate)) {
  if (downs_.empty() || downs_.size() != ups_.size()) {
    throw ShapeError("symmetric layer needs matching, nonempty branches");
  }
  for (std::size_t b = 0; b < downs_.size(); ++b) {
    if (downs_[b].rows() != downs_[0].rows() ||
        downs_[b].cols() != ups_[b].rows() ||
        ups_[b].rows() != ups_[0].rows() || ups_[b].cols() != ups_[0].cols()) {
      throw ShapeError("symmetric branch " + std::to_string(b) +
                       " has inconsistent shapes");
    }
  }
  if (gate_.weight.rows() != input_width() ||
      gate_.weight.cols() != downs_.size() ||
      gate_.bias.size() != downs_.size()) {
    throw ShapeError("symmetric gate weight " + gate_.weight.shape_string() +
                     " does not match the layer");
  }
}

void SymmetricLayer::set_bias(std::vector<double> bias) {
  check_bias(bias, output_width(), "symmetric");
  bias_ = std::move(bias);
}

Matrix SymmetricLayer::run(const Matrix& x, Cache* cache) const {
  if (x.cols() != input_width()) {
    throw ShapeError("symmetric layer expects width " +
                     std::to_string(input_width()) + ", got " +
                     x.shape_string());
  }
  Matrix probs = gate_.probabilities(x);
  Matrix y(x.rows(), output_width());
  std::vector<Matrix> codes, outs;
  for (std::size_t b = 0; b < downs_.size(); ++b) {
    Matrix z = matmul(x, downs_[b]);
    Matrix o = matmul(z, ups_[b]);
    y += scale_rows(o, probs, b);
    if (cache) {
      codes.push_back(std::move(z));
      outs.push_back(std::move(o));
    }
  }
  if (bias_) add_row_vector(y, *bias_);
  if (cache) {
    *cache = Cache{x, std::move(probs), std::move(codes), std::move(outs)};
  }
  return y;
}

Matrix SymmetricLayer::apply(const Matrix& x) const {
  return run(x, nullptr);
}

Matrix SymmetricLayer::forward(const Matrix& x) {
  Cache c;
  Matrix y = run(x, &c);
  cache_ = std::move(c);
  return y;
}

Matrix SymmetricLayer::backward(const Matrix& dy) {
  if (!cache_) throw StateError("symmetric backward before forward");
  const Cache& c = *cache_;
  if (dy.rows() != c.x.rows() || dy.cols() != output_width()) {
    throw ShapeError("symmetric backward gradient " + dy.shape_string() +
                     " does not match forward");
  }
  if (bias_) bias_grad_ = column_sums(dy);
  Matrix dx(dy.rows(), input_width());
  Matrix delta(dy.rows(), downs_.size());
  down_grads_.resize(downs_.size());
  up_grads_.resize(ups_.size());
  for (std::size_t b = 0; b < downs_.size(); ++b) {
    const Matrix d_out = scale_rows(dy, c.probs, b);
    up_grads_[b] = matmul_tn(c.codes[b], d_out);
    const Matrix dz = matmul_nt(d_out, ups_[b]);
    down_grads_[b] = matmul_tn(c.x, dz);
    dx += matmul_nt(dz, downs_[b]);
    const auto d = row_dots(dy, c.outs[b]);
    for (std::size_t i = 0; i < d.size(); ++i) delta(i, b) = d[i];
  }
  if (gate_.trainable) {
    GateBackward gb = gate_backward(gate_, c.x, c.probs, delta);
    gate_weight_grad_ = std::move(gb.weight_grad);
    gate_bias_grad_ = std::move(gb.bias_grad);
    dx += gb.input_grad;
  }
  return dx;
}

std::vector<ParamRef> SymmetricLayer::params() {
  down_grads_.resize(downs_.size());
  up_grads_.resize(ups_.size());
  std::vector<ParamRef> out;
  for (std::size_t b = 0; b < downs_.size(); ++b) {
    ensure_shape(down_grads_[b], downs_[b]);
    ensure_shape(up_grads_[b], ups_[b]);
    out.push_back({"down" + std::to_string(b), downs_[b].data(),
                   down_grads_[b].data()});
    out.push_back({"up" + std::to_string(b), ups_[b].data(),
                   up_grads_[b].data()});
  }
  append_gate_params(out, gate_, gate_weight_grad_, gate_bias_grad_);
  if (bias_) {
    ensure_size(bias_grad_, bias_->size());
    out.push_back({"bias", *bias_, bias_grad_});
  }
  return out;
}

std::vector<TensorRef> SymmetricLayer::tensors() {
  std::vector<TensorRef> out;
  for (std::size_t b = 0; b < downs_.size(); ++b) {
    out.push_back({"down" + std::to_string(b),
                   {downs_[b].rows(), downs_[b].cols()}, downs_[b].data()});
    out.push_back({"up" + std::to_string(b), {ups_[b].rows(), ups_[b].cols()},
                   ups_[b].data()});
  }
  append_gate_tensors(out, gate_);
  if (bias_) out.push_back({"bias", {bias_->size()}, *bias_});
  return out;
}

std::size_t SymmetricLayer::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t b = 0; b < downs_.size(); ++b) {
    n += downs_[b].size() + ups_[b].size();
  }
  n += gate_count(gate_);
  if (bias_) n += bias_->size();
  return n;
}

std::unique_ptr<Layer> SymmetricLayer::clone() const {
  auto copy = std::make_unique<SymmetricLayer>(*this);
  copy->cache_.reset();
  return copy;
}

// Construction --------------------------------------------------------------

InherNetLayer inherit_dense(const Matrix& w, const InheritOptions& options,
                            std::optional<std::vector<double>> bias) {
  check_rank_and_heads(w, options);
  auto [down, up] = split_factors(w, options.rank);
  if (options.combiner == Combiner::kPaperLiteral) {
    up *= 1.0 / static_cast<double>(options.heads);
  }
  std::vector<Matrix> heads(options.heads, up);
  CounterRng rng(options.seed, rng_stream::kInit);
  const std::size_t gate_dim =
      options.gate_input == GateInput::kCode ? options.rank : w.rows();
  Gating gate =
      Gating::make(gate_dim, options.heads, options.gate_init_scale, rng);
  InherNetLayer layer(std::move(down), std::move(heads), std::move(gate),
                      options.gate_input, options.combiner);
  if (bias) layer.set_bias(std::move(*bias));
  return layer;
}

InherNetLayer inherit_dense(const DenseLayer& teacher,
                            const InheritOptions& options) {
  std::optional<std::vector<double>> bias;
  if (teacher.has_bias()) bias = teacher.bias();
  return inherit_dense(teacher.weight(), options, std::move(bias));
}

InverseLayer build_inverse(const Matrix& w, const InheritOptions& options,
                           std::optional<std::vector<double>> bias) {
  check_rank_and_heads(w, options);
  auto [down, up] = split_factors(w, options.rank);
  if (options.combiner == Combiner::kPaperLiteral) {
    down *= 1.0 / static_cast<double>(options.heads);
  }
  std::vector<Matrix> downs(options.heads, down);
  CounterRng rng(options.seed, rng_stream::kInit);
  Gating gate =
      Gating::make(w.rows(), options.heads, options.gate_init_scale, rng);
  InverseLayer layer(std::move(downs), std::move(up), std::move(gate),
                     options.combiner);
  if (bias) layer.set_bias(std::move(*bias));
  return layer;
}

std::size_t symmetric_rank_for_budget(std::size_t m, std::size_t n,
                                      std::size_t budget, bool with_bias) {
  constexpr std::size_t kBranches = 2;
  const std::size_t fixed =
      kBranches * m + kBranches + (with_bias ? n : 0);
  for (std::size_t r = std::min(m, n); r >= 1; --r) {
    if (kBranches * r * (m + n) + fixed <= budget) return r;
  }
  return 1;
}

std::unique_ptr<Layer> make_variant(const DenseLayer& teacher, Variant variant,
                                    const InheritOptions& options) {
  const Matrix& w = teacher.weight();
  switch (variant) {
    case Variant::kStandard:
      return std::make_unique<InherNetLayer>(inherit_dense(teacher, options));
    case Variant::kNoSvd: {
      check_rank_and_heads(w, options);
      CounterRng rng(options.seed, rng_stream::kInit + 1);
      const std::size_t m = w.rows(), n = w.cols(), r = options.rank;
      Matrix down(m, r);
      const double down_bound = std::sqrt(6.0 / static_cast<double>(m));
      for (double& v : down.data()) v = rng.uniform(-down_bound, down_bound);
      std::vector<Matrix> heads;
      const double head_bound = std::sqrt(6.0 / static_cast<double>(r));
      for (std::size_t h = 0; h < options.heads; ++h) {
        Matrix up(r, n);
        for (double& v : up.data()) v = rng.uniform(-head_bound, head_bound);
        heads.push_back(std::move(up));
      }
      const std::size_t gate_dim =
          options.gate_input == GateInput::kCode ? r : m;
      Gating gate =
          Gating::make(gate_dim, options.heads, options.gate_init_scale, rng);
      auto layer = std::make_unique<InherNetLayer>(
          std::move(down), std::move(heads), std::move(gate),
          options.gate_input, options.combiner);
      if (teacher.has_bias()) layer->set_bias(std::vector<double>(n, 0.0));
      return layer;
    }
    case Variant::kNoGate: {
      InheritOptions frozen = options;
      frozen.gate_init_scale = 0.0;
      auto layer = std::make_unique<InherNetLayer>(
          inherit_dense(teacher, frozen));
      layer->set_gate_trainable(false);
      return layer;
    }
    case Variant::kSymmetric: {
      const std::size_t budget =
          inherit_dense(teacher, options).parameter_count();
      const std::size_t r = symmetric_rank_for_budget(
          w.rows(), w.cols(), budget, teacher.has_bias());
      auto [down, up] = split_factors(w, r);
      if (options.combiner == Combiner::kPaperLiteral) up *= 0.5;
      CounterRng rng(options.seed, rng_stream::kInit);
      Gating gate = Gating::make(w.rows(), 2, options.gate_init_scale, rng);
      auto layer = std::make_unique<SymmetricLayer>(
          std::vector<Matrix>{down, down}, std::vector<Matrix>{up, up},
          std::move(gate));
      if (teacher.has_bias()) layer->set_bias(teacher.bias());
      return layer;
    }
    case Variant::kInverse: {
      std::optional<std::vector<double>> bias;
      if (teacher.has_bias()) bias = teacher.bias();
      return std::make_unique<InverseLayer>(
          build_inverse(w, options, std::move(bias)));
    }
  }
  throw RangeError("unknown variant");
}

// Gradient decomposition ----------------------------------------------------

double gradient_decomposition_check(const InherNetLayer& layer,
                                    const Matrix& x, const LossFn& loss) {
  const std::size_t batch = x.rows();
  const std::size_t m = layer.input_width();
  const std::size_t r = layer.rank();
  const std::size_t n = layer.output_width();
  const std::size_t heads = layer.num_heads();
  const bool code_gate = layer.gate_input() == GateInput::kCode;
  const bool gate_live = layer.gate().trainable;
  const Matrix& down = layer.w_down();
  const Gating& gate = layer.gate();
  if (x.cols() != m) {
    throw ShapeError("decomposition check input " + x.shape_string() +
                     " does not match layer width " + std::to_string(m));
  }

  // Straight-line per-sample evaluation.
  Matrix z(batch, r), probs(batch, heads), y(batch, n);
  const Matrix& zc = z;
  std::vector<Matrix> f(heads, Matrix(batch, n));
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < m; ++a) s += x(i, a) * down(a, j);
      z(i, j) = s;
    }
    const auto gin = code_gate ? zc.row(i) : x.row(i);
    std::vector<double> logits(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      double s = gate.bias[h];
      for (std::size_t j = 0; j < gin.size(); ++j) s += gin[j] * gate.weight(j, h);
      logits[h] = s;
    }
    const auto g = softmax(logits);
    for (std::size_t h = 0; h < heads; ++h) {
      probs(i, h) = g[h];
      for (std::size_t k = 0; k < n; ++k) {
        double s = layer.head_biases() ? (*layer.head_biases())[h][k] : 0.0;
        for (std::size_t j = 0; j < r; ++j) s += z(i, j) * layer.heads()[h](j, k);
        f[h](i, k) = s;
        y(i, k) += g[h] * s;
      }
    }
    if (layer.bias()) {
      for (std::size_t k = 0; k < n; ++k) y(i, k) += (*layer.bias())[k];
    }
  }
  const Matrix dy = loss(y).grad;

  // Term-by-term assembly, in params() order.
  Matrix d_down(m, r);
  std::vector<Matrix> d_heads(heads, Matrix(r, n));
  std::vector<std::vector<double>> d_head_bias(
      layer.head_biases() ? heads : 0, std::vector<double>(n, 0.0));
  Matrix d_gate_w(gate.weight.rows(), heads);
  std::vector<double> d_gate_b(heads, 0.0);
  std::vector<double> d_bias(n, 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    const auto dyi = dy.row(i);
    // Head term: sum_h G_h * grad_theta f_h^T dy.
    for (std::size_t h = 0; h < heads; ++h) {
      const double g = probs(i, h);
      const Matrix& up = layer.heads()[h];
      for (std::size_t j = 0; j < r; ++j) {
        double back = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          d_heads[h](j, k) += g * z(i, j) * dyi[k];
          back += up(j, k) * dyi[k];
        }
        for (std::size_t a = 0; a < m; ++a) d_down(a, j) += g * x(i, a) * back;
      }
      if (layer.head_biases()) {
        for (std::size_t k = 0; k < n; ++k) d_head_bias[h][k] += g * dyi[k];
      }
    }
    for (std::size_t k = 0; k < n; ++k) d_bias[k] += dyi[k];
    if (!gate_live) continue;

    // Gate term: sum_h Delta_h * grad_theta_g G_h.
    std::vector<double> delta(heads);
    for (std::size_t h = 0; h < heads; ++h) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += dyi[k] * f[h](i, k);
      delta[h] = s;
    }
    std::vector<double> d_logit(heads, 0.0);
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t k = 0; k < heads; ++k) {
        const double jac = probs(i, h) * ((h == k ? 1.0 : 0.0) - probs(i, k));
        d_logit[k] += delta[h] * jac;
      }
    }
    const auto gin = code_gate ? zc.row(i) : x.row(i);
    for (std::size_t k = 0; k < heads; ++k) {
      d_gate_b[k] += d_logit[k];
      for (std::size_t j = 0; j < gin.size(); ++j) {
        d_gate_w(j, k) += gin[j] * d_logit[k];
      }
    }
    if (code_gate) {
      for (std::size_t j = 0; j < r; ++j) {
        double back = 0.0;
        for (std::size_t k = 0; k < heads; ++k) back += d_logit[k] * gate.weight(j, k);
        for (std::size_t a = 0; a < m; ++a) d_down(a, j) += x(i, a) * back;
      }
    }
  }

  GradientSet assembled;
  assembled.emplace_back(d_down.data().begin(), d_down.data().end());
  for (const Matrix& d : d_heads) assembled.emplace_back(d.data().begin(), d.data().end());
  for (const auto& d : d_head_bias) assembled.push_back(d);
  if (gate_live) {
    assembled.emplace_back(d_gate_w.data().begin(), d_gate_w.data().end());
    assembled.push_back(d_gate_b);
  }
  if (layer.bias()) assembled.push_back(d_bias);

  InherNetLayer copy = layer;
  const Matrix out = copy.forward(x);
  copy.backward(loss(out).grad);
  GradientSet total;
  for (const auto& p : copy.params()) total.emplace_back(p.grad.begin(), p.grad.end());
  return max_abs_deviation(assembled, total);
}

// Whole networks ------------------------------------------------------------

Network inherit_network(const Network& teacher,
                        const NetworkInheritOptions& options) {
  if (options.ranks.empty() && !options.energy_epsilon) {
    throw RangeError("no rank given for inheritance");
  }
  Network out;
  std::size_t slot = 0;
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    const Layer& layer = teacher.layer(i);
    const auto* dense = dynamic_cast<const DenseLayer*>(&layer);
    const auto* conv = dynamic_cast<const Conv2DLayer*>(&layer);
    if (!dense && !conv) {
      out.add(layer.clone());
      continue;
    }
    const Matrix w = dense ? dense->weight() : conv->kernel().flatten();
    const std::size_t max_rank = std::min(w.rows(), w.cols());
    std::size_t rank;
    if (options.energy_epsilon) {
      rank = rank_for_energy(singular_values(w), *options.energy_epsilon);
    } else {
      rank = options.ranks.size() == 1 ? options.ranks[0]
                                       : options.ranks.at(slot);
    }
    ++slot;
    if (rank > max_rank) {
      if (!options.clamp_rank) {
        throw RangeError("layer " + std::to_string(i) + " (" +
                         std::string(to_string(layer.kind())) + " " +
                         w.shape_string() + "): rank " + std::to_string(rank) +
                         " exceeds min(m, n) = " + std::to_string(max_rank));
      }
      rank = max_rank;
    }
    InheritOptions lo;
    lo.rank = rank;
    lo.heads = options.heads;
    lo.combiner = options.combiner;
    lo.gate_input = options.gate_input;
    lo.gate_init_scale = options.gate_init_scale;
    lo.seed = options.seed * 0x9E3779B97F4A7C15ULL + i;
    if (dense) {
      out.add(make_variant(*dense, options.variant, lo));
      continue;
    }
    if (options.variant != Variant::kStandard &&
        options.variant != Variant::kNoGate) {
      throw RangeError("variant " + std::string(to_string(options.variant)) +
                       " is not available for conv layer " +
                       std::to_string(i));
    }
    if (options.variant == Variant::kNoGate) lo.gate_init_scale = 0.0;
    InherConvLayer inherited = inherit_conv(*conv, lo);
    if (options.variant == Variant::kNoGate) inherited.gate().trainable = false;
    out.add(std::move(inherited));
  }
  return out;
}

}  // namespace inhernet
