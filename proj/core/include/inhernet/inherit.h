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

#ifndef INHERNET_INHERIT_H_
#define INHERNET_INHERIT_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "inhernet/conv.h"
#include "inhernet/linalg.h"
#include "inhernet/nn.h"

namespace inhernet {

// How expert heads are scaled at initialization.
//
// kConvexExact: every head is Sigma_r^{1/2} V_r^T, so any convex gating
// reproduces the rank-r truncation W_r exactly.
// kPaperLiteral: every head is Sigma_r^{1/2} V_r^T / H, so uniform gating
// yields W_r / H.
enum class Combiner { kConvexExact, kPaperLiteral };

// What the gating network reads: the r-dimensional code or the raw input.
enum class GateInput { kCode, kInput };

enum class Variant { kStandard, kNoSvd, kNoGate, kSymmetric, kInverse };

std::string_view to_string(Combiner c);
std::string_view to_string(GateInput g);
std::string_view to_string(Variant v);
Combiner parse_combiner(std::string_view s);   // "convex" | "paper"
GateInput parse_gate_input(std::string_view s);  // "code" | "input"
Variant parse_variant(std::string_view s);  // "standard" | "no-svd" | ...

struct InheritOptions {
  std::size_t rank = 1;
  std::size_t heads = 1;
  Combiner combiner = Combiner::kConvexExact;
  GateInput gate_input = GateInput::kCode;
  // Gate weights start Uniform(-scale, scale); 0 gives exactly uniform
  // gating. Gate bias always starts at zero.
  double gate_init_scale = 0.0;
  std::uint64_t seed = 0;
};

// Softmax gating G(v) = softmax(v * weight + bias), one probability vector
// per sample. A frozen gate is detached: no gradient flows into it or
// through it.
struct Gating {
  Matrix weight;             // gate_input_dim x H
  std::vector<double> bias;  // H
  bool trainable = true;

  std::size_t heads() const { return bias.size(); }
  Matrix logits(const Matrix& gate_in) const;
  Matrix probabilities(const Matrix& gate_in) const;
  // Given sensitivities delta(i, h) = d loss / d G_h(x_i), returns
  // d loss / d logits(i, h) = G_h (delta_h - sum_k G_k delta_k).
  static Matrix logit_grad(const Matrix& probs, const Matrix& delta);

  static Gating make(std::size_t input_dim, std::size_t heads, double scale,
                     CounterRng& rng);
};

// One shared down-projection feeding H expert up-projections combined by a
// per-sample softmax gate:
//
//   z = x * w_down,  G = softmax(gate(z or x)),  y = sum_h G_h (z * U_h + c_h) + b
class InherNetLayer final : public Layer {
 public:
  InherNetLayer(Matrix w_down, std::vector<Matrix> heads, Gating gate,
                GateInput gate_input, Combiner combiner);

  // Output bias added after the gated sum (teacher biases land here).
  void set_bias(std::vector<double> bias);
  void clear_bias() { bias_.reset(); }
  // Per-head biases c_h, one length-n vector per head.
  void set_head_biases(std::vector<std::vector<double>> head_biases);
  void set_gate_trainable(bool trainable) { gate_.trainable = trainable; }

  const Matrix& w_down() const { return w_down_; }
  Matrix& w_down() { return w_down_; }
  const std::vector<Matrix>& heads() const { return heads_; }
  std::vector<Matrix>& heads() { return heads_; }
  const Gating& gate() const { return gate_; }
  Gating& gate() { return gate_; }
  const std::optional<std::vector<double>>& bias() const { return bias_; }
  const std::optional<std::vector<std::vector<double>>>& head_biases() const {
    return head_biases_;
  }
  GateInput gate_input() const { return gate_input_; }
  Combiner combiner() const { return combiner_; }
  std::size_t rank() const { return w_down_.cols(); }
  std::size_t num_heads() const { return heads_.size(); }

  // Per-sample gate probabilities, batch x H.
  Matrix gates(const Matrix& x) const;
  // Output of head h alone: z * U_h + c_h.
  Matrix head_output(const Matrix& x, std::size_t h) const;

  LayerKind kind() const override { return LayerKind::kInherNet; }
  std::size_t input_width() const override { return w_down_.rows(); }
  std::size_t output_width() const override { return heads_[0].cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override;
  std::vector<TensorRef> tensors() override;
  std::size_t parameter_count() const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  struct Cache {
    Matrix x, z, probs;
    std::vector<Matrix> head_out;
  };
  Matrix run(const Matrix& x, Cache* cache) const;

  Matrix w_down_;
  std::vector<Matrix> heads_;
  Gating gate_;
  GateInput gate_input_;
  Combiner combiner_;
  std::optional<std::vector<double>> bias_;
  std::optional<std::vector<std::vector<double>>> head_biases_;

  Matrix w_down_grad_;
  std::vector<Matrix> head_grads_;
  std::vector<std::vector<double>> head_bias_grads_;
  Matrix gate_weight_grad_;
  std::vector<double> gate_bias_grad_;
  std::vector<double> bias_grad_;
  std::optional<Cache> cache_;
};

// Mirrored module: H down-projections aggregated by the gate, then a single
// shared up-projection. z_agg = sum_h G_h(x) x D_h; y = z_agg * w_up + b.
// The gate always reads the raw input.
class InverseLayer final : public Layer {
 public:
  InverseLayer(std::vector<Matrix> downs, Matrix w_up, Gating gate,
               Combiner combiner);

  void set_bias(std::vector<double> bias);
  const std::vector<Matrix>& downs() const { return downs_; }
  const Matrix& w_up() const { return w_up_; }
  const Gating& gate() const { return gate_; }
  Gating& gate() { return gate_; }
  const std::optional<std::vector<double>>& bias() const { return bias_; }
  Combiner combiner() const { return combiner_; }
  std::size_t rank() const { return w_up_.rows(); }
  std::size_t num_heads() const { return downs_.size(); }

  LayerKind kind() const override { return LayerKind::kInverse; }
  std::size_t input_width() const override { return downs_[0].rows(); }
  std::size_t output_width() const override { return w_up_.cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override;
  std::vector<TensorRef> tensors() override;
  std::size_t parameter_count() const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  struct Cache {
    Matrix x, probs, agg;
    std::vector<Matrix> codes;
  };
  Matrix run(const Matrix& x, Cache* cache) const;

  std::vector<Matrix> downs_;
  Matrix w_up_;
  Gating gate_;
  Combiner combiner_;
  std::optional<std::vector<double>> bias_;

  std::vector<Matrix> down_grads_;
  Matrix w_up_grad_;
  Matrix gate_weight_grad_;
  std::vector<double> gate_bias_grad_;
  std::vector<double> bias_grad_;
  std::optional<Cache> cache_;
};

// LoRA+MoE-style ablation: B independent (down, up) branches mixed by an
// input-read gate. y = sum_b G_b(x) x D_b U_b + bias.
class SymmetricLayer final : public Layer {
 public:
  SymmetricLayer(std::vector<Matrix> downs, std::vector<Matrix> ups,
                 Gating gate);

  void set_bias(std::vector<double> bias);
  const std::vector<Matrix>& downs() const { return downs_; }
  const std::vector<Matrix>& ups() const { return ups_; }
  const Gating& gate() const { return gate_; }
  const std::optional<std::vector<double>>& bias() const { return bias_; }
  std::size_t rank() const { return ups_[0].rows(); }
  std::size_t num_branches() const { return downs_.size(); }

  LayerKind kind() const override { return LayerKind::kSymmetric; }
  std::size_t input_width() const override { return downs_[0].rows(); }
  std::size_t output_width() const override { return ups_[0].cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override;
  std::vector<TensorRef> tensors() override;
  std::size_t parameter_count() const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  struct Cache {
    Matrix x, probs;
    std::vector<Matrix> codes, outs;
  };
  Matrix run(const Matrix& x, Cache* cache) const;

  std::vector<Matrix> downs_;
  std::vector<Matrix> ups_;
  Gating gate_;
  std::optional<std::vector<double>> bias_;

  std::vector<Matrix> down_grads_;
  std::vector<Matrix> up_grads_;
  Matrix gate_weight_grad_;
  std::vector<double> gate_bias_grad_;
  std::vector<double> bias_grad_;
  std::optional<Cache> cache_;
};

// Channel-decomposed convolution: a shared spatial conv to r channels, then
// H expert 1x1 convs (N x r x 1 x 1) mixed by a gate that reads the spatial
// mean of the code map.
class InherConvLayer final : public Layer {
 public:
  InherConvLayer(Conv2DLayer spatial, std::vector<Tensor4D> heads,
                 Gating gate, Combiner combiner);

  void set_bias(std::vector<double> bias);
  const Conv2DLayer& spatial() const { return spatial_; }
  const std::vector<Tensor4D>& heads() const { return heads_; }
  const Gating& gate() const { return gate_; }
  Gating& gate() { return gate_; }
  const std::optional<std::vector<double>>& bias() const { return bias_; }
  Combiner combiner() const { return combiner_; }
  std::size_t rank() const { return spatial_.out_channels(); }
  std::size_t num_heads() const { return heads_.size(); }
  std::size_t out_channels() const { return heads_[0].dims()[0]; }

  LayerKind kind() const override { return LayerKind::kInherConv; }
  std::size_t input_width() const override { return spatial_.input_width(); }
  std::size_t output_width() const override;
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override;
  std::vector<TensorRef> tensors() override;
  std::size_t parameter_count() const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  struct Cache {
    Matrix code, gate_in, probs;
    std::vector<Matrix> head_out;
  };
  Matrix run(const Matrix& code, Cache* cache) const;

  Conv2DLayer spatial_;
  std::vector<Tensor4D> heads_;
  Gating gate_;
  Combiner combiner_;
  std::optional<std::vector<double>> bias_;

  std::vector<std::vector<double>> head_grads_;
  Matrix gate_weight_grad_;
  std::vector<double> gate_bias_grad_;
  std::vector<double> bias_grad_;
  std::optional<Cache> cache_;
};

// Truncated-SVD inheritance of a dense weight W (m x n, Y = X W):
// w_down = U_r Sigma_r^{1/2}; each head = Sigma_r^{1/2} V_r^T (divided by H
// under kPaperLiteral). Throws RangeError unless 1 <= rank <= min(m, n) and
// heads >= 1.
InherNetLayer inherit_dense(const Matrix& w, const InheritOptions& options,
                            std::optional<std::vector<double>> bias = {});
InherNetLayer inherit_dense(const DenseLayer& teacher,
                            const InheritOptions& options);

// Channel decomposition of a kernel K (N, c, kr, kc): K is flattened to
// K^ (N x c*kr*kc) and factorized; the spatial stage gets Sigma_r^{1/2} V_r^T
// reshaped to (r, c, kr, kc) and each 1x1 head gets U_r Sigma_r^{1/2}.
InherConvLayer inherit_conv(const Tensor4D& kernel,
                            const ConvGeometry& geometry,
                            const InheritOptions& options,
                            std::optional<std::vector<double>> bias = {});
InherConvLayer inherit_conv(const Conv2DLayer& teacher,
                            const InheritOptions& options);

// Many-downs-one-up inheritance: each down = U_r Sigma_r^{1/2} (divided by H
// under kPaperLiteral), shared up = Sigma_r^{1/2} V_r^T. Gate reads the input.
InverseLayer build_inverse(const Matrix& w, const InheritOptions& options,
                           std::optional<std::vector<double>> bias = {});

// Largest rank r' whose two-branch symmetric layer (input-read gate, plus
// output bias when `with_bias`) fits within `budget` parameters; at least 1.
std::size_t symmetric_rank_for_budget(std::size_t m, std::size_t n,
                                      std::size_t budget, bool with_bias);

// Ablation variants of a teacher dense layer:
//   kStandard  inherit_dense
//   kNoSvd     same shapes as kStandard, Kaiming-uniform factors, zero bias
//   kNoGate    inherit_dense with the gate frozen at uniform (not trainable)
//   kSymmetric two (down, up) branches at the count-matched rank
//   kInverse   build_inverse
std::unique_ptr<Layer> make_variant(const DenseLayer& teacher, Variant variant,
                                    const InheritOptions& options);

// Term-by-term assembly of the gradient split
//   grad = sum_h G_h * grad_{theta_h} l + sum_h Delta_h * grad_{theta_g} G_h
// with Delta_h = <d l / d y, f_h(x)>, evaluated per sample and summed,
// compared against layer.backward(). Returns the max absolute deviation over
// all trainable parameters. Frozen gates are detached, so only the head term
// remains.
double gradient_decomposition_check(const InherNetLayer& layer,
                                    const Matrix& x, const LossFn& loss);

struct NetworkInheritOptions {
  Variant variant = Variant::kStandard;
  // One rank per inheritable (dense or conv) layer, or a single value
  // applied to all of them.
  std::vector<std::size_t> ranks{1};
  // When set, each layer's rank is the smallest keeping >= 1 - eps of the
  // spectral energy; overrides `ranks`.
  std::optional<double> energy_epsilon;
  std::size_t heads = 1;
  Combiner combiner = Combiner::kConvexExact;
  GateInput gate_input = GateInput::kCode;
  double gate_init_scale = 0.0;
  std::uint64_t seed = 0;
  // Clip ranks to min(m, n) instead of rejecting them.
  bool clamp_rank = false;
};

// Replaces every dense (and conv) layer of the teacher by its inherited
// counterpart; activations are kept. Throws RangeError naming the layer
// when a rank is out of range.
Network inherit_network(const Network& teacher,
                        const NetworkInheritOptions& options);

}  // namespace inhernet

#endif  // INHERNET_INHERIT_H_
