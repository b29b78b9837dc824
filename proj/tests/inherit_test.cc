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

#include <cmath>

#include <gtest/gtest.h>

#include "inhernet/errors.h"
#include "inhernet/inherit.h"
#include "inhernet/theory.h"
#include "oracles.h"

namespace inhernet {
namespace {

InheritOptions options(std::size_t rank, std::size_t heads,
                       Combiner combiner = Combiner::kConvexExact,
                       GateInput gate = GateInput::kCode) {
  InheritOptions o;
  o.rank = rank;
  o.heads = heads;
  o.combiner = combiner;
  o.gate_input = gate;
  return o;
}

Matrix truncation(const Matrix& w, std::size_t r) {
  return truncated_svd(w, r).reconstruct();
}

// Scales x's rows to norm <= 10.
Matrix bounded_inputs(std::size_t rows, std::size_t cols, CounterRng& rng) {
  Matrix x = oracle::random_matrix(rows, cols, rng);
  for (std::size_t i = 0; i < rows; ++i) {
    double n = 0.0;
    for (double v : x.row(i)) n += v * v;
    const double s = 10.0 * rng.uniform() / std::sqrt(n);
    for (double& v : x.row(i)) v *= s;
  }
  return x;
}

void randomize_gate(Gating& g, CounterRng& rng, double scale = 1.0) {
  for (double& v : g.weight.data()) v = rng.uniform(-scale, scale);
  for (double& v : g.bias) v = rng.uniform(-scale, scale);
}

void perturb(std::vector<Matrix>& ms, CounterRng& rng, double scale) {
  for (Matrix& m : ms) {
    for (double& v : m.data()) v += rng.uniform(-scale, scale);
  }
}

TEST(InheritDenseTest, ExactRankReconstructsTeacher) {
  CounterRng rng(1);
  const Matrix w = oracle::random_low_rank(7, 5, 2, rng);
  const InherNetLayer layer = inherit_dense(w, options(2, 3));
  const Matrix x = oracle::random_matrix(50, 7, rng);
  EXPECT_LE(max_abs_diff(layer.apply(x), matmul(x, w)), 1e-10);
}

TEST(InheritDenseTest, FactorsAreSplitSingularValues) {
  CounterRng rng(2);
  const Matrix w = oracle::random_matrix(6, 4, rng);
  const SvdFactorization f = truncated_svd(w, 3);
  const InherNetLayer layer = inherit_dense(w, options(3, 2));
  for (std::size_t j = 0; j < 3; ++j) {
    const double root = std::sqrt(f.sigma[j]);
    for (std::size_t i = 0; i < 6; ++i) {
      EXPECT_NEAR(layer.w_down()(i, j), f.u(i, j) * root, 1e-14);
    }
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(layer.heads()[1](j, k), root * f.v(k, j), 1e-14);
    }
  }
  EXPECT_EQ(layer.heads()[0], layer.heads()[1]);
  for (double v : layer.gate().weight.data()) EXPECT_EQ(v, 0.0);
  for (double v : layer.gate().bias) EXPECT_EQ(v, 0.0);
}

TEST(InheritDenseTest, SingleHeadModesAgreeWithTwoFactorLayer) {
  CounterRng rng(3);
  const Matrix w = oracle::random_matrix(8, 6, rng);
  const InherNetLayer convex = inherit_dense(w, options(3, 1));
  const InherNetLayer paper = inherit_dense(w, options(3, 1, Combiner::kPaperLiteral));
  const Matrix x = oracle::random_matrix(10, 8, rng);
  EXPECT_EQ(convex.apply(x), paper.apply(x));
  const Matrix plain = matmul(matmul(x, convex.w_down()), convex.heads()[0]);
  EXPECT_LE(max_abs_diff(convex.apply(x), plain), 1e-13);
}

TEST(InheritDenseTest, PaperLiteralScalesByOneOverH) {
  CounterRng rng(4);
  const Matrix w = oracle::random_matrix(12, 9, rng);
  const Matrix wr = truncation(w, 4);
  for (std::size_t h : {2, 3, 5}) {
    const InherNetLayer layer =
        inherit_dense(w, options(4, h, Combiner::kPaperLiteral));
    const Matrix x = oracle::random_matrix(20, 12, rng);
    const Matrix expected = (1.0 / static_cast<double>(h)) * matmul(x, wr);
    EXPECT_LE(max_abs_diff(layer.apply(x), expected), 1e-12);
  }
}

TEST(InheritDenseTest, InitializationEquivalenceConvex) {
  CounterRng rng(5);
  for (int t = 0; t < 10; ++t) {
    const std::size_t m = 3 + rng.below(20), n = 3 + rng.below(20);
    const std::size_t r = 1 + rng.below(std::min(m, n));
    const std::size_t h = 1 + rng.below(5);
    const Matrix w = oracle::random_matrix(m, n, rng);
    for (GateInput gi : {GateInput::kCode, GateInput::kInput}) {
      const InherNetLayer layer =
          inherit_dense(w, options(r, h, Combiner::kConvexExact, gi));
      const Matrix x = bounded_inputs(30, m, rng);
      EXPECT_LE(max_abs_diff(layer.apply(x), matmul(x, truncation(w, r))), 1e-6);
    }
  }
}

TEST(InheritDenseTest, TeacherBiasLandsOnOutput) {
  CounterRng rng(6);
  DenseLayer teacher(oracle::random_low_rank(5, 4, 2, rng),
                     std::vector<double>{1, 2, 3, 4});
  const InherNetLayer layer = inherit_dense(teacher, options(2, 2));
  const Matrix x = oracle::random_matrix(6, 5, rng);
  EXPECT_LE(max_abs_diff(layer.apply(x), teacher.apply(x)), 1e-10);
}

TEST(InheritDenseTest, RankAndHeadValidation) {
  const Matrix w(4, 3, 1.0);
  EXPECT_THROW(inherit_dense(w, options(0, 1)), RangeError);
  EXPECT_THROW(inherit_dense(w, options(4, 1)), RangeError);
  EXPECT_THROW(inherit_dense(w, options(2, 0)), RangeError);
}

TEST(ForwardInherTest, ZeroGateIsUniform) {
  CounterRng rng(7);
  const InherNetLayer layer = inherit_dense(oracle::random_matrix(6, 5, rng), options(3, 4));
  const Matrix g = layer.gates(oracle::random_matrix(9, 6, rng));
  for (double v : g.data()) EXPECT_EQ(v, 0.25);
}

TEST(ForwardInherTest, IdenticalHeadsIgnoreGating) {
  CounterRng rng(8);
  InherNetLayer layer = inherit_dense(oracle::random_matrix(6, 5, rng), options(3, 3));
  const Matrix x = oracle::random_matrix(9, 6, rng);
  const Matrix before = layer.apply(x);
  randomize_gate(layer.gate(), rng, 3.0);
  EXPECT_LE(max_abs_diff(layer.apply(x), before), 1e-13);
}

TEST(ForwardInherTest, MatchesStraightLineOracle) {
  CounterRng rng(9);
  for (GateInput gi : {GateInput::kCode, GateInput::kInput}) {
    InherNetLayer layer =
        inherit_dense(oracle::random_matrix(7, 6, rng), options(3, 3, Combiner::kConvexExact, gi));
    randomize_gate(layer.gate(), rng);
    perturb(layer.heads(), rng, 0.5);
    layer.set_head_biases({{0.1, 0.2, 0.3, 0.4, 0.5, 0.6},
                           {-1, 0, 1, 0, -1, 0},
                           {0, 0, 0, 0, 0, 2}});
    layer.set_bias({1, 1, 1, 1, 1, 1});
    const Matrix x = oracle::random_matrix(12, 7, rng);
    EXPECT_LE(max_abs_diff(layer.apply(x), oracle::straight_line_inhernet(layer, x)),
              1e-12);
  }
}

TEST(ForwardInherTest, GatesFormASimplex) {
  CounterRng rng(10);
  InherNetLayer layer = inherit_dense(oracle::random_matrix(8, 8, rng), options(4, 5));
  randomize_gate(layer.gate(), rng, 50.0);
  const Matrix g = layer.gates(oracle::random_matrix(100, 8, rng, 10.0));
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double sum = 0.0;
    for (double v : g.row(i)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ForwardInherTest, LogitShiftInvariance) {
  CounterRng rng(11);
  InherNetLayer layer = inherit_dense(oracle::random_matrix(6, 5, rng), options(3, 3));
  perturb(layer.heads(), rng, 0.5);
  // Dyadic biases with a zero gate weight keep every shifted logit exact.
  for (double& b : layer.gate().bias) b = static_cast<double>(rng.below(64)) / 8.0;
  const Matrix x = oracle::random_matrix(10, 6, rng);
  const Matrix before = layer.apply(x);
  for (double& b : layer.gate().bias) b += 1024.0;
  EXPECT_EQ(layer.apply(x), before);

  randomize_gate(layer.gate(), rng);
  const Matrix general = layer.apply(x);
  for (double& b : layer.gate().bias) b += 3.25;
  EXPECT_LE(max_abs_diff(layer.apply(x), general), 1e-13);
}

TEST(ForwardInherTest, ShapeMismatch) {
  CounterRng rng(12);
  const InherNetLayer layer = inherit_dense(oracle::random_matrix(6, 5, rng), options(2, 2));
  EXPECT_THROW(layer.apply(Matrix(2, 5)), ShapeError);
}

class GradientDecompositionTest : public ::testing::TestWithParam<int> {};

TEST_P(GradientDecompositionTest, AssemblyMatchesBackward) {
  const int seed = GetParam();
  CounterRng rng(1000 + seed);
  const std::size_t m = 3 + rng.below(8), n = 2 + rng.below(8);
  const std::size_t r = 1 + rng.below(std::min(m, n));
  const std::size_t h = 1 + rng.below(4);
  const GateInput gi = seed % 2 ? GateInput::kInput : GateInput::kCode;
  InherNetLayer layer =
      inherit_dense(oracle::random_matrix(m, n, rng), options(r, h, Combiner::kConvexExact, gi));
  randomize_gate(layer.gate(), rng);
  perturb(layer.heads(), rng, 0.5);
  if (seed % 3 == 0) {
    std::vector<std::vector<double>> hb(h, std::vector<double>(n));
    for (auto& b : hb) for (double& v : b) v = rng.uniform(-1, 1);
    layer.set_head_biases(hb);
  }
  if (seed % 4 == 0) layer.set_bias(std::vector<double>(n, 0.3));
  const bool frozen = seed % 5 == 0;
  if (frozen) layer.set_gate_trainable(false);
  const Matrix x = oracle::random_matrix(6, m, rng);
  const Matrix y = oracle::random_matrix(6, n, rng);
  LossFn loss = [&](const Matrix& out) { return mse_loss(out, y); };
  EXPECT_LT(gradient_decomposition_check(layer, x, loss), 1e-8);
  // A detached gate is not differentiated through, so finite differences
  // only agree when it trains.
  if (frozen) return;
  Network net;
  net.add(layer);
  net.backward(loss(net.forward(x)).grad);
  EXPECT_LT(max_relative_deviation(net.gradients(),
                                   finite_difference_grad(net, loss, x, 1e-5)),
            1e-4);
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientDecompositionTest, ::testing::Range(0, 20));

TEST(GradientDecompositionTest, FrozenGateLeavesHeadTermOnly) {
  CounterRng rng(13);
  InherNetLayer layer = inherit_dense(oracle::random_matrix(5, 4, rng), options(2, 3));
  randomize_gate(layer.gate(), rng);
  perturb(layer.heads(), rng, 0.5);
  layer.set_gate_trainable(false);
  const Matrix x = oracle::random_matrix(4, 5, rng);
  const Matrix y = oracle::random_matrix(4, 4, rng);
  EXPECT_LT(gradient_decomposition_check(
                layer, x, [&](const Matrix& o) { return mse_loss(o, y); }),
            1e-8);
  // A detached gate exposes no parameters.
  for (const ParamRef& p : layer.params()) EXPECT_EQ(p.name.find("gate"), std::string::npos);
}

TEST(GradientDecompositionTest, SingleHeadIsChainRule) {
  CounterRng rng(14);
  InherNetLayer layer = inherit_dense(oracle::random_matrix(5, 4, rng), options(2, 1));
  const Matrix x = oracle::random_matrix(4, 5, rng);
  const Matrix y = oracle::random_matrix(4, 4, rng);
  LossFn loss = [&](const Matrix& o) { return mse_loss(o, y); };
  EXPECT_LT(gradient_decomposition_check(layer, x, loss), 1e-8);
  // d/d(w_down) = x^T dy U^T, d/dU = z^T dy.
  InherNetLayer copy = layer;
  const Matrix dy = loss(copy.forward(x)).grad;
  copy.backward(dy);
  const auto params = copy.params();
  const Matrix d_down = matmul_tn(x, matmul_nt(dy, layer.heads()[0]));
  for (std::size_t i = 0; i < d_down.size(); ++i) {
    EXPECT_NEAR(params[0].grad[i], d_down.data()[i], 1e-13);
  }
  // Softmax over one head is constant, so the gate gradient is zero.
  for (const ParamRef& p : params) {
    if (p.name.starts_with("gate")) {
      for (double g : p.grad) EXPECT_NEAR(g, 0.0, 1e-15);
    }
  }
}

TEST(InheritConvTest, OneByOneKernelMatchesDense) {
  CounterRng rng(15);
  Tensor4D k({5, 4, 1, 1});
  for (double& v : k.data()) v = rng.uniform(-1, 1);
  const ConvGeometry g{4, 1, 1, 1, 0};
  const InherConvLayer conv = inherit_conv(k, g, options(3, 2));
  const InherNetLayer dense = inherit_dense(k.flatten().transposed(), options(3, 2));
  const Matrix x = oracle::random_matrix(8, 4, rng);
  EXPECT_LE(max_abs_diff(conv.apply(x), dense.apply(x)), 1e-10);
}

TEST(InheritConvTest, ExactRankKernelReproducesConv) {
  CounterRng rng(16);
  const Matrix flat = oracle::random_low_rank(6, 3 * 3 * 3, 2, rng);
  const Tensor4D k = Tensor4D::from_matrix(flat, {6, 3, 3, 3});
  const ConvGeometry g{3, 6, 6, 1, 1};
  const Conv2DLayer original(k, g, std::vector<double>{1, 2, 3, 4, 5, 6});
  const InherConvLayer layer = inherit_conv(original, options(2, 3));
  const Matrix x = oracle::random_matrix(4, g.input_size(), rng);
  EXPECT_LE(max_abs_diff(layer.apply(x), original.apply(x)), 1e-9);
}

TEST(InheritConvTest, RandomKernelMatchesTruncatedIm2col) {
  CounterRng rng(17);
  Tensor4D k({6, 3, 3, 3});
  for (double& v : k.data()) v = rng.uniform(-1, 1);
  const ConvGeometry g{3, 8, 8, 1, 0};
  const InherConvLayer layer = inherit_conv(k, g, options(4, 2));
  const Matrix kr = truncation(k.flatten(), 4);
  const Matrix x = oracle::random_matrix(1, g.input_size(), rng);
  const Matrix patches = im2col(x.row(0), g, 3, 3);
  const Matrix expected = matmul_nt(kr, patches);  // channels x positions
  const Matrix got = layer.apply(x);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(got.data()[i], expected.data()[i], 1e-8);
  }
}

TEST(InheritConvTest, GradientsMatchFiniteDifferences) {
  CounterRng rng(18);
  for (int t = 0; t < 4; ++t) {
    Tensor4D k({4, 2, 3, 3});
    for (double& v : k.data()) v = rng.uniform(-1, 1);
    InheritOptions o = options(2, 3);
    o.gate_init_scale = 1.0;
    o.seed = t;
    InherConvLayer layer = inherit_conv(k, {2, 5, 5, 1, 1}, o, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    Network net;
    net.add(layer);
    const Matrix x = oracle::random_matrix(3, 50, rng);
    const Matrix y = oracle::random_matrix(3, net.output_width(), rng);
    LossFn loss = [&](const Matrix& out) { return mse_loss(out, y); };
    net.backward(loss(net.forward(x)).grad);
    EXPECT_LT(max_relative_deviation(net.gradients(),
                                     finite_difference_grad(net, loss, x, 1e-5)),
              1e-4);
  }
}

TEST(InheritConvTest, RankValidation) {
  EXPECT_THROW(inherit_conv(Tensor4D({2, 1, 1, 1}, 1.0), {1, 2, 2, 1, 0}, options(3, 1)),
               RangeError);
}

TEST(InverseTest, SingleHeadMatchesInheritDense) {
  CounterRng rng(19);
  const Matrix w = oracle::random_matrix(7, 5, rng);
  const InverseLayer inv = build_inverse(w, options(3, 1));
  const InherNetLayer std_layer = inherit_dense(w, options(3, 1));
  const Matrix x = oracle::random_matrix(15, 7, rng);
  EXPECT_LE(max_abs_diff(inv.apply(x), std_layer.apply(x)), 1e-13);
}

TEST(InverseTest, ExactRankReconstructs) {
  CounterRng rng(20);
  const Matrix w = oracle::random_low_rank(8, 6, 3, rng);
  const InverseLayer inv = build_inverse(w, options(3, 4));
  const Matrix x = oracle::random_matrix(15, 8, rng);
  EXPECT_LE(max_abs_diff(inv.apply(x), matmul(x, w)), 1e-10);
}

TEST(InverseTest, MatchesStandardAtInit) {
  CounterRng rng(21);
  const Matrix w = oracle::random_matrix(9, 7, rng);
  const Matrix x = oracle::random_matrix(15, 9, rng);
  EXPECT_LE(max_abs_diff(build_inverse(w, options(4, 3)).apply(x),
                         inherit_dense(w, options(4, 3)).apply(x)),
            1e-10);
  EXPECT_LE(max_abs_diff(build_inverse(w, options(4, 3, Combiner::kPaperLiteral)).apply(x),
                         inherit_dense(w, options(4, 3, Combiner::kPaperLiteral)).apply(x)),
            1e-10);
}

TEST(InverseTest, GradientsMatchFiniteDifferences) {
  CounterRng rng(22);
  InheritOptions o = options(3, 3);
  o.gate_init_scale = 1.0;
  InverseLayer inv = build_inverse(oracle::random_matrix(6, 5, rng), o,
                                   std::vector<double>(5, 0.2));
  Network net;
  net.add(inv);
  const Matrix x = oracle::random_matrix(5, 6, rng);
  const Matrix y = oracle::random_matrix(5, 5, rng);
  LossFn loss = [&](const Matrix& out) { return mse_loss(out, y); };
  net.backward(loss(net.forward(x)).grad);
  EXPECT_LT(max_relative_deviation(net.gradients(),
                                   finite_difference_grad(net, loss, x, 1e-5)),
            1e-4);
}

TEST(VariantTest, NoGateIsMeanOfHeads) {
  CounterRng rng(23);
  DenseLayer teacher(oracle::random_matrix(6, 5, rng), std::nullopt);
  auto layer = make_variant(teacher, Variant::kNoGate, options(3, 3));
  auto* inh = dynamic_cast<InherNetLayer*>(layer.get());
  ASSERT_NE(inh, nullptr);
  perturb(inh->heads(), rng, 0.5);
  const Matrix x = oracle::random_matrix(8, 6, rng);
  Matrix mean(8, 5);
  for (std::size_t h = 0; h < 3; ++h) mean += inh->head_output(x, h);
  mean *= 1.0 / 3.0;
  EXPECT_LE(max_abs_diff(inh->apply(x), mean), 1e-13);
  EXPECT_EQ(inh->parameter_count(), 6u * 3 + 3 * 3 * 5);
}

TEST(VariantTest, NoSvdMatchesStandardShapes) {
  CounterRng rng(24);
  DenseLayer teacher(oracle::random_matrix(10, 8, rng), std::vector<double>(8, 1.0));
  const auto std_layer = make_variant(teacher, Variant::kStandard, options(4, 3));
  const auto no_svd = make_variant(teacher, Variant::kNoSvd, options(4, 3));
  EXPECT_EQ(std_layer->parameter_count(), no_svd->parameter_count());
  const auto* inh = dynamic_cast<const InherNetLayer*>(no_svd.get());
  ASSERT_NE(inh, nullptr);
  const double bound = std::sqrt(6.0 / 10.0);
  for (double v : inh->w_down().data()) EXPECT_LE(std::abs(v), bound);
  for (double v : *inh->bias()) EXPECT_EQ(v, 0.0);
}

std::size_t enumerated_count(Layer& layer) {
  std::size_t total = 0;
  for (const ParamRef& p : layer.params()) total += p.value.size();
  return total;
}

TEST(VariantTest, SymmetricCountFitsBudgetWithinOneRankStep) {
  CounterRng rng(25);
  for (std::size_t r = 2; r <= 64; r += 7) {
    for (bool bias : {false, true}) {
      DenseLayer teacher(oracle::random_matrix(64, 64, rng),
                         bias ? std::optional<std::vector<double>>(std::vector<double>(64, 0.0))
                              : std::nullopt);
      const auto standard = make_variant(teacher, Variant::kStandard, options(r, 3));
      const auto sym = make_variant(teacher, Variant::kSymmetric, options(r, 3));
      const std::size_t a = enumerated_count(*standard);
      const std::size_t b = enumerated_count(*sym);
      EXPECT_EQ(a, standard->parameter_count());
      EXPECT_EQ(b, sym->parameter_count());
      EXPECT_LE(b, a);
      // One more symmetric rank adds two downs and two ups.
      EXPECT_LT(a - b, 2u * (64 + 64)) << "r=" << r;
    }
  }
}

TEST(VariantTest, SymmetricCountWithinTwoPercent) {
  CounterRng rng(26);
  for (std::size_t r : {48, 56, 64}) {
    for (bool bias : {false, true}) {
      DenseLayer teacher(oracle::random_matrix(64, 64, rng),
                         bias ? std::optional<std::vector<double>>(std::vector<double>(64, 0.0))
                              : std::nullopt);
      const auto standard = make_variant(teacher, Variant::kStandard, options(r, 3));
      const auto sym = make_variant(teacher, Variant::kSymmetric, options(r, 3));
      const double a = static_cast<double>(enumerated_count(*standard));
      const double b = static_cast<double>(enumerated_count(*sym));
      EXPECT_LE(std::abs(a - b) / a, 0.02) << "r=" << r << " bias=" << bias;
    }
  }
}

TEST(VariantTest, SymmetricGradientsMatchFiniteDifferences) {
  CounterRng rng(26);
  DenseLayer teacher(oracle::random_matrix(6, 5, rng), std::vector<double>(5, 0.5));
  InheritOptions o = options(2, 3);
  o.gate_init_scale = 1.0;
  Network net;
  net.add(make_variant(teacher, Variant::kSymmetric, o));
  const Matrix x = oracle::random_matrix(5, 6, rng);
  const Matrix y = oracle::random_matrix(5, 5, rng);
  LossFn loss = [&](const Matrix& out) { return mse_loss(out, y); };
  net.backward(loss(net.forward(x)).grad);
  EXPECT_LT(max_relative_deviation(net.gradients(),
                                   finite_difference_grad(net, loss, x, 1e-5)),
            1e-4);
}

TEST(InheritNetworkTest, RankTooLargeNamesLayer) {
  CounterRng rng(27);
  const std::size_t widths[] = {8, 6, 3};
  const Network teacher = make_mlp(widths, rng);
  NetworkInheritOptions o;
  o.ranks = {4};
  try {
    inherit_network(teacher, o);
    FAIL();
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
  }
  o.clamp_rank = true;
  const Network student = inherit_network(teacher, o);
  EXPECT_EQ(dynamic_cast<const InherNetLayer&>(student.layer(2)).rank(), 3u);
}

TEST(InheritNetworkTest, EnergyRanksAndActivationsPreserved) {
  CounterRng rng(28);
  const std::size_t widths[] = {10, 12, 4};
  const Network teacher = make_mlp(widths, rng);
  NetworkInheritOptions o;
  o.energy_epsilon = 1e-12;
  o.heads = 2;
  const Network student = inherit_network(teacher, o);
  ASSERT_EQ(student.size(), 3u);
  EXPECT_EQ(student.layer(1).kind(), LayerKind::kRelu);
  const Matrix x = oracle::random_matrix(20, 10, rng);
  EXPECT_LE(max_abs_diff(student.apply(x), teacher.apply(x)), 1e-10);
}

TEST(ParseTest, RoundTripsNames) {
  for (Variant v : {Variant::kStandard, Variant::kNoSvd, Variant::kNoGate,
                    Variant::kSymmetric, Variant::kInverse}) {
    EXPECT_EQ(parse_variant(to_string(v)), v);
  }
  EXPECT_EQ(parse_combiner("paper"), Combiner::kPaperLiteral);
  EXPECT_EQ(parse_gate_input("input"), GateInput::kInput);
  EXPECT_THROW(parse_variant("lora"), RangeError);
}

}  // namespace
}  // namespace inhernet
