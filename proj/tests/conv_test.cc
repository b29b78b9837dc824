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

#include <gtest/gtest.h>

#include "inhernet/conv.h"
#include "inhernet/errors.h"
#include "oracles.h"

namespace inhernet {
namespace {

Tensor4D random_kernel(Tensor4D::Dims dims, CounterRng& rng) {
  Tensor4D k(dims);
  for (double& v : k.data()) v = rng.uniform(-1.0, 1.0);
  return k;
}

TEST(ConvTest, ForwardMatchesNestedLoops) {
  CounterRng rng(1);
  const ConvGeometry geometries[] = {
      {3, 5, 5, 1, 0}, {3, 5, 5, 1, 1}, {2, 7, 6, 2, 1}, {1, 4, 4, 1, 0}};
  const Tensor4D::Dims kernels[] = {{4, 3, 5, 5}, {4, 3, 3, 3}, {3, 2, 3, 2},
                                    {2, 1, 1, 1}};
  for (int t = 0; t < 4; ++t) {
    const Tensor4D k = random_kernel(kernels[t], rng);
    const ConvGeometry g = geometries[t];
    std::vector<double> bias(k.dims()[0]);
    for (double& b : bias) b = rng.uniform(-1, 1);
    Conv2DLayer conv(k, g, bias);
    const Matrix x = oracle::random_matrix(3, g.input_size(), rng);
    const Matrix y = conv.apply(x);
    const std::size_t per_channel = y.cols() / k.dims()[0];
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto ref = oracle::nested_loop_conv(x.row(i), k, g);
      for (std::size_t o = 0; o < ref.size(); ++o) {
        EXPECT_NEAR(y(i, o), ref[o] + bias[o / per_channel], 1e-10);
      }
    }
  }
}

TEST(ConvTest, GradientMatchesFiniteDifferences) {
  CounterRng rng(2);
  for (int seed = 0; seed < 5; ++seed) {
    Network net;
    net.add(Conv2DLayer(random_kernel({3, 2, 3, 3}, rng), {2, 5, 5, 1, 1},
                        std::vector<double>{0.1, -0.2, 0.3}));
    const Matrix x = oracle::random_matrix(2, 50, rng);
    const Matrix y = oracle::random_matrix(2, net.output_width(), rng);
    LossFn loss = [&](const Matrix& out) { return mse_loss(out, y); };
    net.backward(loss(net.forward(x)).grad);
    EXPECT_LT(max_relative_deviation(net.gradients(),
                                     finite_difference_grad(net, loss, x, 1e-5)),
              1e-4);
  }
}

TEST(ConvTest, InputGradientMatchesFiniteDifferences) {
  CounterRng rng(3);
  Conv2DLayer conv(random_kernel({2, 2, 2, 3}, rng), {2, 4, 5, 2, 1});
  const Matrix x = oracle::random_matrix(1, 40, rng);
  const Matrix y = oracle::random_matrix(1, conv.output_width(), rng);
  conv.forward(x);
  const Matrix dx = conv.backward(mse_loss(conv.forward(x), y).grad);
  const double h = 1e-5;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    Matrix xp = x, xm = x;
    xp(0, j) += h;
    xm(0, j) -= h;
    const double fd = (mse_loss(conv.apply(xp), y).value -
                       mse_loss(conv.apply(xm), y).value) / (2 * h);
    EXPECT_NEAR(dx(0, j), fd, 1e-7);
  }
}

TEST(ConvTest, OneByOneKernelIsDense) {
  CounterRng rng(4);
  const Tensor4D k = random_kernel({3, 4, 1, 1}, rng);
  Conv2DLayer conv(k, {4, 1, 1, 1, 0});
  const Matrix x = oracle::random_matrix(5, 4, rng);
  EXPECT_LE(max_abs_diff(conv.apply(x), matmul_nt(x, k.flatten())), 1e-14);
}

TEST(ConvTest, GeometryValidation) {
  ConvGeometry g{1, 3, 3, 1, 0};
  EXPECT_EQ(g.out_height(3), 1u);
  EXPECT_THROW(g.out_height(4), ShapeError);
  g.stride = 0;
  EXPECT_THROW(g.out_width(1), ShapeError);
  EXPECT_THROW(Conv2DLayer(Tensor4D({2, 3, 1, 1}), ConvGeometry{2, 3, 3, 1, 0}),
               ShapeError);
}

TEST(TensorTest, FlattenRoundTrip) {
  CounterRng rng(5);
  const Tensor4D k = random_kernel({2, 3, 2, 2}, rng);
  const Matrix m = k.flatten();
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 12u);
  EXPECT_EQ(m(1, 5), k(1, 1, 0, 1));
  const Tensor4D back = Tensor4D::from_matrix(m, k.dims());
  EXPECT_TRUE(std::equal(back.data().begin(), back.data().end(), k.data().begin()));
  EXPECT_THROW(Tensor4D({2, 2, 2, 2}, std::vector<double>(15)), ShapeError);
}

TEST(ConvTest, BackwardBeforeForward) {
  Conv2DLayer conv(Tensor4D({1, 1, 1, 1}, 1.0), {1, 2, 2, 1, 0});
  EXPECT_THROW(conv.backward(Matrix(1, 4)), StateError);
}

}  // namespace
}  // namespace inhernet
