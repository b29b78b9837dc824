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

#ifndef INHERNET_CONV_H_
#define INHERNET_CONV_H_

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "inhernet/linalg.h"
#include "inhernet/nn.h"

namespace inhernet {

// Dense row-major 4-D array. Convolution kernels use the layout
// (out_channels, in_channels, kernel_rows, kernel_cols).
class Tensor4D {
 public:
  using Dims = std::array<std::size_t, 4>;

  Tensor4D() = default;
  explicit Tensor4D(Dims dims, double fill = 0.0);
  Tensor4D(Dims dims, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t a, std::size_t b, std::size_t c,
                     std::size_t d) {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c,
                    std::size_t d) const {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // dims[0] x (dims[1] * dims[2] * dims[3]) view as a matrix.
  Matrix flatten() const;
  // Inverse of flatten(); product of dims must match the matrix size.
  static Tensor4D from_matrix(const Matrix& m, Dims dims);

 private:
  Dims dims_{0, 0, 0, 0};
  std::vector<double> data_;
};

// Shape of one input image (channels x height x width, row-major) plus the
// sliding-window parameters.
struct ConvGeometry {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t input_size() const { return channels * height * width; }
  // Throws ShapeError unless (size + 2 * padding - k) / stride + 1 > 0.
  std::size_t out_height(std::size_t kernel_rows) const;
  std::size_t out_width(std::size_t kernel_cols) const;
};

// Patch matrix of one image: (out_h * out_w) x (channels * kr * kc), column
// order matching Tensor4D::flatten() of a kernel.
Matrix im2col(std::span<const double> image, const ConvGeometry& g,
              std::size_t kernel_rows, std::size_t kernel_cols);
// Scatter-adds a patch-gradient matrix back onto an image gradient.
void col2im(const Matrix& patches, const ConvGeometry& g,
            std::size_t kernel_rows, std::size_t kernel_cols,
            std::span<double> image);

// 2-D convolution via im2col + matmul. Input rows are flattened images;
// output rows are flattened (out_channels x out_h x out_w) maps.
class Conv2DLayer final : public Layer {
 public:
  Conv2DLayer(Tensor4D kernel, ConvGeometry input,
              std::optional<std::vector<double>> bias = std::nullopt);

  const Tensor4D& kernel() const { return kernel_; }
  Tensor4D& kernel() { return kernel_; }
  const ConvGeometry& geometry() const { return geometry_; }
  bool has_bias() const { return has_bias_; }
  const std::vector<double>& bias() const { return bias_; }
  std::size_t out_channels() const { return kernel_.dims()[0]; }
  std::size_t out_height() const;
  std::size_t out_width() const;

  LayerKind kind() const override { return LayerKind::kConv2D; }
  std::size_t input_width() const override { return geometry_.input_size(); }
  std::size_t output_width() const override;
  Matrix apply(const Matrix& x) const override;
  Matrix forward(const Matrix& x) override;
  Matrix backward(const Matrix& grad_output) override;
  std::vector<ParamRef> params() override;
  std::vector<TensorRef> tensors() override;
  std::size_t parameter_count() const override;
  std::unique_ptr<Layer> clone() const override;

 private:
  Matrix run(const Matrix& x, std::vector<Matrix>* patches) const;

  Tensor4D kernel_;
  ConvGeometry geometry_;
  bool has_bias_;
  std::vector<double> bias_;
  std::vector<double> kernel_grad_;
  std::vector<double> bias_grad_;
  std::optional<std::vector<Matrix>> cached_patches_;
};

}  // namespace inhernet

#endif  // INHERNET_CONV_H_
