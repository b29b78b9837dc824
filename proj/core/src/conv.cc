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

#include "inhernet/conv.h"

#include <utility>

#include "inhernet/errors.h"

namespace inhernet {

Tensor4D::Tensor4D(Dims dims, double fill)
    : dims_(dims), data_(dims[0] * dims[1] * dims[2] * dims[3], fill) {}

Tensor4D::Tensor4D(Dims dims, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  if (data_.size() != dims[0] * dims[1] * dims[2] * dims[3]) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match its dims");
  }
}

Matrix Tensor4D::flatten() const {
  return Matrix(dims_[0], dims_[1] * dims_[2] * dims_[3], data_);
}

Tensor4D Tensor4D::from_matrix(const Matrix& m, Dims dims) {
  std::vector<double> data(m.data().begin(), m.data().end());
  return Tensor4D(dims, std::move(data));
}

std::size_t ConvGeometry::out_height(std::size_t kernel_rows) const {
  if (stride == 0) throw ShapeError("convolution stride must be positive");
  if (height + 2 * padding < kernel_rows) {
    throw ShapeError("kernel height " + std::to_string(kernel_rows) +
                     " exceeds padded input height " +
                     std::to_string(height + 2 * padding));
  }
  return (height + 2 * padding - kernel_rows) / stride + 1;
}

std::size_t ConvGeometry::out_width(std::size_t kernel_cols) const {
  if (stride == 0) throw ShapeError("convolution stride must be positive");
  if (width + 2 * padding < kernel_cols) {
    throw ShapeError("kernel width " + std::to_string(kernel_cols) +
                     " exceeds padded input width " +
                     std::to_string(width + 2 * padding));
  }
  return (width + 2 * padding - kernel_cols) / stride + 1;
}

Matrix im2col(std::span<const double> image, const ConvGeometry& g,
              std::size_t kernel_rows, std::size_t kernel_cols) {
  const std::size_t oh = g.out_height(kernel_rows);
  const std::size_t ow = g.out_width(kernel_cols);
  Matrix patches(oh * ow, g.channels * kernel_rows * kernel_cols);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      auto row = patches.row(oy * ow + ox);
      std::size_t col = 0;
      for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t i = 0; i < kernel_rows; ++i) {
          for (std::size_t j = 0; j < kernel_cols; ++j, ++col) {
            const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                           static_cast<std::ptrdiff_t>(g.padding);
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                           static_cast<std::ptrdiff_t>(g.padding);
            if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(g.height) ||
                x >= static_cast<std::ptrdiff_t>(g.width)) {
              continue;
            }
            row[col] = image[(c * g.height + static_cast<std::size_t>(y)) *
                                 g.width +
                             static_cast<std::size_t>(x)];
          }
        }
      }
    }
  }
  return patches;
}

void col2im(const Matrix& patches, const ConvGeometry& g,
            std::size_t kernel_rows, std::size_t kernel_cols,
            std::span<double> image) {
  const std::size_t oh = g.out_height(kernel_rows);
  const std::size_t ow = g.out_width(kernel_cols);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const auto row = patches.row(oy * ow + ox);
      std::size_t col = 0;
      for (std::size_t c = 0; c < g.channels; ++c) {
        for (std::size_t i = 0; i < kernel_rows; ++i) {
          for (std::size_t j = 0; j < kernel_cols; ++j, ++col) {
            const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + i) -
                           static_cast<std::ptrdiff_t>(g.padding);
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + j) -
                           static_cast<std::ptrdiff_t>(g.padding);
            if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(g.height) ||
                x >= static_cast<std::ptrdiff_t>(g.width)) {
              continue;
            }
            image[(c * g.height + static_cast<std::size_t>(y)) * g.width +
                  static_cast<std::size_t>(x)] += row[col];
          }
        }
      }
    }
  }
}

Conv2DLayer::Conv2DLayer(Tensor4D kernel, ConvGeometry input,
                         std::optional<std::vector<double>> bias)
    : kernel_(std::move(kernel)),
      geometry_(input),
      has_bias_(bias.has_value()) {
  if (kernel_.dims()[1] != geometry_.channels) {
    throw ShapeError("kernel expects " + std::to_string(kernel_.dims()[1]) +
                     " input channels, geometry has " +
                     std::to_string(geometry_.channels));
  }
  // Validates the output size.
  geometry_.out_height(kernel_.dims()[2]);
  geometry_.out_width(kernel_.dims()[3]);
  if (has_bias_) {
    if (bias->size() != kernel_.dims()[0]) {
      throw ShapeError("conv bias length " + std::to_string(bias->size()) +
                       " does not match " + std::to_string(kernel_.dims()[0]) +
                       " output channels");
    }
    bias_ = std::move(*bias);
  }
}

std::size_t Conv2DLayer::out_height() const {
  return geometry_.out_height(kernel_.dims()[2]);
}

std::size_t Conv2DLayer::out_width() const {
  return geometry_.out_width(kernel_.dims()[3]);
}

std::size_t Conv2DLayer::output_width() const {
  return out_channels() * out_height() * out_width();
}

Matrix Conv2DLayer::run(const Matrix& x, std::vector<Matrix>* patches) const {
  if (x.cols() != input_width()) {
    throw ShapeError("conv2d expects width " + std::to_string(input_width()) +
                     ", got " + x.shape_string());
  }
  const Matrix flat = kernel_.flatten();
  const std::size_t spatial = out_height() * out_width();
  const std::size_t n_out = out_channels();
  Matrix y(x.rows(), n_out * spatial);
  if (patches) patches->clear();
  for (std::size_t b = 0; b < x.rows(); ++b) {
    Matrix p = im2col(x.row(b), geometry_, kernel_.dims()[2],
                      kernel_.dims()[3]);
    const Matrix out = matmul_nt(p, flat);  // spatial x n_out
    auto yb = y.row(b);
    for (std::size_t n = 0; n < n_out; ++n) {
      const double shift = has_bias_ ? bias_[n] : 0.0;
      for (std::size_t l = 0; l < spatial; ++l) {
        yb[n * spatial + l] = out(l, n) + shift;
      }
    }
    if (patches) patches->push_back(std::move(p));
  }
  return y;
}

Matrix Conv2DLayer::apply(const Matrix& x) const { return run(x, nullptr); }

Matrix Conv2DLayer::forward(const Matrix& x) {
  std::vector<Matrix> patches;
  Matrix y = run(x, &patches);
  cached_patches_ = std::move(patches);
  return y;
}

Matrix Conv2DLayer::backward(const Matrix& grad_output) {
  if (!cached_patches_) throw StateError("conv2d backward before forward");
  const auto& patches = *cached_patches_;
  if (grad_output.rows() != patches.size() ||
      grad_output.cols() != output_width()) {
    throw ShapeError("conv2d backward gradient " +
                     grad_output.shape_string() + " does not match forward");
  }
  const Matrix flat = kernel_.flatten();
  const std::size_t spatial = out_height() * out_width();
  const std::size_t n_out = out_channels();
  Matrix kernel_grad(flat.rows(), flat.cols());
  bias_grad_.assign(has_bias_ ? n_out : 0, 0.0);
  Matrix dx(grad_output.rows(), input_width());
  for (std::size_t b = 0; b < patches.size(); ++b) {
    Matrix d_out(spatial, n_out);
    const auto gb = grad_output.row(b);
    for (std::size_t n = 0; n < n_out; ++n) {
      for (std::size_t l = 0; l < spatial; ++l) {
        d_out(l, n) = gb[n * spatial + l];
        if (has_bias_) bias_grad_[n] += gb[n * spatial + l];
      }
    }
    kernel_grad += matmul_tn(d_out, patches[b]);
    const Matrix d_patches = matmul(d_out, flat);
    col2im(d_patches, geometry_, kernel_.dims()[2], kernel_.dims()[3],
           dx.row(b));
  }
  kernel_grad_.assign(kernel_grad.data().begin(), kernel_grad.data().end());
  return dx;
}

std::vector<ParamRef> Conv2DLayer::params() {
  kernel_grad_.resize(kernel_.size(), 0.0);
  std::vector<ParamRef> out{{"kernel", kernel_.data(), kernel_grad_}};
  if (has_bias_) {
    bias_grad_.resize(bias_.size(), 0.0);
    out.push_back({"bias", bias_, bias_grad_});
  }
  return out;
}

std::vector<TensorRef> Conv2DLayer::tensors() {
  const auto& d = kernel_.dims();
  std::vector<TensorRef> out{{"kernel", {d[0], d[1], d[2], d[3]},
                              kernel_.data()}};
  if (has_bias_) out.push_back({"bias", {bias_.size()}, bias_});
  return out;
}

std::size_t Conv2DLayer::parameter_count() const {
  return kernel_.size() + (has_bias_ ? bias_.size() : 0);
}

std::unique_ptr<Layer> Conv2DLayer::clone() const {
  auto copy = std::make_unique<Conv2DLayer>(*this);
  copy->cached_patches_.reset();
  return copy;
}

}  // namespace inhernet
