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

#ifndef INHERNET_LINALG_H_
#define INHERNET_LINALG_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace inhernet {

// Dense row-major matrix of doubles. A batch of samples is a Matrix with one
// sample per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws ShapeError when data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  static Matrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  Matrix transposed() const;
  // Copy of columns [first, first + count).
  Matrix columns(std::size_t first, std::size_t count) const;
  // Copy of rows [first, first + count).
  Matrix rows_range(std::size_t first, std::size_t count) const;
  // Rows selected by index, in order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;

  std::string shape_string() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);

// a * b. Throws ShapeError naming both shapes when a.cols() != b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b) without forming the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& w);
double max_abs_diff(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);

// Numerically stable softmax (max-subtracted). Throws ShapeError when empty.
std::vector<double> softmax(std::span<const double> logits);
// Row-wise softmax of a batch of logits.
Matrix softmax_rows(const Matrix& logits);

// Truncated singular value decomposition W ~= u * diag(sigma) * v^T.
//
// u is m x r and v is n x r with orthonormal columns; sigma holds the top r
// singular values in nonincreasing order. full_spectrum keeps all min(m, n)
// singular values of the decomposed matrix for error and energy accounting.
struct SvdFactorization {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
  std::vector<double> full_spectrum;

  std::size_t rank() const { return sigma.size(); }
  // u * diag(sigma) * v^T.
  Matrix reconstruct() const;
};

// Jacobi controls. Defaults are the library's production settings.
struct SvdOptions {
  int max_sweeps = 100;
  double tolerance = 1e-12;
};

// Top-r factorization of w computed by one-sided (Hestenes) Jacobi.
//
// Sign convention: the largest-magnitude entry of every left singular vector
// is nonnegative. Throws RangeError unless 1 <= r <= min(rows, cols) and
// NumericalError when the sweep budget is exhausted (residual attached).
SvdFactorization truncated_svd(const Matrix& w, std::size_t r,
                               const SvdOptions& options = {});
// Full thin SVD, r = min(rows, cols).
SvdFactorization full_svd(const Matrix& w, const SvdOptions& options = {});
std::vector<double> singular_values(const Matrix& w);

// Ratio of the largest to the smallest nonzero singular value. Values below
// 1e-12 * sigma_max count as zero. Throws DegenerateInputError for a zero
// matrix.
double condition_number(const Matrix& w);
double condition_number_from_spectrum(std::span<const double> spectrum);

}  // namespace inhernet

#endif  // INHERNET_LINALG_H_
