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

#include "inhernet/linalg.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "inhernet/errors.h"

namespace inhernet {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data holds " + std::to_string(data_.size()) +
                     " values, shape " + shape_string() + " needs " +
                     std::to_string(rows * cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer for Matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

Matrix Matrix::columns(std::size_t first, std::size_t count) const {
  if (first + count > cols_) {
    throw RangeError("columns [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") out of range for " +
                     shape_string());
  }
  Matrix out(rows_, count);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
  }
  return out;
}

Matrix Matrix::rows_range(std::size_t first, std::size_t count) const {
  if (first + count > rows_) {
    throw RangeError("rows [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") out of range for " +
                     shape_string());
  }
  std::vector<double> data(data_.begin() + first * cols_,
                           data_.begin() + (first + count) * cols_);
  return Matrix(count, cols_, std::move(data));
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= rows_) {
      throw RangeError("row index " + std::to_string(indices[k]) +
                       " out of range for " + shape_string());
    }
    std::copy_n(data_.begin() + indices[k] * cols_, cols_,
                out.data_.begin() + k * cols_);
  }
  return out;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw ShapeError("cannot add " + other.shape_string() + " to " +
                     shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw ShapeError("cannot subtract " + other.shape_string() + " from " +
                     shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

namespace {

void require_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) {
    throw NumericalError(std::string(op) + " produced a non-finite entry");
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape_string() + " * " +
                     b.shape_string());
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  require_finite(c, "matmul");
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn shape mismatch: " + a.shape_string() +
                     "^T * " + b.shape_string());
  }
  Matrix c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* bk = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  require_finite(c, "matmul_tn");
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt shape mismatch: " + a.shape_string() + " * " +
                     b.shape_string() + "^T");
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = dot(ai, b.row(j));
  }
  require_finite(c, "matmul_nt");
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot of lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_norm(const Matrix& w) {
  // Scaled accumulation keeps huge or tiny entries from over/underflowing.
  double scale = 0.0;
  for (double v : w.data()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : w.data()) {
    const double s = v / scale;
    sum += s * s;
  }
  return scale * std::sqrt(sum);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("max_abs_diff shape mismatch: " + a.shape_string() +
                     " vs " + b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto p = softmax(logits.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

Matrix SvdFactorization::reconstruct() const {
  Matrix scaled = u;
  for (std::size_t i = 0; i < scaled.rows(); ++i) {
    for (std::size_t j = 0; j < sigma.size(); ++j) scaled(i, j) *= sigma[j];
  }
  return matmul_nt(scaled, v);
}

namespace {

// Thin SVD of a tall matrix (rows >= cols) given column-major. Returns the
// unsorted singular values and overwrites `cols` with U * Sigma, `v` with V.
void hestenes_jacobi(std::size_t m, std::size_t n, std::vector<double>& cols,
                     std::vector<double>& v, const SvdOptions& options) {
  v.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) v[j * n + j] = 1.0;

  double residual = 0.0;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    bool rotated = false;
    residual = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* ap = &cols[p * m];
        double* aq = &cols[q * m];
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += ap[i] * ap[i];
          beta += aq[i] * aq[i];
          gamma += ap[i] * aq[i];
        }
        if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) continue;
        const double off = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, off);
        if (off <= options.tolerance) continue;
        rotated = true;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = ap[i], y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        double* vp = &v[p * n];
        double* vq = &v[q * n];
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i], y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericalError("Jacobi SVD did not converge in " +
                           std::to_string(options.max_sweeps) +
                           " sweeps; residual " + std::to_string(residual),
                       residual);
}

// Replaces zero columns of the column-major m x k basis by unit vectors
// orthogonal to all accepted columns.
void complete_basis(std::size_t m, std::size_t k, std::vector<double>& basis,
                    std::vector<bool>& valid) {
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (valid[j]) continue;
    double* col = &basis[j * m];
    while (candidate < m) {
      std::fill(col, col + m, 0.0);
      col[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < k; ++i) {
          if (!valid[i]) continue;
          const double* other = &basis[i * m];
          double proj = 0.0;
          for (std::size_t t = 0; t < m; ++t) proj += other[t] * col[t];
          for (std::size_t t = 0; t < m; ++t) col[t] -= proj * other[t];
        }
      }
      double norm = 0.0;
      for (std::size_t t = 0; t < m; ++t) norm += col[t] * col[t];
      norm = std::sqrt(norm);
      if (norm > 0.5) {
        for (std::size_t t = 0; t < m; ++t) col[t] /= norm;
        valid[j] = true;
        break;
      }
    }
  }
}

}  // namespace

SvdFactorization full_svd(const Matrix& w, const SvdOptions& options) {
  if (w.rows() == 0 || w.cols() == 0) {
    throw ShapeError("SVD of an empty matrix " + w.shape_string());
  }
  if (!w.all_finite()) throw NumericalError("SVD input has non-finite entries");

  const bool wide = w.rows() < w.cols();
  const std::size_t m = wide ? w.cols() : w.rows();
  const std::size_t n = wide ? w.rows() : w.cols();

  // Column-major copy of the tall operand A (A = w or w^T).
  std::vector<double> cols(m * n);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      if (wide) {
        cols[i * m + j] = w(i, j);
      } else {
        cols[j * m + i] = w(i, j);
      }
    }
  }
  std::vector<double> v;
  hestenes_jacobi(m, n, cols, v, options);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += cols[j * m + i] * cols[j * m + i];
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return sigma[a] > sigma[b];
  });

  // Sorted, normalized left vectors of A (column-major) and right vectors.
  std::vector<double> ua(m * n), va(n * n);
  std::vector<bool> valid(n, true);
  SvdFactorization f;
  f.full_spectrum.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    f.full_spectrum[k] = sigma[j];
    std::copy_n(&v[j * n], n, &va[k * n]);
    if (sigma[j] < 1e-300) {
      valid[k] = false;
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) ua[k * m + i] = cols[j * m + i] / sigma[j];
  }
  complete_basis(m, n, ua, valid);

  // Map back to w: w = A when tall, w = A^T (so U and V swap) when wide.
  const std::vector<double>& left = wide ? va : ua;
  const std::vector<double>& right = wide ? ua : va;
  const std::size_t left_len = w.rows();
  const std::size_t right_len = w.cols();
  f.u = Matrix(left_len, n);
  f.v = Matrix(right_len, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double* lu = &left[k * left_len];
    std::size_t peak = 0;
    for (std::size_t i = 1; i < left_len; ++i) {
      if (std::abs(lu[i]) > std::abs(lu[peak])) peak = i;
    }
    const double sign = lu[peak] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < left_len; ++i) f.u(i, k) = sign * lu[i];
    const double* rv = &right[k * right_len];
    for (std::size_t i = 0; i < right_len; ++i) f.v(i, k) = sign * rv[i];
  }
  f.sigma = f.full_spectrum;
  return f;
}

SvdFactorization truncated_svd(const Matrix& w, std::size_t r,
                               const SvdOptions& options) {
  const std::size_t max_rank = std::min(w.rows(), w.cols());
  if (r < 1 || r > max_rank) {
    throw RangeError("rank " + std::to_string(r) + " outside [1, " +
                     std::to_string(max_rank) + "] for " + w.shape_string());
  }
  SvdFactorization f = full_svd(w, options);
  if (r == max_rank) return f;
  f.u = f.u.columns(0, r);
  f.v = f.v.columns(0, r);
  f.sigma.resize(r);
  return f;
}

std::vector<double> singular_values(const Matrix& w) {
  return full_svd(w).full_spectrum;
}

double condition_number_from_spectrum(std::span<const double> spectrum) {
  if (spectrum.empty() || spectrum.front() <= 0.0) {
    throw DegenerateInputError("condition number of a zero matrix");
  }
  const double largest = spectrum.front();
  const double cutoff = 1e-12 * largest;
  double smallest = largest;
  for (double s : spectrum) {
    if (s >= cutoff) smallest = std::min(smallest, s);
  }
  return largest / smallest;
}

double condition_number(const Matrix& w) {
  if (frobenius_norm(w) == 0.0) {
    throw DegenerateInputError("condition number of a zero matrix " +
                               w.shape_string());
  }
  const auto spectrum = singular_values(w);
  return condition_number_from_spectrum(spectrum);
}

}  // namespace inhernet
