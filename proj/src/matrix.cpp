#include "finer/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finer {

Matrix::Matrix(std::size_t rows, std::size_t cols, Vector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < rows_; i0 += kTile) {
    const std::size_t i1 = std::min(rows_, i0 + kTile);
    for (std::size_t j0 = 0; j0 < cols_; j0 += kTile) {
      const std::size_t j1 = std::min(cols_, j0 + kTile);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) t.data_[j * rows_ + i] = data_[i * cols_ + j];
    }
  }
  return t;
}

Matrix Matrix::block(std::size_t rows, std::size_t cols) const {
  if (rows > rows_ || cols > cols_) {
    throw std::invalid_argument("Matrix::block: " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " exceeds " + shape());
  }
  Matrix b(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(data_.data() + r * cols_, cols, b.data_.data() + r * cols);
  return b;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

namespace {

// C = A * B for row-major A (m x n), B (n x p). Every output element is
// accumulated from zero over k = 0..n-1 in ascending order, whichever code
// path (register tile or edge loop) produces it, so row i of C does not
// depend on how many other rows A has.
using Lane = double __attribute__((vector_size(64)));
constexpr std::size_t kLane = sizeof(Lane) / sizeof(double);

template <std::size_t Rows>
inline void tile(const double* a, std::size_t n, const Lane* stripe, double* c, std::size_t p) {
  Lane acc[Rows][2] = {};
  for (std::size_t k = 0; k < n; ++k) {
    const Lane b0 = stripe[2 * k];
    const Lane b1 = stripe[2 * k + 1];
#pragma GCC unroll 8
    for (std::size_t r = 0; r < Rows; ++r) {
      const double x = a[r * n + k];
      acc[r][0] += x * b0;
      acc[r][1] += x * b1;
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    __builtin_memcpy(c + r * p, &acc[r][0], sizeof(Lane));
    __builtin_memcpy(c + r * p + kLane, &acc[r][1], sizeof(Lane));
  }
}

void gemm_kernel(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t p) {
  constexpr std::size_t kRows = 6;
  constexpr std::size_t kCols = 2 * kLane;
  std::vector<Lane> stripe(2 * n);

  std::size_t j0 = 0;
  for (; j0 + kCols <= p; j0 += kCols) {
    for (std::size_t k = 0; k < n; ++k)
      __builtin_memcpy(&stripe[2 * k], b + k * p + j0, kCols * sizeof(double));

    std::size_t i0 = 0;
    for (; i0 + kRows <= m; i0 += kRows) tile<kRows>(a + i0 * n, n, stripe.data(), c + i0 * p + j0, p);
    for (; i0 < m; ++i0) tile<1>(a + i0 * n, n, stripe.data(), c + i0 * p + j0, p);
  }

  // Remaining columns (p not a multiple of the tile width).
  for (std::size_t j = j0; j < p; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* ai = a + i * n;
      for (std::size_t k = 0; k < n; ++k) acc += ai[k] * b[k * p + j];
      c[i * p + j] = acc;
    }
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + a.shape() + " * " + b.shape());
  }
  Matrix c(a.rows(), b.cols());
  if (c.empty()) return c;
  gemm_kernel(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_bt: shape mismatch " + a.shape() + " * (" + b.shape() +
                                ")^T");
  }
  return matmul(a, b.transposed());
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("matmul_at: shape mismatch (" + a.shape() + ")^T * " + b.shape());
  }
  return matmul(a.transposed(), b);
}

Matrix matmul_naive(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + a.shape() + " * " + b.shape());
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("max_abs_diff: shape mismatch " + a.shape() + " vs " + b.shape());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace finer
