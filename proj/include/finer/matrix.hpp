#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace finer {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, Vector data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  Vector& values() { return data_; }
  const Vector& values() const { return data_; }

  Matrix transposed() const;
  /// Copy of the top-left `rows` x `cols` block.
  Matrix block(std::size_t rows, std::size_t cols) const;
  bool all_finite() const;
  /// "RxC", used in error messages.
  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

/// a * b. Throws std::invalid_argument naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * b^T without materialising b^T for the caller.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

/// a^T * b; the reduction runs over the shared row index in ascending order.
Matrix matmul_at(const Matrix& a, const Matrix& b);

/// Reference triple loop, kept for tests and tiny problems.
Matrix matmul_naive(const Matrix& a, const Matrix& b);

double frobenius_norm(const Matrix& m);

/// max |a - b| over all entries; shapes must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace finer
