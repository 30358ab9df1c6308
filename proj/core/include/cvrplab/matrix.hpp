#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cvrplab {

// Dense row-major matrix of doubles. Sized for the toy network: no blocking,
// no SIMD, just straightforward loops.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  void set_zero();
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Columns [first, first + count) as a new matrix, and the inverse scatter.
Matrix column_block(const Matrix& m, std::size_t first, std::size_t count);
void add_column_block(Matrix& m, const Matrix& block, std::size_t first);

// Adds bias to every row.
void add_row_vector(Matrix& m, std::span<const double> bias);
// Column sums accumulated into out.
void accumulate_column_sums(const Matrix& m, std::span<double> out);

// Row-wise softmax in place. -inf entries get probability 0.
void softmax_rows(Matrix& m);

}  // namespace cvrplab
