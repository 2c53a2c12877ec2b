#pragma once

// Dense row-major matrices, partially pivoted LU, and a 1-norm condition
// estimate. The parallel LU distributes the trailing-row updates; each row is
// updated by the same arithmetic as in the serial path, so both produce
// identical factors.

#include <cstddef>
#include <span>
#include <vector>

#include "wgl/parallel.hpp"

namespace wgl {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const { return data_; }

  std::vector<double> multiply(std::span<const double> x) const;
  double norm1() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

class LuFactorization {
 public:
  // Throws NumericalError on an exactly singular pivot.
  explicit LuFactorization(DenseMatrix a, Execution exec = Execution::parallel);

  std::size_t size() const { return lu_.rows(); }
  std::vector<double> solve(std::span<const double> b) const;
  std::vector<double> solve_transposed(std::span<const double> b) const;

  // Hager/Higham estimate of ||A^{-1}||_1 * ||A||_1.
  double condition_estimate() const;

  const DenseMatrix& packed() const { return lu_; }
  const std::vector<std::size_t>& pivots() const { return piv_; }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> piv_;
  double norm1_ = 0.0;
};

}  // namespace wgl
