#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mvc {

/// Dense row-major matrix of 64-bit reals. Embedding batches are stored
/// one row per sample.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

/// A·B. Throws on inner-dimension mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Aᵀ·B (a.rows must equal b.rows).
Matrix matmul_trans_a(const Matrix& a, const Matrix& b);

/// A·Bᵀ (a.cols must equal b.cols).
Matrix matmul_trans_b(const Matrix& a, const Matrix& b);

/// Adds bias[j] to every entry of column j.
void add_row_vector(Matrix& m, const std::vector<double>& bias);

/// Scales every row to unit Euclidean norm. A row with norm below 1e-12
/// is a degenerate embedding and raises std::domain_error.
Matrix l2_normalize_rows(const Matrix& m);

/// Backward pass of l2_normalize_rows: given the unnormalized inputs and
/// the upstream gradient w.r.t. the normalized rows, returns the gradient
/// w.r.t. the inputs.
Matrix l2_normalize_rows_backward(const Matrix& inputs,
                                  const Matrix& grad_outputs);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

}  // namespace mvc
