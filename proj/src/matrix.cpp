#include "mvc/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mvc {

static void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("matrix: " + what);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  check(a.cols == b.rows, "matmul inner dimension mismatch");
  Matrix out(a.rows, b.cols);
  // ikj order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* orow = out.data.data() + i * out.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_trans_a(const Matrix& a, const Matrix& b) {
  check(a.rows == b.rows, "matmul_trans_a row mismatch");
  Matrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.data.data() + k * a.cols;
    const double* brow = b.data.data() + k * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* orow = out.data.data() + i * out.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_trans_b(const Matrix& a, const Matrix& b) {
  check(a.cols == b.cols, "matmul_trans_b column mismatch");
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* orow = out.data.data() + i * out.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + j * b.cols;
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      orow[j] = acc;
    }
  }
  return out;
}

void add_row_vector(Matrix& m, const std::vector<double>& bias) {
  check(bias.size() == m.cols, "bias length mismatch");
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias[j];
  }
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double sq = 0.0;
    for (double x : m.row(i)) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm < 1e-12)
      throw std::domain_error("l2_normalize_rows: degenerate embedding (row " +
                              std::to_string(i) + " has near-zero norm)");
    const double inv = 1.0 / norm;
    for (std::size_t j = 0; j < m.cols; ++j) out.at(i, j) = m.at(i, j) * inv;
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& inputs,
                                  const Matrix& grad_outputs) {
  check(inputs.same_shape(grad_outputs), "normalize backward shape mismatch");
  Matrix grad(inputs.rows, inputs.cols);
  for (std::size_t i = 0; i < inputs.rows; ++i) {
    double sq = 0.0;
    for (double x : inputs.row(i)) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm < 1e-12)
      throw std::domain_error("l2_normalize_rows_backward: degenerate row");
    const double inv = 1.0 / norm;
    // y = x/|x|;  dx = (g - (g·y) y) / |x|
    double dot = 0.0;
    for (std::size_t j = 0; j < inputs.cols; ++j)
      dot += grad_outputs.at(i, j) * inputs.at(i, j) * inv;
    for (std::size_t j = 0; j < inputs.cols; ++j)
      grad.at(i, j) =
          (grad_outputs.at(i, j) - dot * inputs.at(i, j) * inv) * inv;
  }
  return grad;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Matrix& m) { return all_finite(std::span(m.data)); }

}  // namespace mvc
