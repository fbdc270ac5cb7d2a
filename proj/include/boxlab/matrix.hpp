#pragma once

#include <cstddef>
#include <vector>

#include "boxlab/errors.hpp"

namespace boxlab {

// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  bool all_finite() const;
};

namespace kernels {

// Every parallel kernel computes each output element with the same serial
// inner loop as its reference twin, so results are bit-identical regardless
// of thread count. The *_serial versions stay around as test oracles and
// for the benchmark.

// C = A * B
Matrix matmul_serial(const Matrix& a, const Matrix& b);
Matrix matmul_omp(const Matrix& a, const Matrix& b);

// C = A^T * B
Matrix matmul_tn_serial(const Matrix& a, const Matrix& b);
Matrix matmul_tn_omp(const Matrix& a, const Matrix& b);

// C = A * B^T
Matrix matmul_nt_serial(const Matrix& a, const Matrix& b);
Matrix matmul_nt_omp(const Matrix& a, const Matrix& b);

// Dispatching entry points: pick the OpenMP kernel when the problem is
// big enough to pay for the fork, the serial one otherwise.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Row-wise softmax with max-subtraction; input may be any finite values.
void softmax_rows_inplace(Matrix& m);

}  // namespace kernels
}  // namespace boxlab
