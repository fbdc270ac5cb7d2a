#include "boxlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace boxlab {

bool Matrix::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace kernels {
namespace {

void check_mul(const Matrix& a, const Matrix& b, std::size_t inner_a, std::size_t inner_b,
               const char* what) {
  if (inner_a != inner_b) {
    throw ShapeError(std::string(what) + ": inner dimensions disagree (" +
                     std::to_string(inner_a) + " vs " + std::to_string(inner_b) + ")");
  }
  (void)a;
  (void)b;
}

inline double dot_strided(const double* x, std::size_t sx, const double* y, std::size_t sy,
                          std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x[k * sx] * y[k * sy];
  return acc;
}

// Work estimate used by the dispatchers.
inline std::uint64_t flops(std::size_t m, std::size_t n, std::size_t k) {
  return static_cast<std::uint64_t>(m) * n * k;
}

constexpr std::uint64_t kParallelThreshold = 1u << 16;

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.cols, b.rows, "matmul");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_omp(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.cols, b.rows, "matmul");
  Matrix c(a.rows, b.cols);
  const std::int64_t n = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double* arow = a.row(static_cast<std::size_t>(i));
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn_serial(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.rows, b.rows, "matmul_tn");
  Matrix c(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i) {
    double* crow = c.row(i);
    for (std::size_t j = 0; j < b.cols; ++j) {
      crow[j] = dot_strided(a.data.data() + i, a.cols, b.data.data() + j, b.cols, a.rows);
    }
  }
  return c;
}

Matrix matmul_tn_omp(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.rows, b.rows, "matmul_tn");
  Matrix c(a.cols, b.cols);
  const std::int64_t n = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < b.cols; ++j) {
      crow[j] = dot_strided(a.data.data() + static_cast<std::size_t>(i), a.cols,
                            b.data.data() + j, b.cols, a.rows);
    }
  }
  return c;
}

Matrix matmul_nt_serial(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.cols, b.cols, "matmul_nt");
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      crow[j] = dot_strided(arow, 1, b.row(j), 1, a.cols);
    }
  }
  return c;
}

Matrix matmul_nt_omp(const Matrix& a, const Matrix& b) {
  check_mul(a, b, a.cols, b.cols, "matmul_nt");
  Matrix c(a.rows, b.rows);
  const std::int64_t n = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double* arow = a.row(static_cast<std::size_t>(i));
    double* crow = c.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < b.rows; ++j) {
      crow[j] = dot_strided(arow, 1, b.row(j), 1, a.cols);
    }
  }
  return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  return flops(a.rows, b.cols, a.cols) >= kParallelThreshold ? matmul_omp(a, b)
                                                             : matmul_serial(a, b);
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  return flops(a.cols, b.cols, a.rows) >= kParallelThreshold ? matmul_tn_omp(a, b)
                                                             : matmul_tn_serial(a, b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  return flops(a.rows, b.rows, a.cols) >= kParallelThreshold ? matmul_nt_omp(a, b)
                                                             : matmul_nt_serial(a, b);
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

void softmax_rows_inplace(Matrix& m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* r = m.row(i);
    const double mx = *std::max_element(r, r + m.cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    for (std::size_t j = 0; j < m.cols; ++j) r[j] /= sum;
  }
}

}  // namespace kernels
}  // namespace boxlab
