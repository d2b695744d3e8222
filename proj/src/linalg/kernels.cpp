#include "pdae/linalg/kernels.hpp"

#include <algorithm>
#include <string>

#include <omp.h>

#include "pdae/error.hpp"

namespace pdae::kernels {

namespace {

constexpr std::size_t kRowBlock = 32;
constexpr std::size_t kDepthBlock = 128;

void check_product(const DenseMatrix& a, std::size_t inner, const char* what) {
  if (a.cols() != inner) {
    throw Error(ErrorCode::dimension, std::string(what) + ": inner dimensions " +
                                          std::to_string(a.cols()) + " and " +
                                          std::to_string(inner) + " differ");
  }
}

}  // namespace

void matmul(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  check_product(a, b.rows(), "matmul");
  if (&c == &a || &c == &b) {
    DenseMatrix tmp;
    matmul(a, b, tmp);
    c = std::move(tmp);
    return;
  }
  const std::size_t n = a.rows();
  const std::size_t depth = a.cols();
  const std::size_t m = b.cols();
  if (c.rows() != n || c.cols() != m) c = DenseMatrix(n, m);

  const auto row_blocks = static_cast<std::ptrdiff_t>((n + kRowBlock - 1) / kRowBlock);
  const bool big = n * m * depth > 32 * 32 * 32;

  // Row blocks are independent; within a block the k-loop order is fixed, so
  // each c(i, j) sees the same sequence of additions regardless of threading.
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t ib = 0; ib < row_blocks; ++ib) {
    const std::size_t i0 = static_cast<std::size_t>(ib) * kRowBlock;
    const std::size_t i1 = std::min(n, i0 + kRowBlock);
    for (std::size_t i = i0; i < i1; ++i) std::fill_n(c.data() + i * m, m, 0.0);
    for (std::size_t k0 = 0; k0 < depth; k0 += kDepthBlock) {
      const std::size_t k1 = std::min(depth, k0 + kDepthBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        double* __restrict ci = c.data() + i * m;
        const double* ai = a.data() + i * depth;
        for (std::size_t k = k0; k < k1; ++k) {
          const double aik = ai[k];
          if (aik == 0.0) continue;
          const double* __restrict bk = b.data() + k * m;
          for (std::size_t j = 0; j < m; ++j) ci[j] += aik * bk[j];
        }
      }
    }
  }
}

void matvec(const DenseMatrix& a, std::span<const double> x, DenseVector& y) {
  check_product(a, x.size(), "matvec");
  if (y.size() != a.rows()) y = DenseVector(a.rows());
  std::fill(y.begin(), y.end(), 0.0);
  matvec_add(a, x, y.span());
}

void matvec_add(const DenseMatrix& a, std::span<const double> x, std::span<double> y) {
  check_product(a, x.size(), "matvec_add");
  if (y.size() != a.rows()) throw Error(ErrorCode::dimension, "matvec_add: output size");
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t m = a.cols();
  const bool big = a.rows() * m > 128 * 128;
#pragma omp parallel for schedule(static) if (big)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* ai = a.data() + static_cast<std::size_t>(i) * m;
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += ai[j] * x[j];
    y[i] += s;
  }
}

namespace serial {

void matmul(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  check_product(a, b.rows(), "serial::matmul");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  c = std::move(out);
}

void matvec(const DenseMatrix& a, std::span<const double> x, DenseVector& y) {
  check_product(a, x.size(), "serial::matvec");
  DenseVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  y = std::move(out);
}

}  // namespace serial

int max_threads() { return omp_get_max_threads(); }

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace pdae::kernels
