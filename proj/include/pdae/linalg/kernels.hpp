#pragma once

// Hot loops of the dense kernel. The OpenMP versions in `pdae::kernels` are
// what the library uses; `pdae::kernels::serial` keeps straightforward loop
// nests around as the reference the tests and the benchmark compare against.
//
// Every output entry is produced by exactly one thread with a fixed summation
// order, so results are bit-identical for any thread count.

#include <cstddef>
#include <span>

#include "pdae/linalg/dense.hpp"

namespace pdae::kernels {

/// c = a * b (c is resized).
void matmul(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);

/// y = a * x (y is resized).
void matvec(const DenseMatrix& a, std::span<const double> x, DenseVector& y);

/// y = a * x + y
void matvec_add(const DenseMatrix& a, std::span<const double> x, std::span<double> y);

/// out[i] = op(in[i]), elementwise and parallel for long vectors.
template <typename Op>
void transform(std::span<const double> in, std::span<double> out, Op op) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = op(in[i]);
}

namespace serial {

void matmul(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c);
void matvec(const DenseMatrix& a, std::span<const double> x, DenseVector& y);

}  // namespace serial

/// Threads OpenMP will use for the parallel kernels.
int max_threads();
void set_threads(int n);

}  // namespace pdae::kernels
