#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <doctest.h>

#include "pdae/error.hpp"
#include "pdae/linalg/dense.hpp"

namespace pdae::test {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                                 double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline DenseVector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseVector v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

/// Rescales m so that its induced 1-norm equals `target`.
inline DenseMatrix with_norm_1(DenseMatrix m, double target) {
  m *= target / norm_1(m);
  return m;
}

inline double max_diff(const DenseMatrix& a, const DenseMatrix& b) { return max_abs(a - b); }
inline double max_diff(const DenseVector& a, const DenseVector& b) { return norm_inf(a - b); }

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a pdae::Error");
  return ErrorCode::config;
}

}  // namespace pdae::test
