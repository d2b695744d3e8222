#pragma once

#include <cstddef>
#include <vector>

#include "pdae/linalg/dense.hpp"

namespace pdae {

/// LU factorization with partial pivoting, PA = LU, stored in place.
class LuFactorization {
 public:
  /// Throws ErrorCode::singular_matrix when a pivot is zero to working
  /// precision relative to the largest entry of `a`.
  explicit LuFactorization(DenseMatrix a);

  std::size_t size() const noexcept { return lu_.rows(); }

  DenseVector solve(const DenseVector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;

 private:
  void solve_in_place(double* x, std::size_t stride, std::size_t nrhs) const;

  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

DenseVector lu_solve(const DenseMatrix& a, const DenseVector& b);

}  // namespace pdae
