#include "pdae/linalg/lu.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "pdae/error.hpp"

namespace pdae {

LuFactorization::LuFactorization(DenseMatrix a) : lu_(std::move(a)) {
  require(lu_.square(), ErrorCode::dimension, "lu: matrix is not square");
  const std::size_t n = lu_.rows();
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});

  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                      max_abs(lu_);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        p = i;
      }
    }
    if (best <= tiny) {
      throw Error(ErrorCode::singular_matrix,
                  "singular matrix: pivot " + std::to_string(k) + " vanishes");
    }
    if (p != k) {
      std::swap(perm_[p], perm_[k]);
      auto rp = lu_.row(p);
      auto rk = lu_.row(k);
      std::swap_ranges(rp.begin(), rp.end(), rk.begin());
    }
    const double pivot = lu_(k, k);
    const double* __restrict rk = lu_.data() + k * n;
    for (std::size_t i = k + 1; i < n; ++i) {
      double* __restrict ri = lu_.data() + i * n;
      const double l = ri[k] / pivot;
      ri[k] = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= l * rk[j];
    }
  }
}

// x is an n-by-nrhs row-major block already permuted.
void LuFactorization::solve_in_place(double* x, std::size_t stride, std::size_t nrhs) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double* xi = x + i * stride;
    for (std::size_t k = 0; k < i; ++k) {
      const double l = lu_(i, k);
      if (l == 0.0) continue;
      const double* xk = x + k * stride;
      for (std::size_t r = 0; r < nrhs; ++r) xi[r] -= l * xk[r];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double* xi = x + ii * stride;
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = lu_(ii, k);
      if (u == 0.0) continue;
      const double* xk = x + k * stride;
      for (std::size_t r = 0; r < nrhs; ++r) xi[r] -= u * xk[r];
    }
    const double d = lu_(ii, ii);
    for (std::size_t r = 0; r < nrhs; ++r) xi[r] /= d;
  }
}

DenseVector LuFactorization::solve(const DenseVector& b) const {
  require(b.size() == size(), ErrorCode::dimension, "lu solve: rhs size mismatch");
  DenseVector x(size());
  for (std::size_t i = 0; i < size(); ++i) x[i] = b[perm_[i]];
  solve_in_place(x.data(), 1, 1);
  return x;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
  require(b.rows() == size(), ErrorCode::dimension, "lu solve: rhs rows mismatch");
  const std::size_t nrhs = b.cols();
  DenseMatrix x(size(), nrhs);
  for (std::size_t i = 0; i < size(); ++i) {
    auto src = b.row(perm_[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  solve_in_place(x.data(), nrhs, nrhs);
  return x;
}

DenseVector lu_solve(const DenseMatrix& a, const DenseVector& b) {
  require(a.square(), ErrorCode::dimension, "lu_solve: matrix is not square");
  require(a.rows() == b.size(), ErrorCode::dimension, "lu_solve: rhs size mismatch");
  return LuFactorization(a).solve(b);
}

}  // namespace pdae
