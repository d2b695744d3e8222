#pragma once

#include "pdae/linalg/dense.hpp"

namespace pdae {

/// Matrix exponential by scaling and squaring with the degree 3..13 Padé
/// approximants and the 1-norm thresholds of Higham (2005).
DenseMatrix expm(const DenseMatrix& a);

/// e^{tau M} together with the integrated semigroup
///   Psi = \int_0^tau e^{s M} ds = tau * phi1(tau M).
/// Both are blocks of exp([[tau M, tau I], [0, 0]]); this evaluates that
/// 2n-by-2n exponential without forming it, using the block structure of the
/// Padé approximant and of the squaring phase.
struct ExpPhi1 {
  DenseMatrix exp;
  DenseMatrix psi;
};
ExpPhi1 expm_phi1(const DenseMatrix& m, double tau);

/// Returns tau*phi1(tau M) b0 + tau^2*phi2(tau M) b1, i.e. the exact value of
///   \int_0^tau e^{(tau-s) M} (b0 + s b1) ds,
/// from a single exponential of the (n+2)-dimensional augmented matrix
///   tau * [[M, b1, b0], [0, 0, 1], [0, 0, 0]].
DenseVector affine_exp_integral(const DenseMatrix& m, double tau, const DenseVector& b0,
                                const DenseVector& b1);

}  // namespace pdae
