#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "pdae/linalg/dense.hpp"

namespace pdae {

/// Discrete constraint operator D (m x n) with a right-inverse D^- (n x m) and
/// the projection P0 = I - D^- D onto ker D along range D^-.
struct ConstraintBlock {
  DenseMatrix d;
  DenseMatrix d_minus;
  DenseMatrix p0;

  std::size_t state_dim() const noexcept { return d.cols(); }
  std::size_t constraint_dim() const noexcept { return d.rows(); }
};

/// Residuals of the four algebraic identities a ConstraintBlock must satisfy.
struct ConstraintIdentities {
  double right_inverse;  // ||D D^- - I||
  double idempotent;     // ||P0^2 - P0||
  double kernel;         // ||D P0||
  double complement;     // ||P0 D^-||

  double worst() const;
};
ConstraintIdentities check_identities(const ConstraintBlock& c);

inline constexpr double kConstraintIdentityTol = 1e-12;

namespace right_inverse {
struct PseudoInverse {};
struct ZeroExtension {};
struct Explicit {
  DenseMatrix d_minus;
};
}  // namespace right_inverse

using RightInversePolicy =
    std::variant<right_inverse::PseudoInverse, right_inverse::ZeroExtension,
                 right_inverse::Explicit>;

/// Builds D^- and P0 for `d` and verifies the identities to 1e-12.
///
/// PseudoInverse gives D^T (D D^T)^{-1}. ZeroExtension requires every row of D
/// to have one nonzero entry (distinct columns) and returns the transposed
/// pattern scaled so that D D^- = I.
ConstraintBlock make_constraint_block(DenseMatrix d, const RightInversePolicy& policy);

DenseVector project_p0(const ConstraintBlock& c, const DenseVector& x);

using VectorField = std::function<DenseVector(const DenseVector&)>;
using JacobianField = std::function<DenseMatrix(const DenseVector&)>;
using TimeFunction = std::function<DenseVector(double)>;

struct Grid {
  DenseVector nodes;
  double spacing = 0.0;
};

/// Semi-discrete constrained system
///   u' - A u - f(u) + D^- lambda = F(t),   D u = G(t),   u(t_start) = u0.
struct ConstrainedSystem {
  std::string name;
  DenseMatrix a;
  ConstraintBlock constraint;
  VectorField f;
  JacobianField f_jacobian;  // optional; needed by the implicit solver
  TimeFunction forcing;      // empty means F = 0
  TimeFunction g;
  TimeFunction g_dot;        // optional; needed for multipliers
  DenseVector u0;
  double t_start = 0.0;
  double t_end = 0.0;
  Grid grid;
  double l2_weight = 1.0;  // discrete l2 norm is sqrt(l2_weight * sum e_i^2)

  std::size_t dim() const noexcept { return a.rows(); }

  DenseVector forcing_at(double t) const;
  DenseVector constraint_offset(double t) const;  // D^- G(t)
};

inline constexpr double kConsistencyTol = 1e-10;

/// Dimension checks, ConstraintBlock identities and consistency of u0.
void validate(const ConstrainedSystem& sys);

/// ||D x - G(t)||_inf
double consistency_residual(const ConstrainedSystem& sys, const DenseVector& x, double t);

/// lambda = D (F(t) + rhs_extra + A u) - G'(t). For a splitting run
/// `rhs_extra` is the correction q; for the full system it is f(u).
DenseVector recover_multiplier(const ConstrainedSystem& sys, const DenseVector& u, double t,
                               const DenseVector* rhs_extra = nullptr);

/// Multiplier of the full semi-discrete system (rhs_extra = f(u)).
DenseVector recover_multiplier_full(const ConstrainedSystem& sys, const DenseVector& u,
                                    double t);

/// ||D f(u) - D f((I - P0) u)||_inf, the defect of the commuting condition
/// under which f(D^- G) is an exact constraint-level correction.
double commuting_defect(const ConstrainedSystem& sys, const DenseVector& u);

}  // namespace pdae
