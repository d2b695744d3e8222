#include "pdae/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "pdae/error.hpp"
#include "pdae/linalg/lu.hpp"

namespace pdae {

double ConstraintIdentities::worst() const {
  return std::max({right_inverse, idempotent, kernel, complement});
}

ConstraintIdentities check_identities(const ConstraintBlock& c) {
  const DenseMatrix dd = c.d * c.d_minus;
  const DenseMatrix pp = c.p0 * c.p0;
  return {norm_inf(dd - DenseMatrix::identity(dd.rows())), norm_inf(pp - c.p0),
          norm_inf(c.d * c.p0), norm_inf(c.p0 * c.d_minus)};
}

namespace {

DenseMatrix pseudo_inverse(const DenseMatrix& d) {
  const DenseMatrix gram = d * d.transpose();
  try {
    // (D D^T)^{-1} D is the transpose of D^T (D D^T)^{-1}.
    return LuFactorization(gram).solve(d).transpose();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::singular_matrix) throw;
    throw Error(ErrorCode::constraint_not_onto, "constraint not onto: D D^T is singular");
  }
}

DenseMatrix zero_extension(const DenseMatrix& d) {
  DenseMatrix d_minus(d.cols(), d.rows());
  std::vector<bool> used(d.cols(), false);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    std::size_t nonzeros = 0;
    std::size_t col = 0;
    const auto r = d.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] != 0.0) {
        ++nonzeros;
        col = j;
      }
    }
    if (nonzeros != 1) {
      throw Error(ErrorCode::policy, "zero_extension: row " + std::to_string(i) +
                                         " of D is not a scaled selection");
    }
    if (used[col]) {
      throw Error(ErrorCode::constraint_not_onto,
                  "constraint not onto: column " + std::to_string(col) + " selected twice");
    }
    used[col] = true;
    d_minus(col, i) = 1.0 / r[col];
  }
  return d_minus;
}

}  // namespace

ConstraintBlock make_constraint_block(DenseMatrix d, const RightInversePolicy& policy) {
  const std::size_t m = d.rows();
  const std::size_t n = d.cols();
  require(m >= 1 && m <= n, ErrorCode::constraint_not_onto,
          "constraint not onto: D has more rows than columns");
  require(all_finite(d.entries()), ErrorCode::domain, "constraint: D has non-finite entries");

  DenseMatrix d_minus = std::visit(
      [&](const auto& p) -> DenseMatrix {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, right_inverse::PseudoInverse>) {
          return pseudo_inverse(d);
        } else if constexpr (std::is_same_v<P, right_inverse::ZeroExtension>) {
          return zero_extension(d);
        } else {
          require(p.d_minus.rows() == n && p.d_minus.cols() == m, ErrorCode::dimension,
                  "explicit right-inverse has the wrong shape");
          return p.d_minus;
        }
      },
      policy);

  DenseMatrix p0 = DenseMatrix::identity(n) - d_minus * d;
  ConstraintBlock block{std::move(d), std::move(d_minus), std::move(p0)};

  const ConstraintIdentities id = check_identities(block);
  if (id.right_inverse > kConstraintIdentityTol) {
    const auto code = std::holds_alternative<right_inverse::Explicit>(policy)
                          ? ErrorCode::policy
                          : ErrorCode::constraint_not_onto;
    throw Error(code, "right-inverse defect ||D D^- - I|| = " + std::to_string(id.right_inverse));
  }
  if (id.worst() > kConstraintIdentityTol) {
    throw Error(ErrorCode::policy,
                "projection identities violated: " + std::to_string(id.worst()));
  }
  return block;
}

DenseVector project_p0(const ConstraintBlock& c, const DenseVector& x) {
  require(x.size() == c.state_dim(), ErrorCode::dimension, "project_p0: size mismatch");
  return c.p0 * x;
}

DenseVector ConstrainedSystem::forcing_at(double t) const {
  if (!forcing) return DenseVector(dim());
  return forcing(t);
}

DenseVector ConstrainedSystem::constraint_offset(double t) const {
  return constraint.d_minus * g(t);
}

void validate(const ConstrainedSystem& sys) {
  const std::size_t n = sys.dim();
  require(sys.a.square(), ErrorCode::dimension, sys.name + ": A is not square");
  require(sys.constraint.state_dim() == n && sys.constraint.d_minus.rows() == n &&
              sys.constraint.p0.rows() == n,
          ErrorCode::dimension, sys.name + ": constraint does not match the state dimension");
  require(sys.u0.size() == n, ErrorCode::dimension, sys.name + ": u0 has the wrong size");
  require(static_cast<bool>(sys.f) && static_cast<bool>(sys.g), ErrorCode::config,
          sys.name + ": f and G are required");
  require(sys.g(sys.t_start).size() == sys.constraint.constraint_dim(), ErrorCode::dimension,
          sys.name + ": G has the wrong size");
  require(sys.t_end >= sys.t_start, ErrorCode::domain, sys.name + ": empty time span");
  require(check_identities(sys.constraint).worst() <= kConstraintIdentityTol, ErrorCode::policy,
          sys.name + ": constraint identities violated");
  const double r = consistency_residual(sys, sys.u0, sys.t_start);
  require(r <= kConsistencyTol, ErrorCode::inconsistent,
          sys.name + ": inconsistent initial value, ||D u0 - G(t0)|| = " + std::to_string(r));
}

double consistency_residual(const ConstrainedSystem& sys, const DenseVector& x, double t) {
  require(x.size() == sys.dim(), ErrorCode::dimension, "consistency_residual: size mismatch");
  return norm_inf(sys.constraint.d * x - sys.g(t));
}

DenseVector recover_multiplier(const ConstrainedSystem& sys, const DenseVector& u, double t,
                               const DenseVector* rhs_extra) {
  require(static_cast<bool>(sys.g_dot), ErrorCode::multiplier_unavailable,
          "multiplier unavailable: G' not supplied for " + sys.name);
  require(u.size() == sys.dim(), ErrorCode::dimension, "recover_multiplier: size mismatch");
  DenseVector rhs = sys.forcing_at(t);
  rhs += sys.a * u;
  if (rhs_extra != nullptr) rhs += *rhs_extra;
  return sys.constraint.d * rhs - sys.g_dot(t);
}

DenseVector recover_multiplier_full(const ConstrainedSystem& sys, const DenseVector& u,
                                    double t) {
  const DenseVector fu = sys.f(u);
  return recover_multiplier(sys, u, t, &fu);
}

double commuting_defect(const ConstrainedSystem& sys, const DenseVector& u) {
  const auto& c = sys.constraint;
  const DenseVector complement_part = c.d_minus * (c.d * u);
  return norm_inf(c.d * sys.f(u) - c.d * sys.f(complement_part));
}

}  // namespace pdae
