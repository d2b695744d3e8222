#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "pdae/constraint.hpp"
#include "pdae/linalg/lu.hpp"
#include "pdae/problems.hpp"

using namespace pdae;
using pdae::test::code_of;
using pdae::test::max_diff;
using pdae::test::random_matrix;
using pdae::test::random_vector;

namespace {

ConstrainedSystem small_system(DenseMatrix a, DenseMatrix d, const RightInversePolicy& policy,
                               TimeFunction g, TimeFunction g_dot, DenseVector u0) {
  const std::size_t n = a.rows();
  ConstrainedSystem sys;
  sys.name = "small";
  sys.a = std::move(a);
  sys.constraint = make_constraint_block(std::move(d), policy);
  sys.f = [n](const DenseVector&) { return DenseVector(n); };
  sys.g = std::move(g);
  sys.g_dot = std::move(g_dot);
  sys.u0 = std::move(u0);
  sys.t_end = 1.0;
  return sys;
}

// One implicit Euler step of u' = A u + extra - D^- lambda, D u = G, solved as
// a saddle-point system; returns lambda.
DenseVector implicit_euler_multiplier(const ConstrainedSystem& sys, const DenseVector& u,
                                      const DenseVector& extra, double t, double tau) {
  const std::size_t n = sys.dim(), m = sys.constraint.constraint_dim();
  DenseMatrix k(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) k(i, j) = (i == j ? 1.0 : 0.0) - tau * sys.a(i, j);
    for (std::size_t j = 0; j < m; ++j) k(i, n + j) = tau * sys.constraint.d_minus(i, j);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) k(n + i, j) = sys.constraint.d(i, j);
  DenseVector rhs(n + m);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = u[i] + tau * extra[i];
  const DenseVector g = sys.g(t + tau);
  for (std::size_t i = 0; i < m; ++i) rhs[n + i] = g[i];
  const DenseVector sol = lu_solve(k, rhs);
  DenseVector lambda(m);
  for (std::size_t i = 0; i < m; ++i) lambda[i] = sol[n + i];
  return lambda;
}

void check_block_identities(const ConstraintBlock& c) {
  const ConstraintIdentities id = check_identities(c);
  CHECK(id.right_inverse <= 1e-12);
  CHECK(id.idempotent <= 1e-12);
  CHECK(id.kernel <= 1e-12);
  CHECK(id.complement <= 1e-12);
}

}  // namespace

TEST_SUITE("constraint block") {
  TEST_CASE("selection with zero extension") {
    const ConstraintBlock c =
        make_constraint_block(DenseMatrix{{1, 0, 0}}, right_inverse::ZeroExtension{});
    CHECK(c.d_minus == DenseMatrix{{1}, {0}, {0}});
    CHECK(c.p0 == DenseMatrix::diagonal({0, 1, 1}));
    check_block_identities(c);
  }

  TEST_CASE("scaled selection is inverted by the scaled transpose pattern") {
    const ConstraintBlock c = make_constraint_block(DenseMatrix{{0, 0, 4, 0}, {-2, 0, 0, 0}},
                                                    right_inverse::ZeroExtension{});
    CHECK(c.d_minus(2, 0) == 0.25);
    CHECK(c.d_minus(0, 1) == -0.5);
    check_block_identities(c);
  }

  TEST_CASE("two-point mean with the pseudo-inverse") {
    const ConstraintBlock c =
        make_constraint_block(DenseMatrix{{1, 1}}, right_inverse::PseudoInverse{});
    CHECK(c.d_minus == DenseMatrix{{0.5}, {0.5}});
    check_block_identities(c);
  }

  TEST_CASE("sine-weighted mean at n = 500") {
    const std::size_t n = 500;
    const Grid grid = dirichlet_grid(n);
    DenseMatrix d(1, n);
    double ww = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d(0, i) = grid.spacing * std::sin(std::numbers::pi * grid.nodes[i]);
      ww += d(0, i) * d(0, i);
    }
    const ConstraintBlock c = make_constraint_block(d, right_inverse::PseudoInverse{});
    for (std::size_t i = 0; i < n; ++i) CHECK(c.d_minus(i, 0) == doctest::Approx(d(0, i) / ww));
    CHECK(std::abs((c.d * c.d_minus)(0, 0) - 1.0) <= 1e-14);
    check_block_identities(c);
  }

  TEST_CASE("explicit right inverse") {
    const DenseMatrix d{{1, 1, 0}};
    const ConstraintBlock c =
        make_constraint_block(d, right_inverse::Explicit{DenseMatrix{{0.0}, {1.0}, {0.0}}});
    CHECK(c.p0 == DenseMatrix{{1, 0, 0}, {-1, 0, 0}, {0, 0, 1}});
    check_block_identities(c);
    CHECK(code_of([&] {
            make_constraint_block(d, right_inverse::Explicit{DenseMatrix{{0.3}, {0.3}, {0}}});
          }) == ErrorCode::policy);
  }

  TEST_CASE("errors") {
    CHECK(code_of([] {
            make_constraint_block(DenseMatrix{{1, 2}, {2, 4}}, right_inverse::PseudoInverse{});
          }) == ErrorCode::constraint_not_onto);
    CHECK(code_of([] {
            make_constraint_block(DenseMatrix{{1, 1, 0}}, right_inverse::ZeroExtension{});
          }) == ErrorCode::policy);
    CHECK(code_of([] {
            make_constraint_block(DenseMatrix{{1, 0}, {1, 0}}, right_inverse::ZeroExtension{});
          }) == ErrorCode::constraint_not_onto);
  }

  TEST_CASE("identities hold on random full-rank constraints") {
    std::mt19937_64 rng(51);
    for (std::size_t m = 1; m <= 5; ++m) {
      const DenseMatrix d = random_matrix(m, 12, rng);
      check_block_identities(make_constraint_block(d, right_inverse::PseudoInverse{}));
    }
  }

  TEST_CASE("identities hold on all three benchmark problems") {
    check_block_identities(build_integral_mean().constraint);
    check_block_identities(build_subset().constraint);
    check_block_identities(build_mechanical().constraint);
  }
}

TEST_SUITE("projection") {
  TEST_CASE("kernel vectors are fixed and the complement is annihilated") {
    const ConstraintBlock c =
        make_constraint_block(DenseMatrix{{1, 2, 3}, {0, 1, -1}}, right_inverse::PseudoInverse{});
    const DenseVector x{5, -1, -1};  // D x = 0
    CHECK(max_diff(project_p0(c, x), x) <= 1e-13);
    CHECK(norm_inf(project_p0(c, c.d_minus * DenseVector{0.7, -2.0})) <= 1e-13);
  }

  TEST_CASE("matrix-free path and decomposition on random vectors") {
    std::mt19937_64 rng(52);
    for (const ConstrainedSystem& sys : {build_integral_mean(100), build_subset(100)}) {
      const ConstraintBlock& c = sys.constraint;
      for (int trial = 0; trial < 5; ++trial) {
        const DenseVector x = random_vector(sys.dim(), rng);
        const DenseVector p = project_p0(c, x);
        const DenseVector dx = c.d * x;
        const DenseVector complement = c.d_minus * dx;
        CHECK(max_diff(p, x - complement) <= 1e-12);
        CHECK(max_diff(p + complement, x) <= 1e-12);
        CHECK(max_diff(project_p0(c, p), p) <= 1e-12);
      }
    }
  }

  TEST_CASE("dimension mismatch") {
    const ConstraintBlock c =
        make_constraint_block(DenseMatrix{{1, 0}}, right_inverse::ZeroExtension{});
    CHECK(code_of([&] { (void)project_p0(c, DenseVector{1, 2, 3}); }) == ErrorCode::dimension);
  }
}

TEST_SUITE("consistency") {
  TEST_CASE("integral-mean initial value and constraint offsets") {
    const ConstrainedSystem sys = build_integral_mean();
    CHECK(consistency_residual(sys, sys.u0, 0.0) <= 1e-12);
    CHECK(consistency_residual(sys, sys.constraint_offset(0.07), 0.07) <= 1e-12);
    const DenseVector shifted = sys.u0 + sys.constraint.d_minus * DenseVector{1.0};
    CHECK(std::abs(consistency_residual(sys, shifted, 0.0) - 1.0) <= 1e-12);
  }

  TEST_CASE("validate rejects inconsistent initial values") {
    ConstrainedSystem sys = build_integral_mean(50);
    validate(sys);
    sys.u0[10] += 1.0;
    CHECK(code_of([&] { validate(sys); }) == ErrorCode::inconsistent);
  }
}

TEST_SUITE("multiplier") {
  TEST_CASE("A = 0, F = 0, G = t gives lambda = -1") {
    const ConstrainedSystem sys =
        small_system(DenseMatrix(3, 3), DenseMatrix{{1, 1, 1}}, right_inverse::PseudoInverse{},
                     [](double t) { return DenseVector{t}; },
                     [](double) { return DenseVector{1.0}; }, DenseVector{0, 0, 0});
    const DenseVector lambda = recover_multiplier(sys, DenseVector{0.2, -0.1, -0.1}, 0.0);
    CHECK(lambda.size() == 1);
    CHECK(lambda[0] == -1.0);
  }

  TEST_CASE("G constant and u = D^- G gives D A D^- G") {
    std::mt19937_64 rng(61);
    const DenseMatrix a = random_matrix(6, 6, rng);
    const DenseMatrix d = random_matrix(2, 6, rng);
    const DenseVector g{0.3, -1.2};
    ConstrainedSystem sys = small_system(
        a, d, right_inverse::PseudoInverse{}, [g](double) { return g; },
        [](double) { return DenseVector(2); }, DenseVector(6));
    sys.u0 = sys.constraint.d_minus * g;
    const DenseVector expected = sys.constraint.d * (a * (sys.constraint.d_minus * g));
    CHECK(max_diff(recover_multiplier(sys, sys.u0, 0.0), expected) <= 1e-13);
  }

  TEST_CASE("missing G' is reported") {
    ConstrainedSystem sys = build_integral_mean(30);
    sys.g_dot = nullptr;
    CHECK(code_of([&] { (void)recover_multiplier(sys, sys.u0, 0.0); }) ==
          ErrorCode::multiplier_unavailable);
  }

  TEST_CASE("integral-mean at t = 0 against a tiny implicit Euler step") {
    const ConstrainedSystem sys = build_integral_mean(100);
    const double tau = 1e-7;
    const DenseVector zero(sys.dim());
    const DenseVector linear = recover_multiplier(sys, sys.u0, 0.0);
    const DenseVector linear_oracle = implicit_euler_multiplier(sys, sys.u0, zero, 0.0, tau);
    CHECK(std::abs(linear[0] - linear_oracle[0]) <= 1e-4 * (1.0 + std::abs(linear[0])));

    const DenseVector full = recover_multiplier_full(sys, sys.u0, 0.0);
    const DenseVector full_oracle =
        implicit_euler_multiplier(sys, sys.u0, sys.f(sys.u0), 0.0, tau);
    CHECK(std::abs(full[0] - full_oracle[0]) <= 1e-4 * (1.0 + std::abs(full[0])));
    CHECK(std::abs(full[0] - linear[0]) > 1e-3);  // f(u0) contributes
  }
}

TEST_SUITE("commuting condition") {
  TEST_CASE("holds for the subset problem on random states") {
    const ConstrainedSystem sys = build_subset();
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 10; ++trial) {
      CHECK(commuting_defect(sys, random_vector(sys.dim(), rng, -3.0, 3.0)) <= 1e-12);
    }
  }

  TEST_CASE("fails for the integral-mean problem") {
    const ConstrainedSystem sys = build_integral_mean();
    CHECK(commuting_defect(sys, sys.u0) > 1e-3);
  }
}
