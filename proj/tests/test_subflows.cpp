#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "helpers.hpp"
#include "pdae/constraint.hpp"
#include "pdae/problems.hpp"
#include "pdae/subflows.hpp"

using namespace pdae;
using pdae::test::code_of;
using pdae::test::max_diff;
using pdae::test::random_vector;

namespace {

// Heat operator on 10 interior nodes with node `pinned` selected by D.
ConstrainedSystem pinned_heat(TimeFunction g, std::size_t pinned = 4) {
  const std::size_t n = 10;
  ConstrainedSystem sys;
  sys.name = "pinned-heat";
  sys.grid = dirichlet_grid(n);
  sys.a = dirichlet_laplacian(n, sys.grid.spacing);
  DenseMatrix d(1, n);
  d(0, pinned) = 1.0;
  sys.constraint = make_constraint_block(d, right_inverse::ZeroExtension{});
  sys.f = [n](const DenseVector&) { return DenseVector(n); };
  sys.g = std::move(g);
  sys.u0 = sys.constraint_offset(0.0);
  sys.t_end = 1.0;
  return sys;
}

DenseVector flow(const ConstrainedSystem& sys, double t0, double tau, const DenseVector& v0,
                 const DenseVector& q = {}) {
  const LinearFlowCache cache = build_linear_flow_cache(sys, constrained_generator(sys), tau);
  return linear_pdae_flow(sys, cache, t0, tau, v0, q);
}

}  // namespace

TEST_SUITE("linear flow") {
  TEST_CASE("eigenvector of the constrained generator") {
    const ConstrainedSystem sys = pinned_heat([](double) { return DenseVector{0.0}; });
    const DenseMatrix m = constrained_generator(sys);
    Eigen::MatrixXd em(10, 10);
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) em(i, j) = m(i, j);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(em);
    int checked = 0;
    for (int k = 0; k < 10; ++k) {
      const double mu = eig.eigenvalues()(k);
      if (std::abs(mu) < 1e-6) continue;  // the annihilated complement direction
      DenseVector v0(10);
      for (int i = 0; i < 10; ++i) v0[i] = eig.eigenvectors()(i, k);
      const double tau = 1e-3;
      const DenseVector out = flow(sys, 0.0, tau, v0);
      CHECK(max_diff(out, std::exp(mu * tau) * v0) <= 1e-12);
      ++checked;
    }
    CHECK(checked == 9);
  }

  TEST_CASE("stationary constraint offset") {
    // The pinned node is the last one and its column of A is cleared.
    ConstrainedSystem sys = pinned_heat([](double) { return DenseVector{2.5}; }, 9);
    for (std::size_t i = 0; i < 10; ++i) sys.a(i, 9) = 0.0;
    const DenseVector v0 = sys.constraint_offset(0.0);
    CHECK(max_diff(flow(sys, 0.0, 0.3, v0), v0) <= 1e-14);
  }

  TEST_CASE("inconsistent initial value jumps onto the constraint") {
    const ConstrainedSystem sys = build_integral_mean(100);
    const DenseVector delta{0.8};
    const DenseVector v0 = sys.u0 + sys.constraint.d_minus * delta;
    const double t0 = 0.0;
    const DenseVector out = flow(sys, t0, 1e-8, v0);
    const DenseVector limit = sys.constraint_offset(t0) + project_p0(sys.constraint, v0);
    CHECK(max_diff(out, limit) <= 1e-6);
    const double jump = norm_inf(sys.constraint.d_minus * delta);
    CHECK(std::abs(max_diff(out, v0) - jump) <= 1e-6);
  }

  TEST_CASE("constraint preservation on all benchmarks") {
    std::mt19937_64 rng(81);
    for (ProblemKind kind : {ProblemKind::integral_mean, ProblemKind::subset,
                             ProblemKind::mechanical}) {
      const ConstrainedSystem sys = build_problem(default_spec(kind));
      FlowCacheStore store(sys);
      const DenseVector q = random_vector(sys.dim(), rng);
      for (double tau : {4e-2, 1e-2, 1.25e-3}) {
        const double t0 = 0.02;
        DenseVector v0 = sys.constraint_offset(t0) + project_p0(sys.constraint, sys.u0);
        const DenseVector out = linear_pdae_flow(sys, *store.get(tau), t0, tau, v0, q);
        CHECK(consistency_residual(sys, out, t0 + tau) <= 1e-9);
        // (I - P0) out recovers D^- G(t0 + tau)
        const DenseVector complement = out - project_p0(sys.constraint, out);
        CHECK(max_diff(complement, sys.constraint_offset(t0 + tau)) <= 1e-10);
      }
    }
  }

  TEST_CASE("composition of two half steps") {
    for (ProblemKind kind : {ProblemKind::integral_mean, ProblemKind::subset}) {
      const ConstrainedSystem sys = build_problem(default_spec(kind));
      FlowCacheStore store(sys);
      const DenseVector q = sys.f(sys.u0);
      const double t0 = 0.01, tau = 2e-2;
      const DenseVector full = linear_pdae_flow(sys, *store.get(tau), t0, tau, sys.u0, q);
      const DenseVector half = linear_pdae_flow(sys, *store.get(tau / 2), t0, tau / 2, sys.u0, q);
      const DenseVector two =
          linear_pdae_flow(sys, *store.get(tau / 2), t0 + tau / 2, tau / 2, half, q);
      CHECK(max_diff(full, two) <= 1e-9);
    }
  }

  TEST_CASE("caches are reproducible and shared") {
    const ConstrainedSystem sys = build_integral_mean(60);
    const DenseMatrix m = constrained_generator(sys);
    const LinearFlowCache a = build_linear_flow_cache(sys, m, 0.01);
    const LinearFlowCache b = build_linear_flow_cache(sys, m, 0.01);
    CHECK(a.exp_p0 == b.exp_p0);
    CHECK(a.psi_p0 == b.psi_p0);
    CHECK(a.slope_term == b.slope_term);

    FlowCacheStore store(sys);
    std::vector<std::shared_ptr<const LinearFlowCache>> got(4);
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < got.size(); ++i) {
      workers.emplace_back([&, i] { got[i] = store.get(0.01); });
    }
    for (auto& w : workers) w.join();
    for (const auto& p : got) CHECK(p == got.front());
    CHECK(store.size() == 1);
    CHECK(got.front()->exp_p0 == a.exp_p0);
  }

  TEST_CASE("errors") {
    const ConstrainedSystem quad = pinned_heat([](double t) { return DenseVector{t * t}; });
    CHECK(code_of([&] { (void)flow(quad, 0.0, 0.1, quad.u0); }) == ErrorCode::not_affine);
    const ConstrainedSystem sys = pinned_heat([](double) { return DenseVector{0.0}; });
    const LinearFlowCache cache = build_linear_flow_cache(sys, constrained_generator(sys), 0.1);
    CHECK(code_of([&] { (void)linear_pdae_flow(sys, cache, 0.0, 0.2, sys.u0, {}); }) ==
          ErrorCode::domain);
    CHECK(code_of([&] { (void)linear_pdae_flow(sys, cache, 0.0, 0.1, DenseVector(3), {}); }) ==
          ErrorCode::dimension);
  }
}

TEST_SUITE("reaction flow") {
  const VectorField square = [](const DenseVector& w) {
    DenseVector out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[i] * w[i];
    return out;
  };

  TEST_CASE("zero nonlinearity is exact") {
    const VectorField zero = [](const DenseVector& w) { return DenseVector(w.size()); };
    const DenseVector w0{1.0, -2.0}, q{0.5, 3.0};
    const DenseVector w = reaction_flow(zero, q, 0.2, w0, 3);
    CHECK(max_diff(w, w0 - 0.2 * q) <= 1e-15);
  }

  TEST_CASE("Riccati closed form") {
    const DenseVector w = reaction_flow(square, {}, 0.1, {1.0}, 16);
    CHECK(std::abs(w[0] - 1.0 / 0.9) <= 1e-10);
  }

  TEST_CASE("fourth-order substep convergence") {
    const double c = -3.0, tau = 0.5;
    const VectorField linear = [c](const DenseVector& w) { return c * w; };
    const double exact = std::exp(c * tau);
    for (int substeps : {8, 16, 32}) {
      const double coarse = std::abs(reaction_flow(linear, {}, tau, {1.0}, substeps)[0] - exact);
      const double fine =
          std::abs(reaction_flow(linear, {}, tau, {1.0}, 2 * substeps)[0] - exact);
      CHECK(coarse / fine == doctest::Approx(16.0).epsilon(0.125));
    }
    for (int substeps : {4, 8, 16}) {
      const double ex = 1.0 / (1.0 - 0.5);
      const double coarse = std::abs(reaction_flow(square, {}, 0.5, {1.0}, substeps)[0] - ex);
      const double fine = std::abs(reaction_flow(square, {}, 0.5, {1.0}, 2 * substeps)[0] - ex);
      CHECK(coarse / fine == doctest::Approx(16.0).epsilon(0.125));
    }
  }

  TEST_CASE("blow-up is reported") {
    CHECK(code_of([&] { (void)reaction_flow(square, {}, 1.0, {100.0}, 20); }) ==
          ErrorCode::reaction_blow_up);
    CHECK(code_of([&] { (void)reaction_flow(square, {}, 0.1, {1.0}, 0); }) == ErrorCode::domain);
  }
}
