#include "pdae/implicit.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "pdae/error.hpp"
#include "pdae/linalg/kernels.hpp"
#include "pdae/linalg/lu.hpp"

namespace pdae {

namespace {

class SaddleNewton {
 public:
  SaddleNewton(const ConstrainedSystem& sys, const ImplicitOptions& options, ImplicitStats& stats)
      : sys_(sys), options_(options), stats_(stats) {}

  // Solves for u at time t with u - gamma (A u + f(u) + F(t)) + D^- mu = history.
  DenseVector solve(double t, double gamma, const DenseVector& history, DenseVector u) {
    const std::size_t n = sys_.dim();
    const std::size_t m = sys_.constraint.constraint_dim();
    if (!lu_ || gamma != gamma_) factor(gamma, u);

    const DenseVector forcing = sys_.forcing_at(t);
    const DenseVector g = sys_.g(t);
    DenseVector mu(m);
    DenseVector rhs(n + m);
    double previous = 0.0;
    bool refreshed = false;
    for (int it = 0; it < options_.max_newton; ++it) {
      ++stats_.newton_iterations;
      DenseVector au = sys_.a * u;
      au += sys_.f(u);
      au += forcing;
      kernels::matvec(sys_.constraint.d_minus, mu.span(), dm_mu_);
      for (std::size_t i = 0; i < n; ++i) rhs[i] = -(u[i] - gamma * au[i] + dm_mu_[i] - history[i]);
      kernels::matvec(sys_.constraint.d, u.span(), du_);
      for (std::size_t r = 0; r < m; ++r) rhs[n + r] = -(du_[r] - g[r]);

      const DenseVector delta = lu_->solve(rhs);
      double step = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] += delta[i];
        step = std::max(step, std::abs(delta[i]));
      }
      for (std::size_t r = 0; r < m; ++r) mu[r] += delta[n + r];
      require(all_finite(u.span()), ErrorCode::reference_unreliable,
              "implicit solver: Newton iterate became non-finite");

      if (step <= options_.newton_tol * std::max(1.0, norm_inf(u))) return u;
      if (it > 0 && step > 0.5 * previous && !refreshed) {
        factor(gamma, u);
        refreshed = true;
      }
      previous = step;
    }
    std::ostringstream msg;
    msg << "implicit solver: Newton did not converge at t = " << t;
    throw Error(ErrorCode::reference_unreliable, msg.str());
  }

 private:
  void factor(double gamma, const DenseVector& u) {
    const std::size_t n = sys_.dim();
    const std::size_t m = sys_.constraint.constraint_dim();
    const auto& c = sys_.constraint;
    DenseMatrix j = sys_.a;
    j += sys_.f_jacobian(u);
    DenseMatrix k(n + m, n + m);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t s = 0; s < n; ++s) k(r, s) = -gamma * j(r, s);
      k(r, r) += 1.0;
      for (std::size_t s = 0; s < m; ++s) k(r, n + s) = c.d_minus(r, s);
    }
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t s = 0; s < n; ++s) k(n + r, s) = c.d(r, s);
    lu_.emplace(std::move(k));
    gamma_ = gamma;
    ++stats_.factorizations;
  }

  const ConstrainedSystem& sys_;
  const ImplicitOptions& options_;
  ImplicitStats& stats_;
  std::optional<LuFactorization> lu_;
  double gamma_ = 0.0;
  DenseVector dm_mu_;
  DenseVector du_;
};

}  // namespace

Trajectory solve_index2_bdf2(const ConstrainedSystem& sys, double tau,
                             const ImplicitOptions& options, ImplicitStats* stats) {
  require(static_cast<bool>(sys.f_jacobian), ErrorCode::config,
          "implicit solver: system has no Jacobian of f");
  require(options.record_every >= 1, ErrorCode::config, "implicit solver: record_every must be >= 1");
  const std::size_t steps = step_count(sys, tau);
  ImplicitStats local;
  ImplicitStats& st = stats ? *stats : local;
  SaddleNewton newton(sys, options, st);

  Trajectory traj;
  auto record = [&](double t, const DenseVector& u) {
    traj.times.push_back(t);
    traj.states.push_back(u);
    traj.constraint_residuals.push_back(consistency_residual(sys, u, t));
  };

  DenseVector previous;
  DenseVector u = sys.u0;
  record(sys.t_start, u);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t1 = sys.t_start + static_cast<double>(n + 1) * tau;
    DenseVector next;
    if (n == 0) {
      next = newton.solve(t1, tau, u, u);
    } else {
      DenseVector history = (4.0 / 3.0) * u;
      axpy(-1.0 / 3.0, previous, history);
      DenseVector guess = 2.0 * u;
      guess -= previous;
      next = newton.solve(t1, 2.0 * tau / 3.0, history, std::move(guess));
    }
    previous = std::move(u);
    u = std::move(next);
    ++st.steps;
    const std::size_t done = n + 1;
    if (done % options.record_every == 0 || done == steps) record(t1, u);
  }
  return traj;
}

}  // namespace pdae
