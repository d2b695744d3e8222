#pragma once

#include <cstddef>

#include "pdae/constraint.hpp"
#include "pdae/splitting.hpp"

namespace pdae {

struct ImplicitOptions {
  std::size_t record_every = 1;
  double newton_tol = 1e-12;  // on ||du||_inf relative to max(1, ||u||_inf)
  int max_newton = 25;
};

struct ImplicitStats {
  std::size_t steps = 0;
  std::size_t factorizations = 0;
  std::size_t newton_iterations = 0;
};

/// Two-step BDF on the full coupled system (implicit Euler for the first
/// step). Every step solves the saddle-point problem
///   u - gamma (A u + f(u) + F(t)) + D^- mu = history,   D u = G(t)
/// for (u, mu = gamma lambda) by simplified Newton with a frozen, LU-factored
/// Jacobian [[I - gamma (A + f'(u*)), D^-], [D, 0]], refreshed when the
/// iteration stalls. Needs `f_jacobian`.
Trajectory solve_index2_bdf2(const ConstrainedSystem& sys, double tau,
                             const ImplicitOptions& options = {}, ImplicitStats* stats = nullptr);

}  // namespace pdae
