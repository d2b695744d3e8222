#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pdae/constraint.hpp"

namespace pdae {

enum class ProblemKind { integral_mean, subset, mechanical };

std::string_view to_string(ProblemKind kind);
/// integral-mean | subset | mechanical
ProblemKind parse_problem(std::string_view name);

/// Benchmark configuration. Parameter names:
///   integral_mean: diffusion
///   subset:        diffusion, omega_lo, omega_hi, growth
///   mechanical:    c, d1, d2, k0, a, omega_lo, omega_hi, offset, q0, p0, amplitude,
///                  harmonic_extension (nonzero: D^- extends linearly to the
///                  boundary; zero: D^- extends by zero)
struct ProblemSpec {
  ProblemKind kind = ProblemKind::integral_mean;
  std::size_t n_grid = 500;
  double t_end = 0.1;
  std::map<std::string, double> parameters;

  double param(const std::string& key) const;
};

ProblemSpec default_spec(ProblemKind kind);
void validate(const ProblemSpec& spec);
ConstrainedSystem build_problem(const ProblemSpec& spec);

/// u' - 0.1 u_xx - u^2 + D^- lambda = 0 on (0,1), homogeneous Dirichlet,
/// D u = \int u sin(pi x) dx = t, u0 = sin(2 pi x)^3, t in [0, 0.1].
ConstrainedSystem build_integral_mean(std::size_t n = 500);

/// Same PDE with u prescribed on [0.5, 0.7]: G(t) = (1 + 2t) u0|_{Omega0},
/// u0 = sin(pi x)(1 + cos(7 pi x)).
ConstrainedSystem build_subset(std::size_t n = 500);

/// Damped string coupled on [0.65, 0.7] to a softening spring-damper, state
/// z = (u, v, q, p) of size 2n + 2, t in [0, 1]. Both string blocks of D^-
/// use the harmonic extension by default, which keeps u0 continuous.
ConstrainedSystem build_mechanical(std::size_t n = 250);

/// Perturbation added to f(u_n) for the perturbed correction on the subset
/// problem; zero on the constrained nodes.
DenseVector subset_perturbation(const ProblemSpec& spec);
DenseVector subset_perturbation(std::size_t n = 500);

/// Identity on `nodes` (a contiguous run), linear decay to zero at x = 0 and
/// x = 1 elsewhere; a right-inverse of the restriction to `nodes`.
DenseMatrix harmonic_extension(const Grid& grid, const std::vector<std::size_t>& nodes);

/// Interior grid x_i = i h, h = 1/(n+1), i = 1..n.
Grid dirichlet_grid(std::size_t n);

/// tridiag(1, -2, 1) / h^2 on the interior nodes.
DenseMatrix dirichlet_laplacian(std::size_t n, double h);

/// Indices of the nodes assigned to the closed interval [lo, hi]: those whose
/// distance to the interval is below h/2.
std::vector<std::size_t> interval_nodes(const Grid& grid, double lo, double hi);

}  // namespace pdae
