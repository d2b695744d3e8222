#include "pdae/problems.hpp"

#include <cmath>
#include <numbers>

#include "pdae/error.hpp"
#include "pdae/linalg/kernels.hpp"

namespace pdae {

namespace {

constexpr double kPi = std::numbers::pi;

DenseVector sample(const Grid& grid, double (*fn)(double)) {
  DenseVector v(grid.nodes.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.nodes[i]);
  return v;
}

DenseVector square_pointwise(const DenseVector& u) {
  DenseVector out(u.size());
  kernels::transform(u.span(), out.span(), [](double x) { return x * x; });
  return out;
}

ConstrainedSystem build_integral_mean(const ProblemSpec& spec) {
  const std::size_t n = spec.n_grid;
  const Grid grid = dirichlet_grid(n);
  const double h = grid.spacing;

  // Trapezoidal weights of \int v sin(pi x) dx; the boundary nodes carry zero.
  DenseMatrix d(1, n);
  for (std::size_t i = 0; i < n; ++i) d(0, i) = h * std::sin(kPi * grid.nodes[i]);

  ConstrainedSystem sys;
  sys.name = "integral-mean";
  sys.a = spec.param("diffusion") * dirichlet_laplacian(n, h);
  sys.constraint = make_constraint_block(std::move(d), right_inverse::PseudoInverse{});
  sys.f = square_pointwise;
  sys.f_jacobian = [](const DenseVector& u) { return DenseMatrix::diagonal(2.0 * u); };
  sys.g = [](double t) { return DenseVector{t}; };
  sys.g_dot = [](double) { return DenseVector{1.0}; };
  sys.u0 = sample(grid, [](double x) { return std::pow(std::sin(2.0 * kPi * x), 3); });
  sys.t_start = 0.0;
  sys.t_end = spec.t_end;
  sys.grid = grid;
  sys.l2_weight = h;
  validate(sys);
  return sys;
}

ConstrainedSystem build_subset(const ProblemSpec& spec) {
  const std::size_t n = spec.n_grid;
  const Grid grid = dirichlet_grid(n);
  const double h = grid.spacing;
  const auto nodes = interval_nodes(grid, spec.param("omega_lo"), spec.param("omega_hi"));

  DenseMatrix d(nodes.size(), n);
  for (std::size_t r = 0; r < nodes.size(); ++r) d(r, nodes[r]) = 1.0;

  ConstrainedSystem sys;
  sys.name = "subset";
  sys.a = spec.param("diffusion") * dirichlet_laplacian(n, h);
  sys.constraint = make_constraint_block(std::move(d), right_inverse::ZeroExtension{});
  sys.f = square_pointwise;
  sys.f_jacobian = [](const DenseVector& u) { return DenseMatrix::diagonal(2.0 * u); };
  sys.u0 = sample(grid, [](double x) { return std::sin(kPi * x) * (1.0 + std::cos(7.0 * kPi * x)); });

  DenseVector g0(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) g0[r] = sys.u0[nodes[r]];
  const double growth = spec.param("growth");
  sys.g = [g0, growth](double t) { return (1.0 + growth * t) * g0; };
  sys.g_dot = [g0, growth](double) { return growth * g0; };
  sys.t_start = 0.0;
  sys.t_end = spec.t_end;
  sys.grid = grid;
  sys.l2_weight = h;
  validate(sys);
  return sys;
}

}  // namespace

DenseMatrix harmonic_extension(const Grid& grid, const std::vector<std::size_t>& nodes) {
  require(!nodes.empty() && nodes.back() - nodes.front() + 1 == nodes.size(), ErrorCode::policy,
          "harmonic extension needs a contiguous, nonempty node set");
  const std::size_t n = grid.nodes.size();
  const std::size_t m = nodes.size();
  const std::size_t first = nodes.front();
  const std::size_t last = nodes.back();
  DenseMatrix e(n, m);
  for (std::size_t r = 0; r < m; ++r) e(nodes[r], r) = 1.0;
  for (std::size_t i = 0; i < first; ++i) e(i, 0) = grid.nodes[i] / grid.nodes[first];
  for (std::size_t i = last + 1; i < n; ++i)
    e(i, m - 1) = (1.0 - grid.nodes[i]) / (1.0 - grid.nodes[last]);
  return e;
}

namespace {

ConstrainedSystem build_mechanical(const ProblemSpec& spec) {
  const std::size_t n = spec.n_grid;
  const Grid grid = dirichlet_grid(n);
  const double h = grid.spacing;
  const double c = spec.param("c");
  const double d1 = spec.param("d1");
  const double d2 = spec.param("d2");
  const double k0 = spec.param("k0");
  const double a = spec.param("a");
  const auto nodes = interval_nodes(grid, spec.param("omega_lo"), spec.param("omega_hi"));
  const std::size_t mc = nodes.size();

  // z = (u[0..n), v[n..2n), q, p)
  const std::size_t dim = 2 * n + 2;
  const std::size_t iq = 2 * n;
  const std::size_t ip = 2 * n + 1;

  DenseMatrix amat(dim, dim);
  const DenseMatrix lap = dirichlet_laplacian(n, h);
  for (std::size_t i = 0; i < n; ++i) {
    amat(i, n + i) = 1.0;
    for (std::size_t j = (i == 0 ? 0 : i - 1); j < std::min(n, i + 2); ++j)
      amat(n + i, j) = c * lap(i, j);
    amat(n + i, n + i) = -d1;
  }
  amat(iq, ip) = 1.0;
  amat(ip, ip) = -d1;

  // D z = (u|_{Omega0} - q 1, v|_{Omega0} - p 1); D^- = (E g1, E g2, 0, 0)
  // with E the harmonic or the zero extension.
  DenseMatrix d(2 * mc, dim);
  for (std::size_t r = 0; r < mc; ++r) {
    d(r, nodes[r]) = 1.0;
    d(r, iq) = -1.0;
    d(mc + r, n + nodes[r]) = 1.0;
    d(mc + r, ip) = -1.0;
  }
  DenseMatrix ext(n, mc);
  if (spec.param("harmonic_extension") != 0.0) {
    ext = harmonic_extension(grid, nodes);
  } else {
    for (std::size_t r = 0; r < mc; ++r) ext(nodes[r], r) = 1.0;
  }
  DenseMatrix d_minus(dim, 2 * mc);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < mc; ++r) {
      d_minus(i, r) = ext(i, r);
      d_minus(n + i, mc + r) = ext(i, r);
    }
  }

  ConstrainedSystem sys;
  sys.name = "mechanical";
  sys.a = std::move(amat);
  sys.constraint = make_constraint_block(std::move(d), right_inverse::Explicit{std::move(d_minus)});

  sys.f = [n, iq, ip, d1, d2, k0, a](const DenseVector& z) {
    DenseVector out(z.size());
    for (std::size_t i = 0; i < n; ++i) out[n + i] = -d1 * z[n + i] * z[n + i];
    const double q = z[iq];
    out[ip] = -k0 * (1.0 - a * a * q * q) * q + (d1 - d2) * z[ip];
    return out;
  };
  sys.f_jacobian = [n, iq, ip, d1, d2, k0, a](const DenseVector& z) {
    DenseMatrix j(z.size(), z.size());
    for (std::size_t i = 0; i < n; ++i) j(n + i, n + i) = -2.0 * d1 * z[n + i];
    const double q = z[iq];
    j(ip, iq) = -k0 * (1.0 - 3.0 * a * a * q * q);
    j(ip, ip) = d1 - d2;
    return j;
  };

  DenseVector g(2 * mc);
  for (std::size_t r = 0; r < mc; ++r) g[r] = spec.param("offset");
  sys.g = [g](double) { return g; };
  sys.g_dot = [m = g.size()](double) { return DenseVector(m); };

  // u0 = amplitude * (I - E B) sin(2 pi x)^3, v0 = E (p0 1).
  DenseVector z0(dim);
  const double amplitude = spec.param("amplitude");
  DenseVector s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amplitude * std::pow(std::sin(2.0 * kPi * grid.nodes[i]), 3);
  DenseVector on_set(mc);
  for (std::size_t r = 0; r < mc; ++r) on_set[r] = s[nodes[r]];
  const DenseVector lifted = ext * on_set;
  const DenseVector v0 = ext * DenseVector(mc, spec.param("p0"));
  for (std::size_t i = 0; i < n; ++i) {
    z0[i] = s[i] - lifted[i];
    z0[n + i] = v0[i];
  }
  z0[iq] = spec.param("q0");
  z0[ip] = spec.param("p0");
  sys.u0 = std::move(z0);

  sys.t_start = 0.0;
  sys.t_end = spec.t_end;
  sys.grid = grid;
  sys.l2_weight = h;
  validate(sys);
  return sys;
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::integral_mean: return "integral-mean";
    case ProblemKind::subset: return "subset";
    case ProblemKind::mechanical: return "mechanical";
  }
  return "?";
}

ProblemKind parse_problem(std::string_view name) {
  if (name == "integral-mean" || name == "integral_mean") return ProblemKind::integral_mean;
  if (name == "subset") return ProblemKind::subset;
  if (name == "mechanical") return ProblemKind::mechanical;
  throw Error(ErrorCode::config, "unknown problem '" + std::string(name) + "'");
}

double ProblemSpec::param(const std::string& key) const {
  auto it = parameters.find(key);
  require(it != parameters.end(), ErrorCode::config,
          std::string(to_string(kind)) + ": missing parameter '" + key + "'");
  return it->second;
}

ProblemSpec default_spec(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::integral_mean:
      return {kind, 500, 0.1, {{"diffusion", 0.1}}};
    case ProblemKind::subset:
      return {kind,
              500,
              0.1,
              {{"diffusion", 0.1}, {"omega_lo", 0.5}, {"omega_hi", 0.7}, {"growth", 2.0}}};
    case ProblemKind::mechanical:
      return {kind,
              250,
              1.0,
              {{"c", 0.5},
               {"d1", 10.0},
               {"d2", 3.0},
               {"k0", 100.0},
               {"a", 10.0},
               {"omega_lo", 0.65},
               {"omega_hi", 0.7},
               {"offset", 0.05},
               {"q0", -0.05},
               {"p0", 0.5},
               {"amplitude", 0.2},
               {"harmonic_extension", 1.0}}};
  }
  throw Error(ErrorCode::config, "unknown problem kind");
}

void validate(const ProblemSpec& spec) {
  const std::string name(to_string(spec.kind));
  require(spec.n_grid >= 10, ErrorCode::config, name + ": n_grid must be >= 10");
  require(spec.t_end > 0.0, ErrorCode::config, name + ": t_end must be positive");
  for (const auto& [key, value] : spec.parameters) {
    require(std::isfinite(value), ErrorCode::config, name + ": parameter '" + key + "' is not finite");
  }
  if (spec.kind != ProblemKind::integral_mean) {
    const double lo = spec.param("omega_lo");
    const double hi = spec.param("omega_hi");
    require(0.0 < lo && lo <= hi && hi < 1.0, ErrorCode::config,
            name + ": Omega0 endpoints must satisfy 0 < lo <= hi < 1");
  }
  if (spec.kind == ProblemKind::mechanical) {
    require(spec.param("c") > 0.0, ErrorCode::config, name + ": c must be positive");
    require(spec.param("d1") >= 0.0 && spec.param("d2") >= 0.0, ErrorCode::config,
            name + ": damping must be non-negative");
    require(std::abs(spec.param("a") * spec.param("q0")) < 1.0, ErrorCode::config,
            name + ": softening spring needs |a q0| < 1");
  } else {
    require(spec.param("diffusion") > 0.0, ErrorCode::config, name + ": diffusion must be positive");
  }
}

ConstrainedSystem build_problem(const ProblemSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case ProblemKind::integral_mean: return build_integral_mean(spec);
    case ProblemKind::subset: return build_subset(spec);
    case ProblemKind::mechanical: return build_mechanical(spec);
  }
  throw Error(ErrorCode::config, "unknown problem kind");
}

ConstrainedSystem build_integral_mean(std::size_t n) {
  ProblemSpec spec = default_spec(ProblemKind::integral_mean);
  spec.n_grid = n;
  return build_problem(spec);
}

ConstrainedSystem build_subset(std::size_t n) {
  ProblemSpec spec = default_spec(ProblemKind::subset);
  spec.n_grid = n;
  return build_problem(spec);
}

ConstrainedSystem build_mechanical(std::size_t n) {
  ProblemSpec spec = default_spec(ProblemKind::mechanical);
  spec.n_grid = n;
  return build_problem(spec);
}

DenseVector subset_perturbation(const ProblemSpec& spec) {
  require(spec.kind == ProblemKind::subset, ErrorCode::config,
          "perturbation is defined for the subset problem only");
  const Grid grid = dirichlet_grid(spec.n_grid);
  const double lo = spec.param("omega_lo");
  const double hi = spec.param("omega_hi");
  DenseVector p(spec.n_grid);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = grid.nodes[i];
    if (x < lo) {
      p[i] = std::sin(2.0 * kPi * x) * std::cos(42.0 * kPi * x);
    } else if (x > hi) {
      p[i] = -std::sin(10.0 / 3.0 * kPi * (x - hi)) * std::cos(70.0 * kPi * (x - hi));
    }
  }
  for (std::size_t idx : interval_nodes(grid, lo, hi)) p[idx] = 0.0;
  return p;
}

DenseVector subset_perturbation(std::size_t n) {
  ProblemSpec spec = default_spec(ProblemKind::subset);
  spec.n_grid = n;
  return subset_perturbation(spec);
}

Grid dirichlet_grid(std::size_t n) {
  Grid grid;
  grid.spacing = 1.0 / static_cast<double>(n + 1);
  grid.nodes = DenseVector(n);
  for (std::size_t i = 0; i < n; ++i) grid.nodes[i] = static_cast<double>(i + 1) * grid.spacing;
  return grid;
}

DenseMatrix dirichlet_laplacian(std::size_t n, double h) {
  DenseMatrix lap(n, n);
  const double s = 1.0 / (h * h);
  for (std::size_t i = 0; i < n; ++i) {
    lap(i, i) = -2.0 * s;
    if (i > 0) lap(i, i - 1) = s;
    if (i + 1 < n) lap(i, i + 1) = s;
  }
  return lap;
}

std::vector<std::size_t> interval_nodes(const Grid& grid, double lo, double hi) {
  // In units of h, node k (1-based) sits at k; membership is lo/h - 1/2 < k < hi/h + 1/2
  // with exact half-h ties left out.
  const double h = grid.spacing;
  const double first = lo / h - 0.5 + 1e-9;
  const double last = hi / h + 0.5 - 1e-9;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    if (k > first && k < last) out.push_back(i);
  }
  require(!out.empty(), ErrorCode::config, "no grid node falls into the constrained interval");
  return out;
}

}  // namespace pdae
