#include "pdae/subflows.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pdae/error.hpp"
#include "pdae/linalg/expm.hpp"
#include "pdae/linalg/kernels.hpp"

namespace pdae {

namespace {

constexpr double kAffineTol = 1e-10;
constexpr double kSlopeMatchTol = 1e-12;

// Midpoint test: an affine function satisfies h(t0 + tau/2) = (h(t0) + h(t0 + tau)) / 2.
void check_affine(const TimeFunction& h, double t0, double tau, const char* what) {
  const DenseVector a = h(t0);
  const DenseVector b = h(t0 + tau);
  DenseVector mid = h(t0 + 0.5 * tau);
  const double scale = std::max({1.0, norm_inf(a), norm_inf(b)});
  axpy(-0.5, a, mid);
  axpy(-0.5, b, mid);
  if (norm_inf(mid) > kAffineTol * scale) {
    std::ostringstream msg;
    msg << "inhomogeneity not affine: " << what << " on [" << t0 << ", " << t0 + tau << "]";
    throw Error(ErrorCode::not_affine, msg.str());
  }
}

// P0 (F' + A D^- G') over the step.
DenseVector step_slope(const ConstrainedSystem& sys, const DenseMatrix& p0_a_dminus, double t0,
                       double tau) {
  DenseVector g_slope;
  if (sys.g_dot) {
    g_slope = sys.g_dot(t0);
  } else {
    g_slope = (1.0 / tau) * (sys.g(t0 + tau) - sys.g(t0));
  }
  DenseVector slope = p0_a_dminus * g_slope;
  if (sys.forcing) {
    const DenseVector f_slope = (1.0 / tau) * (sys.forcing(t0 + tau) - sys.forcing(t0));
    slope += sys.constraint.p0 * f_slope;
  }
  return slope;
}

}  // namespace

DenseMatrix constrained_generator(const ConstrainedSystem& sys) {
  const auto& p0 = sys.constraint.p0;
  return p0 * (sys.a * p0);
}

LinearFlowCache build_linear_flow_cache(const ConstrainedSystem& sys, const DenseMatrix& m,
                                        double tau) {
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::domain, "linear flow: tau must be > 0");
  const auto& c = sys.constraint;

  LinearFlowCache cache;
  cache.tau = tau;
  ExpPhi1 e = expm_phi1(m, tau);
  cache.exp_p0 = e.exp * c.p0;
  cache.psi_p0 = e.psi * c.p0;
  cache.p0_a_dminus = c.p0 * (sys.a * c.d_minus);
  cache.psi_p0_a_dminus = cache.psi_p0 * (sys.a * c.d_minus);

  cache.slope = step_slope(sys, cache.p0_a_dminus, sys.t_start, tau);
  if (norm_inf(cache.slope) == 0.0) {
    cache.slope_term = DenseVector(sys.dim());
  } else {
    cache.slope_term = affine_exp_integral(m, tau, DenseVector(sys.dim()), cache.slope);
  }
  return cache;
}

FlowCacheStore::FlowCacheStore(const ConstrainedSystem& sys)
    : sys_(&sys), m_(constrained_generator(sys)) {}

std::shared_ptr<const LinearFlowCache> FlowCacheStore::get(double tau) {
  std::lock_guard lock(mutex_);
  auto it = caches_.find(tau);
  if (it != caches_.end()) return it->second;
  auto cache = std::make_shared<const LinearFlowCache>(build_linear_flow_cache(*sys_, m_, tau));
  caches_.emplace(tau, cache);
  return cache;
}

std::size_t FlowCacheStore::size() const {
  std::lock_guard lock(mutex_);
  return caches_.size();
}

DenseVector linear_pdae_flow(const ConstrainedSystem& sys, const LinearFlowCache& cache,
                             double t0, double tau, const DenseVector& v0, const DenseVector& q) {
  require(tau == cache.tau, ErrorCode::domain, "linear flow: cache built for a different tau");
  const std::size_t n = sys.dim();
  require(v0.size() == n, ErrorCode::dimension, "linear flow: v0 has the wrong size");
  require(q.empty() || q.size() == n, ErrorCode::dimension, "linear flow: q has the wrong size");

  check_affine(sys.g, t0, tau, "G");
  if (sys.forcing) check_affine(sys.forcing, t0, tau, "F");

  // D^- G(t0 + tau) + e^{tau M} P0 v0
  //   + \int_0^tau e^{(tau-s)M} P0 (F(t0+s) + q + A D^- G(t0+s)) ds
  DenseVector out = sys.constraint_offset(t0 + tau);
  kernels::matvec_add(cache.exp_p0, v0.span(), out.span());

  DenseVector constant_rhs = q.empty() ? DenseVector(n) : q;
  if (sys.forcing) constant_rhs += sys.forcing(t0);
  kernels::matvec_add(cache.psi_p0, constant_rhs.span(), out.span());
  kernels::matvec_add(cache.psi_p0_a_dminus, sys.g(t0).span(), out.span());

  const DenseVector slope = step_slope(sys, cache.p0_a_dminus, t0, tau);
  DenseVector diff = slope - cache.slope;
  if (norm_inf(diff) <= kSlopeMatchTol * (1.0 + norm_inf(cache.slope))) {
    out += cache.slope_term;
  } else {
    // Slope differs from the one cached at t_start (piecewise-affine data).
    const DenseMatrix m = constrained_generator(sys);
    out += affine_exp_integral(m, tau, DenseVector(n), slope);
  }
  return out;
}

DenseVector reaction_flow(const VectorField& f, const DenseVector& q, double tau,
                          const DenseVector& w0, int substeps, double t0) {
  require(substeps >= 1, ErrorCode::domain, "reaction flow: substeps must be >= 1");
  require(tau >= 0.0, ErrorCode::domain, "reaction flow: tau must be >= 0");
  require(q.empty() || q.size() == w0.size(), ErrorCode::dimension,
          "reaction flow: q has the wrong size");

  const double h = tau / substeps;
  const std::size_t n = w0.size();
  auto rhs = [&](const DenseVector& w) {
    DenseVector k = f(w);
    if (!q.empty()) k -= q;
    return k;
  };

  DenseVector w = w0;
  DenseVector stage(n);
  for (int s = 0; s < substeps; ++s) {
    const DenseVector k1 = rhs(w);
    for (std::size_t i = 0; i < n; ++i) stage[i] = w[i] + 0.5 * h * k1[i];
    const DenseVector k2 = rhs(stage);
    for (std::size_t i = 0; i < n; ++i) stage[i] = w[i] + 0.5 * h * k2[i];
    const DenseVector k3 = rhs(stage);
    for (std::size_t i = 0; i < n; ++i) stage[i] = w[i] + h * k3[i];
    const DenseVector k4 = rhs(stage);
    for (std::size_t i = 0; i < n; ++i)
      w[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(w.span())) {
      std::ostringstream msg;
      msg << "reaction blow-up: non-finite state at t = " << t0 + (s + 1) * h << " (substep "
          << s + 1 << " of " << substeps << ")";
      throw Error(ErrorCode::reaction_blow_up, msg.str());
    }
  }
  return w;
}

}  // namespace pdae
