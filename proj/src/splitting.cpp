#include "pdae/splitting.hpp"

#include <cmath>
#include <sstream>

#include "pdae/error.hpp"

namespace pdae {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::lie: return "lie";
    case Scheme::lie_reversed: return "lie-reversed";
    case Scheme::strang: return "strang";
    case Scheme::strang_reversed: return "strang-reversed";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "lie") return Scheme::lie;
  if (name == "lie-reversed" || name == "lie_reversed") return Scheme::lie_reversed;
  if (name == "strang") return Scheme::strang;
  if (name == "strang-reversed" || name == "strang_reversed") return Scheme::strang_reversed;
  throw Error(ErrorCode::config, "unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(CorrectionKind::Variant v) {
  switch (v) {
    case CorrectionKind::Variant::none: return "none";
    case CorrectionKind::Variant::nonlinear_at_state: return "state";
    case CorrectionKind::Variant::nonlinear_at_constraint: return "constraint";
    case CorrectionKind::Variant::perturbed_at_state: return "perturbed";
  }
  return "?";
}

CorrectionKind::Variant parse_correction(std::string_view name) {
  using V = CorrectionKind::Variant;
  if (name == "none") return V::none;
  if (name == "state") return V::nonlinear_at_state;
  if (name == "constraint") return V::nonlinear_at_constraint;
  if (name == "perturbed") return V::perturbed_at_state;
  throw Error(ErrorCode::config, "unknown correction '" + std::string(name) + "'");
}

DenseVector make_correction(const CorrectionKind& kind, const ConstrainedSystem& sys,
                            const DenseVector& u_n, double t_n) {
  require(u_n.size() == sys.dim(), ErrorCode::dimension, "correction: state has the wrong size");
  using V = CorrectionKind::Variant;
  switch (kind.variant) {
    case V::none:
      return DenseVector(sys.dim());
    case V::nonlinear_at_state:
      return sys.f(u_n);
    case V::nonlinear_at_constraint:
      return sys.f(sys.constraint_offset(t_n));
    case V::perturbed_at_state: {
      require(kind.perturbation.size() == sys.dim(), ErrorCode::dimension,
              "correction: perturbation has the wrong size");
      DenseVector q = sys.f(u_n);
      q += kind.perturbation;
      return q;
    }
  }
  return DenseVector(sys.dim());
}

std::size_t step_count(const ConstrainedSystem& sys, double tau) {
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::config, "step size must be positive");
  const double span = sys.t_end - sys.t_start;
  const double steps = std::round(span / tau);
  if (std::abs(steps * tau - span) > 1e-12 * std::max(span, tau)) {
    std::ostringstream msg;
    msg << "step size " << tau << " does not divide the time interval " << span;
    throw Error(ErrorCode::config, msg.str());
  }
  return static_cast<std::size_t>(steps);
}

namespace {

DenseVector linear(const StepContext& ctx, double t0, double tau, const DenseVector& v0,
                   const DenseVector& q) {
  return linear_pdae_flow(ctx.sys, *ctx.caches.get(tau), t0, tau, v0, q);
}

DenseVector reaction(const StepContext& ctx, double t0, double tau, const DenseVector& w0,
                     const DenseVector& q) {
  return reaction_flow(ctx.sys.f, q, tau, w0, ctx.reaction_substeps, t0);
}

}  // namespace

DenseVector lie_step(const StepContext& ctx, double t_n, double tau, const DenseVector& u_n,
                     const CorrectionKind& correction) {
  const DenseVector q = make_correction(correction, ctx.sys, u_n, t_n);
  const DenseVector w = reaction(ctx, t_n, tau, u_n, q);
  return linear(ctx, t_n, tau, w, q);
}

DenseVector lie_reversed_step(const StepContext& ctx, double t_n, double tau,
                              const DenseVector& u_n, const CorrectionKind& correction) {
  const DenseVector q = make_correction(correction, ctx.sys, u_n, t_n);
  const DenseVector v = linear(ctx, t_n, tau, u_n, q);
  return reaction(ctx, t_n, tau, v, q);
}

DenseVector strang_step(const StepContext& ctx, double t_n, double tau, const DenseVector& u_n,
                        const CorrectionKind& correction) {
  const DenseVector q = make_correction(correction, ctx.sys, u_n, t_n);
  const double half = 0.5 * tau;
  const DenseVector v = linear(ctx, t_n, half, u_n, q);
  const DenseVector w = reaction(ctx, t_n, tau, v, q);
  return linear(ctx, t_n + half, half, w, q);
}

DenseVector strang_reversed_step(const StepContext& ctx, double t_n, double tau,
                                 const DenseVector& u_n, const CorrectionKind& correction) {
  const DenseVector q = make_correction(correction, ctx.sys, u_n, t_n);
  const double half = 0.5 * tau;
  const DenseVector w = reaction(ctx, t_n, half, u_n, q);
  const DenseVector v = linear(ctx, t_n, tau, w, q);
  return reaction(ctx, t_n + half, half, v, q);
}

DenseVector scheme_step(Scheme scheme, const StepContext& ctx, double t_n, double tau,
                        const DenseVector& u_n, const CorrectionKind& correction) {
  switch (scheme) {
    case Scheme::lie: return lie_step(ctx, t_n, tau, u_n, correction);
    case Scheme::lie_reversed: return lie_reversed_step(ctx, t_n, tau, u_n, correction);
    case Scheme::strang: return strang_step(ctx, t_n, tau, u_n, correction);
    case Scheme::strang_reversed: return strang_reversed_step(ctx, t_n, tau, u_n, correction);
  }
  throw Error(ErrorCode::config, "unknown scheme");
}

bool ends_with_linear_flow(Scheme scheme) {
  return scheme == Scheme::lie || scheme == Scheme::strang;
}

namespace {

void record(Trajectory& traj, const ConstrainedSystem& sys, const SchemeConfig& config,
            const IntegrateOptions& options, double t, const DenseVector& u) {
  traj.times.push_back(t);
  traj.states.push_back(u);
  traj.constraint_residuals.push_back(consistency_residual(sys, u, t));

  const bool want_consistent = options.consistent_states || options.multipliers;
  DenseVector consistent;
  if (want_consistent) {
    consistent = sys.constraint_offset(t);
    consistent += project_p0(sys.constraint, u);
  }
  if (options.multipliers && sys.g_dot) {
    const DenseVector q = make_correction(config.correction, sys, consistent, t);
    traj.multipliers_split.push_back(recover_multiplier(sys, consistent, t, &q));
    traj.multipliers_full.push_back(recover_multiplier_full(sys, consistent, t));
  }
  if (options.consistent_states) traj.consistent_states.push_back(std::move(consistent));
}

}  // namespace

Trajectory integrate(const ConstrainedSystem& sys, FlowCacheStore& caches,
                     const SchemeConfig& config, const IntegrateOptions& options) {
  require(&caches.system() == &sys, ErrorCode::config,
          "integrate: cache store belongs to a different system");
  require(options.record_every >= 1, ErrorCode::config, "integrate: record_every must be >= 1");
  const std::size_t steps = step_count(sys, config.tau);
  const StepContext ctx{sys, caches, config.reaction_substeps};

  Trajectory traj;
  DenseVector u = sys.u0;
  record(traj, sys, config, options, sys.t_start, u);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t_n = sys.t_start + static_cast<double>(n) * config.tau;
    try {
      u = scheme_step(config.scheme, ctx, t_n, config.tau, u, config.correction);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "step " << n << " (t = " << t_n << "): " << e.what();
      throw Error(e.code(), msg.str());
    }
    const std::size_t done = n + 1;
    if (done % options.record_every == 0 || done == steps) {
      record(traj, sys, config, options, sys.t_start + static_cast<double>(done) * config.tau, u);
    }
  }
  return traj;
}

}  // namespace pdae
