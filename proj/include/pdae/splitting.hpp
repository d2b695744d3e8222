#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pdae/constraint.hpp"
#include "pdae/subflows.hpp"

namespace pdae {

enum class Scheme { lie, lie_reversed, strang, strang_reversed };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

/// Which q_n enters both subsystems of a step (held constant over the step).
struct CorrectionKind {
  enum class Variant { none, nonlinear_at_state, nonlinear_at_constraint, perturbed_at_state };

  Variant variant = Variant::none;
  DenseVector perturbation;  // only for perturbed_at_state

  static CorrectionKind none() { return {}; }
  static CorrectionKind at_state() { return {Variant::nonlinear_at_state, {}}; }
  static CorrectionKind at_constraint() { return {Variant::nonlinear_at_constraint, {}}; }
  static CorrectionKind perturbed(DenseVector p) {
    return {Variant::perturbed_at_state, std::move(p)};
  }
};

std::string_view to_string(CorrectionKind::Variant v);
/// Accepts none | state | constraint | perturbed. The perturbation of the
/// perturbed kind has to be attached by the caller.
CorrectionKind::Variant parse_correction(std::string_view name);

/// none -> 0, at_state -> f(u_n), at_constraint -> f(D^- G(t_n)),
/// perturbed -> f(u_n) + p.
DenseVector make_correction(const CorrectionKind& kind, const ConstrainedSystem& sys,
                            const DenseVector& u_n, double t_n);

struct SchemeConfig {
  Scheme scheme = Scheme::strang;
  CorrectionKind correction;
  double tau = 0.0;
  int reaction_substeps = kDefaultReactionSubsteps;
};

/// Number of steps of size tau covering [t_start, t_end]; throws unless tau
/// divides the interval to 1e-12 relative.
std::size_t step_count(const ConstrainedSystem& sys, double tau);

struct StepContext {
  const ConstrainedSystem& sys;
  FlowCacheStore& caches;
  int reaction_substeps = kDefaultReactionSubsteps;
};

/// Reaction over tau, then the linear PDAE over tau.
DenseVector lie_step(const StepContext& ctx, double t_n, double tau, const DenseVector& u_n,
                     const CorrectionKind& correction);
/// Linear PDAE over tau, then reaction over tau.
DenseVector lie_reversed_step(const StepContext& ctx, double t_n, double tau,
                              const DenseVector& u_n, const CorrectionKind& correction);
/// Linear over tau/2, reaction over tau, linear over tau/2.
DenseVector strang_step(const StepContext& ctx, double t_n, double tau, const DenseVector& u_n,
                        const CorrectionKind& correction);
/// Reaction over tau/2, linear over tau, reaction over tau/2.
DenseVector strang_reversed_step(const StepContext& ctx, double t_n, double tau,
                                 const DenseVector& u_n, const CorrectionKind& correction);

DenseVector scheme_step(Scheme scheme, const StepContext& ctx, double t_n, double tau,
                        const DenseVector& u_n, const CorrectionKind& correction);

/// True if the scheme's last substep is the linear subflow, so its output
/// satisfies the constraint.
bool ends_with_linear_flow(Scheme scheme);

struct Trajectory {
  std::vector<double> times;
  std::vector<DenseVector> states;             // what the scheme steps with
  std::vector<DenseVector> consistent_states;  // D^- G(t) + P0 u
  std::vector<double> constraint_residuals;    // ||D u - G(t)|| of the raw state
  // Only filled when requested and G' is known.
  std::vector<DenseVector> multipliers_split;  // D(F + q_n + A u) - G'
  std::vector<DenseVector> multipliers_full;   // D(F + f(u) + A u) - G'

  std::size_t size() const noexcept { return times.size(); }
};

struct IntegrateOptions {
  std::size_t record_every = 1;  // keep every k-th state (the last one always)
  bool consistent_states = true;
  bool multipliers = false;
};

Trajectory integrate(const ConstrainedSystem& sys, FlowCacheStore& caches,
                     const SchemeConfig& config, const IntegrateOptions& options = {});

}  // namespace pdae
