#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "pdae/constraint.hpp"
#include "pdae/linalg/dense.hpp"

namespace pdae {

/// Everything the exact linear subflow needs for one step size tau. The
/// generator of the constrained dynamics is M = P0 A P0, which maps ker D into
/// itself and annihilates range D^-.
struct LinearFlowCache {
  double tau = 0.0;
  DenseMatrix exp_p0;           // e^{tau M} P0
  DenseMatrix psi_p0;           // tau phi1(tau M) P0
  DenseMatrix psi_p0_a_dminus;  // tau phi1(tau M) P0 A D^-
  DenseMatrix p0_a_dminus;      // P0 A D^-
  DenseVector slope;            // P0 (F' + A D^- G') the phi2 term was built for
  DenseVector slope_term;       // tau^2 phi2(tau M) slope
};

/// M = P0 A P0
DenseMatrix constrained_generator(const ConstrainedSystem& sys);

LinearFlowCache build_linear_flow_cache(const ConstrainedSystem& sys, const DenseMatrix& m,
                                        double tau);

/// Thread-safe memo of LinearFlowCache by step size for one system.
class FlowCacheStore {
 public:
  explicit FlowCacheStore(const ConstrainedSystem& sys);

  const ConstrainedSystem& system() const noexcept { return *sys_; }
  const DenseMatrix& generator() const noexcept { return m_; }

  std::shared_ptr<const LinearFlowCache> get(double tau);
  std::size_t size() const;

 private:
  const ConstrainedSystem* sys_;
  DenseMatrix m_;
  mutable std::mutex mutex_;
  std::map<double, std::shared_ptr<const LinearFlowCache>> caches_;
};

/// Exact solution at t0 + tau of
///   v' - A v + D^- lambda = F(t) + q,   D v = G(t),   v(t0) = v0,
/// for F and G affine on the step and q constant. An inconsistent v0 enters
/// through its P0 component only, so the result jumps onto the constraint.
/// An empty `q` means zero.
DenseVector linear_pdae_flow(const ConstrainedSystem& sys, const LinearFlowCache& cache,
                             double t0, double tau, const DenseVector& v0, const DenseVector& q);

/// Classical RK4 with `substeps` equal substeps for w' = f(w) - q on [0, tau].
/// `t0` is only used to report where a blow-up happened.
DenseVector reaction_flow(const VectorField& f, const DenseVector& q, double tau,
                          const DenseVector& w0, int substeps, double t0 = 0.0);

inline constexpr int kDefaultReactionSubsteps = 20;

}  // namespace pdae
