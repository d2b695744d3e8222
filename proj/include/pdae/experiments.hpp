#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pdae/constraint.hpp"
#include "pdae/splitting.hpp"
#include "pdae/subflows.hpp"

namespace pdae {

// ---------------------------------------------------------------- reference

struct ReferenceOptions {
  double tau_ref = 0.0;
  /// Spacing of the study grid (the finest study step); states are kept at
  /// every multiple of it. Must be at least 20 tau_ref.
  double grid_tau = 0.0;
  int reaction_substeps = kDefaultReactionSubsteps;
  bool cross_validate = true;
};

/// Outcome of comparing the reference with the implicit index-2 solver at
/// the same step. The estimates are step-doubling error estimates
/// ||X(tau) - X(2 tau)||_inf / 3 for a second-order method X.
struct CrossValidation {
  double discrepancy = 0.0;  // ||strang(T) - bdf2(T)||_inf
  double strang_estimate = 0.0;
  double implicit_estimate = 0.0;
  double bound = 0.0;  // 10 (strang_estimate + implicit_estimate)
  bool ok() const noexcept { return discrepancy <= bound; }
};

inline constexpr double kCrossValidationFactor = 10.0;

struct ReferenceSolution {
  Trajectory trajectory;
  double tau_ref = 0.0;
  double grid_tau = 0.0;
  std::optional<CrossValidation> check;

  /// State at a multiple of grid_tau; throws ErrorCode::domain otherwise.
  const DenseVector& at(double t) const;
};

/// Corrected Strang (q_n = f(u_n)) at tau_ref. With cross_validate, also
/// runs the implicit solver at tau_ref and both methods at 2 tau_ref, and
/// throws ErrorCode::reference_unreliable if the discrepancy exceeds the bound.
ReferenceSolution reference_solution(const ConstrainedSystem& sys, FlowCacheStore& caches,
                                     const ReferenceOptions& options);

/// Corrected Strang trajectory used as the reference, without any checks.
Trajectory reference_run(const ConstrainedSystem& sys, FlowCacheStore& caches, double tau_ref,
                         std::size_t record_every, int reaction_substeps);

// ---------------------------------------------------------------- orders

/// log2(err_coarse / err_fine); both must be positive.
double order_estimate(double err_coarse, double err_fine);

/// Least-squares slope of log(err) against log(tau); needs >= 2 points.
double loglog_slope(const std::vector<double>& taus, const std::vector<double>& errors);

/// tau0, tau0/2, ..., count entries.
std::vector<double> halving_chain(double tau0, std::size_t count);

// ---------------------------------------------------------------- global

enum class ErrorNorm { final_time, max_over_grid };

std::string_view to_string(ErrorNorm norm);
ErrorNorm parse_norm(std::string_view name);

struct ErrorPair {
  double linf = 0.0;
  double l2 = 0.0;  // sqrt(l2_weight * sum e_i^2)
};

ErrorPair state_error(const ConstrainedSystem& sys, const DenseVector& u, const DenseVector& ref);

struct ConvergenceRow {
  double tau = 0.0;
  ErrorPair final_time;
  ErrorPair max_over_grid;
  std::optional<double> order_linf;  // vs the previous (coarser) row, in the report's norm
  std::optional<double> order_l2;
  std::string failure;  // "<code>: <message>" if the run failed; errors are then NaN

  bool ok() const noexcept { return failure.empty(); }
  const ErrorPair& errors(ErrorNorm norm) const {
    return norm == ErrorNorm::final_time ? final_time : max_over_grid;
  }
};

struct ConvergenceReport {
  std::string problem;
  Scheme scheme = Scheme::strang;
  CorrectionKind::Variant correction = CorrectionKind::Variant::none;
  ErrorNorm norm = ErrorNorm::final_time;
  std::vector<ConvergenceRow> rows;
  std::string reference_method = "strang+state";
  double tau_ref = 0.0;

  /// Least-squares slope of the l_inf (or l2) errors over all successful rows.
  double slope_linf() const;
  double slope_l2() const;
};

struct StudyOptions {
  ErrorNorm norm = ErrorNorm::final_time;
  int reaction_substeps = kDefaultReactionSubsteps;
};

/// Taus must be strictly decreasing by factors of two and divide the
/// interval; every coarse-grid time must be on the reference grid.
ConvergenceReport global_convergence(const ConstrainedSystem& sys, FlowCacheStore& caches,
                                     const ReferenceSolution& ref, Scheme scheme,
                                     const CorrectionKind& correction,
                                     const std::vector<double>& taus,
                                     const StudyOptions& options = {});

/// Recomputes the order columns from the rows for the report's norm.
void assign_orders(ConvergenceReport& report);

// ---------------------------------------------------------------- local

struct LocalOrderReport {
  std::string problem;
  Scheme scheme = Scheme::strang;
  CorrectionKind::Variant correction = CorrectionKind::Variant::none;
  double t_anchor = 0.0;
  std::vector<double> taus;
  std::vector<double> errors;  // l_inf one-step errors
  double slope = 0.0;
};

/// One step of the scheme from the reference state at t_anchor, compared with
/// the reference at t_anchor + tau.
LocalOrderReport local_order(const ConstrainedSystem& sys, FlowCacheStore& caches,
                             const ReferenceSolution& ref, Scheme scheme,
                             const CorrectionKind& correction, const std::vector<double>& taus,
                             double t_anchor, int reaction_substeps = kDefaultReactionSubsteps);

// ---------------------------------------------------------------- studies

/// Strang with corrections A = f(u_n), B = f(u_n) + p, C = f(D^- G(t_n)).
std::array<ConvergenceReport, 3> correction_comparison(const ConstrainedSystem& sys,
                                                       FlowCacheStore& caches,
                                                       const ReferenceSolution& ref,
                                                       const std::vector<double>& taus,
                                                       const DenseVector& perturbation,
                                                       const StudyOptions& options = {});

/// Columns: (Lie, reversed Lie, Strang, reversed Strang) x (q = 0, q = f(u_n)).
struct OrderMatrix {
  static constexpr std::size_t kColumns = 8;
  std::array<double, kColumns> local_slopes{};
  std::array<double, kColumns> global_slopes{};
  std::array<LocalOrderReport, kColumns> local;
  std::array<ConvergenceReport, kColumns> global;

  std::array<int, kColumns> local_rounded() const;
  std::array<int, kColumns> global_rounded() const;
};

Scheme order_matrix_scheme(std::size_t column);
CorrectionKind::Variant order_matrix_correction(std::size_t column);

OrderMatrix order_matrix(const ConstrainedSystem& sys, FlowCacheStore& caches,
                         const ReferenceSolution& ref, const std::vector<double>& taus,
                         double t_anchor, const StudyOptions& options = {});

// ---------------------------------------------------------------- output

/// tau,err_linf,err_l2,order_linf,order_l2 with full precision.
void write_csv(std::ostream& out, const ConvergenceReport& report);
/// tau,local_err rows and a "# slope=" footer.
void write_csv(std::ostream& out, const LocalOrderReport& report);
/// Aligned text table with 4 significant digits; the other norm convention is
/// listed alongside.
void write_table(std::ostream& out, const ConvergenceReport& report);
void write_table(std::ostream& out, const OrderMatrix& matrix);
/// column,scheme,correction,local_slope,global_slope
void write_slopes_csv(std::ostream& out, const OrderMatrix& matrix);

/// Shortest round-trip decimal representation.
std::string format_full(double x);

}  // namespace pdae
