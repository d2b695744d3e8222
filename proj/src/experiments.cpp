#include "pdae/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>

#include "pdae/error.hpp"
#include "pdae/implicit.hpp"

namespace pdae {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGridTol = 1e-9;

// Runs body(i) for i in [0, n) across OpenMP threads; the first exception (by
// index) is rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, Body body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// k such that value = k * unit, or nullopt.
std::optional<std::size_t> integer_multiple(double value, double unit) {
  const double k = std::round(value / unit);
  if (k < 0.0 || std::abs(k * unit - value) > kGridTol * std::max(unit, std::abs(value))) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(k);
}

void warm_caches(FlowCacheStore& caches, Scheme scheme, const std::vector<double>& taus) {
  for (double tau : taus) {
    if (scheme == Scheme::strang) {
      caches.get(0.5 * tau);
    } else {
      caches.get(tau);
    }
  }
}

bool recoverable(const Error& e) {
  return e.code() != ErrorCode::config && e.code() != ErrorCode::dimension;
}

void check_study_taus(const std::vector<double>& taus, const ReferenceSolution& ref) {
  require(!taus.empty(), ErrorCode::config, "no step sizes");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(taus[i] > 0.0 && std::isfinite(taus[i]), ErrorCode::config,
            "step sizes must be positive");
    if (i > 0) {
      require(std::abs(taus[i - 1] / taus[i] - 2.0) <= kGridTol, ErrorCode::config,
              "step sizes must halve from one entry to the next");
    }
    if (!integer_multiple(taus[i], ref.grid_tau)) {
      std::ostringstream msg;
      msg << "step size " << taus[i] << " is not a multiple of the reference grid spacing "
          << ref.grid_tau;
      throw Error(ErrorCode::config, msg.str());
    }
  }
}

double max_grid_distance(const ConstrainedSystem& sys, const Trajectory& a, const Trajectory& b) {
  require(a.size() == b.size(), ErrorCode::dimension, "trajectories recorded on different grids");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, state_error(sys, a.states[i], b.states[i]).linf);
  }
  return worst;
}

}  // namespace

// ---------------------------------------------------------------- reference

const DenseVector& ReferenceSolution::at(double t) const {
  require(!trajectory.times.empty(), ErrorCode::domain, "reference: empty trajectory");
  const double t0 = trajectory.times.front();
  const auto k = integer_multiple(t - t0, grid_tau);
  if (!k || *k >= trajectory.size() ||
      std::abs(trajectory.times[*k] - t) > kGridTol * std::max(1.0, std::abs(t))) {
    std::ostringstream msg;
    msg << "reference: no state stored at t = " << t;
    throw Error(ErrorCode::domain, msg.str());
  }
  return trajectory.states[*k];
}

Trajectory reference_run(const ConstrainedSystem& sys, FlowCacheStore& caches, double tau_ref,
                         std::size_t record_every, int reaction_substeps) {
  SchemeConfig config;
  config.scheme = Scheme::strang;
  config.correction = CorrectionKind::at_state();
  config.tau = tau_ref;
  config.reaction_substeps = reaction_substeps;
  IntegrateOptions options;
  options.record_every = record_every;
  options.consistent_states = false;
  return integrate(sys, caches, config, options);
}

ReferenceSolution reference_solution(const ConstrainedSystem& sys, FlowCacheStore& caches,
                                     const ReferenceOptions& options) {
  require(options.tau_ref > 0.0 && options.grid_tau > 0.0, ErrorCode::config,
          "reference: tau_ref and the grid spacing must be positive");
  const auto ratio = integer_multiple(options.grid_tau, options.tau_ref);
  require(ratio.has_value(), ErrorCode::config,
          "reference: the study grid spacing must be a multiple of tau_ref");
  require(*ratio >= 20, ErrorCode::config, "reference: tau_ref must be <= (finest step) / 20");
  require(integer_multiple(sys.t_end - sys.t_start, options.grid_tau).has_value(),
          ErrorCode::config, "reference: the grid spacing must divide the time interval");

  ReferenceSolution ref;
  ref.tau_ref = options.tau_ref;
  ref.grid_tau = options.grid_tau;
  ref.trajectory = reference_run(sys, caches, options.tau_ref, *ratio, options.reaction_substeps);
  if (!options.cross_validate) return ref;

  // Compare on the grid that both tau_ref and 2 tau_ref hit.
  const std::size_t every = (*ratio % 2 == 0) ? *ratio : 2 * *ratio;
  auto thin = [every, ratio = *ratio](const Trajectory& t) {
    Trajectory out;
    const std::size_t stride = every / ratio;
    for (std::size_t i = 0; i < t.size(); i += stride) {
      out.times.push_back(t.times[i]);
      out.states.push_back(t.states[i]);
    }
    if (out.times.back() != t.times.back()) {
      out.times.push_back(t.times.back());
      out.states.push_back(t.states.back());
    }
    return out;
  };
  const Trajectory strang = thin(ref.trajectory);
  const Trajectory strang_2 = reference_run(sys, caches, 2.0 * options.tau_ref, every / 2,
                                            options.reaction_substeps);
  ImplicitOptions implicit;
  implicit.record_every = every;
  const Trajectory bdf = solve_index2_bdf2(sys, options.tau_ref, implicit);
  implicit.record_every = every / 2;
  const Trajectory bdf_2 = solve_index2_bdf2(sys, 2.0 * options.tau_ref, implicit);

  CrossValidation check;
  check.discrepancy = max_grid_distance(sys, strang, bdf);
  check.strang_estimate = max_grid_distance(sys, strang, strang_2) / 3.0;
  check.implicit_estimate = max_grid_distance(sys, bdf, bdf_2) / 3.0;
  check.bound = kCrossValidationFactor * (check.strang_estimate + check.implicit_estimate);
  ref.check = check;
  if (!check.ok()) {
    std::ostringstream msg;
    msg << "reference unreliable: corrected Strang and the implicit solver differ by "
        << check.discrepancy << " > " << check.bound << " (estimates " << check.strang_estimate
        << ", " << check.implicit_estimate << ")";
    throw Error(ErrorCode::reference_unreliable, msg.str());
  }
  return ref;
}

// ---------------------------------------------------------------- orders

double order_estimate(double err_coarse, double err_fine) {
  require(err_coarse > 0.0 && err_fine > 0.0, ErrorCode::domain,
          "order estimate needs positive errors");
  return std::log2(err_coarse / err_fine);
}

double loglog_slope(const std::vector<double>& taus, const std::vector<double>& errors) {
  require(taus.size() == errors.size(), ErrorCode::dimension, "slope: size mismatch");
  require(taus.size() >= 2, ErrorCode::config, "need ≥ 2 step sizes for a slope");
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(taus[i] > 0.0 && errors[i] > 0.0, ErrorCode::domain, "slope needs positive data");
    sx += std::log(taus[i]);
    sy += std::log(errors[i]);
  }
  const double n = static_cast<double>(taus.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double dx = std::log(taus[i]) - mx;
    sxy += dx * (std::log(errors[i]) - my);
    sxx += dx * dx;
  }
  require(sxx > 0.0, ErrorCode::domain, "slope needs distinct step sizes");
  return sxy / sxx;
}

std::vector<double> halving_chain(double tau0, std::size_t count) {
  require(tau0 > 0.0 && std::isfinite(tau0), ErrorCode::config, "step sizes must be positive");
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::ldexp(tau0, -static_cast<int>(i)));
  return out;
}

// ---------------------------------------------------------------- global

std::string_view to_string(ErrorNorm norm) {
  return norm == ErrorNorm::final_time ? "final" : "max";
}

ErrorNorm parse_norm(std::string_view name) {
  if (name == "final") return ErrorNorm::final_time;
  if (name == "max") return ErrorNorm::max_over_grid;
  throw Error(ErrorCode::config, "unknown norm '" + std::string(name) + "' (final|max)");
}

ErrorPair state_error(const ConstrainedSystem& sys, const DenseVector& u, const DenseVector& ref) {
  require(u.size() == ref.size(), ErrorCode::dimension, "error: size mismatch");
  ErrorPair e;
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = std::abs(u[i] - ref[i]);
    e.linf = std::max(e.linf, d);
    sum += d * d;
  }
  e.l2 = std::sqrt(sys.l2_weight * sum);
  return e;
}

namespace {

double report_slope(const ConvergenceReport& report, bool linf) {
  std::vector<double> taus, errs;
  for (const auto& row : report.rows) {
    if (!row.ok()) continue;
    const auto& e = row.errors(report.norm);
    const double v = linf ? e.linf : e.l2;
    if (!(v > 0.0)) continue;
    taus.push_back(row.tau);
    errs.push_back(v);
  }
  if (taus.size() < 2) return kNaN;
  return loglog_slope(taus, errs);
}

}  // namespace

double ConvergenceReport::slope_linf() const { return report_slope(*this, true); }
double ConvergenceReport::slope_l2() const { return report_slope(*this, false); }

void assign_orders(ConvergenceReport& report) {
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    auto& row = report.rows[i];
    row.order_linf.reset();
    row.order_l2.reset();
    if (i == 0 || !row.ok() || !report.rows[i - 1].ok()) continue;
    const auto& fine = row.errors(report.norm);
    const auto& coarse = report.rows[i - 1].errors(report.norm);
    if (coarse.linf > 0.0 && fine.linf > 0.0) row.order_linf = order_estimate(coarse.linf, fine.linf);
    if (coarse.l2 > 0.0 && fine.l2 > 0.0) row.order_l2 = order_estimate(coarse.l2, fine.l2);
  }
}

ConvergenceReport global_convergence(const ConstrainedSystem& sys, FlowCacheStore& caches,
                                     const ReferenceSolution& ref, Scheme scheme,
                                     const CorrectionKind& correction,
                                     const std::vector<double>& taus,
                                     const StudyOptions& options) {
  check_study_taus(taus, ref);
  for (double tau : taus) step_count(sys, tau);
  const DenseVector& ref_final = ref.at(sys.t_end);

  ConvergenceReport report;
  report.problem = sys.name;
  report.scheme = scheme;
  report.correction = correction.variant;
  report.norm = options.norm;
  report.tau_ref = ref.tau_ref;
  report.rows.resize(taus.size());

  warm_caches(caches, scheme, taus);
  parallel_for(taus.size(), [&](std::size_t i) {
    ConvergenceRow& row = report.rows[i];
    row.tau = taus[i];
    SchemeConfig config{scheme, correction, taus[i], options.reaction_substeps};
    IntegrateOptions io;
    io.consistent_states = false;
    try {
      const Trajectory traj = integrate(sys, caches, config, io);
      require(all_finite(traj.states.back().span()), ErrorCode::reaction_blow_up,
              "non-finite final state");
      row.final_time = state_error(sys, traj.states.back(), ref_final);
      for (std::size_t k = 0; k < traj.size(); ++k) {
        const ErrorPair e = state_error(sys, traj.states[k], ref.at(traj.times[k]));
        row.max_over_grid.linf = std::max(row.max_over_grid.linf, e.linf);
        row.max_over_grid.l2 = std::max(row.max_over_grid.l2, e.l2);
      }
    } catch (const Error& e) {
      if (!recoverable(e)) throw;
      row.failure = std::string(to_string(e.code())) + ": " + e.what();
      row.final_time = row.max_over_grid = {kNaN, kNaN};
    }
  });
  assign_orders(report);
  return report;
}

// ---------------------------------------------------------------- local

LocalOrderReport local_order(const ConstrainedSystem& sys, FlowCacheStore& caches,
                             const ReferenceSolution& ref, Scheme scheme,
                             const CorrectionKind& correction, const std::vector<double>& taus,
                             double t_anchor, int reaction_substeps) {
  require(!taus.empty(), ErrorCode::config, "no step sizes");
  require(taus.size() >= 2, ErrorCode::config, "need ≥ 2 step sizes for a slope");
  const double tau_max = *std::max_element(taus.begin(), taus.end());
  require(t_anchor >= sys.t_start && t_anchor + tau_max <= sys.t_end + kGridTol * tau_max,
          ErrorCode::config, "local order: anchor and anchor + max(tau) must lie in the time span");
  for (double tau : taus) {
    require(tau > 0.0, ErrorCode::config, "step sizes must be positive");
    require(integer_multiple(tau, ref.grid_tau).has_value(), ErrorCode::config,
            "local order: step sizes must be multiples of the reference grid spacing");
  }

  LocalOrderReport report;
  report.problem = sys.name;
  report.scheme = scheme;
  report.correction = correction.variant;
  report.t_anchor = t_anchor;
  report.taus = taus;
  report.errors.assign(taus.size(), kNaN);

  const DenseVector& start = ref.at(t_anchor);
  warm_caches(caches, scheme, taus);
  const StepContext ctx{sys, caches, reaction_substeps};
  parallel_for(taus.size(), [&](std::size_t i) {
    const DenseVector u1 = scheme_step(scheme, ctx, t_anchor, taus[i], start, correction);
    report.errors[i] = state_error(sys, u1, ref.at(t_anchor + taus[i])).linf;
  });

  const bool positive = std::all_of(report.errors.begin(), report.errors.end(),
                                    [](double e) { return e > 0.0; });
  report.slope = positive ? loglog_slope(report.taus, report.errors) : kNaN;
  return report;
}

// ---------------------------------------------------------------- studies

std::array<ConvergenceReport, 3> correction_comparison(const ConstrainedSystem& sys,
                                                       FlowCacheStore& caches,
                                                       const ReferenceSolution& ref,
                                                       const std::vector<double>& taus,
                                                       const DenseVector& perturbation,
                                                       const StudyOptions& options) {
  return {
      global_convergence(sys, caches, ref, Scheme::strang, CorrectionKind::at_state(), taus,
                         options),
      global_convergence(sys, caches, ref, Scheme::strang,
                         CorrectionKind::perturbed(perturbation), taus, options),
      global_convergence(sys, caches, ref, Scheme::strang, CorrectionKind::at_constraint(), taus,
                         options),
  };
}

Scheme order_matrix_scheme(std::size_t column) {
  static constexpr std::array<Scheme, 4> kSchemes{Scheme::lie, Scheme::lie_reversed,
                                                  Scheme::strang, Scheme::strang_reversed};
  return kSchemes.at(column / 2);
}

CorrectionKind::Variant order_matrix_correction(std::size_t column) {
  return column % 2 == 0 ? CorrectionKind::Variant::none
                         : CorrectionKind::Variant::nonlinear_at_state;
}

namespace {

std::array<int, OrderMatrix::kColumns> round_all(const std::array<double, OrderMatrix::kColumns>& s) {
  std::array<int, OrderMatrix::kColumns> out{};
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = std::isfinite(s[i]) ? static_cast<int>(std::lround(s[i])) : -1;
  return out;
}

}  // namespace

std::array<int, OrderMatrix::kColumns> OrderMatrix::local_rounded() const {
  return round_all(local_slopes);
}

std::array<int, OrderMatrix::kColumns> OrderMatrix::global_rounded() const {
  return round_all(global_slopes);
}

OrderMatrix order_matrix(const ConstrainedSystem& sys, FlowCacheStore& caches,
                         const ReferenceSolution& ref, const std::vector<double>& taus,
                         double t_anchor, const StudyOptions& options) {
  OrderMatrix m;
  for (std::size_t c = 0; c < OrderMatrix::kColumns; ++c) {
    const CorrectionKind correction{order_matrix_correction(c), {}};
    const Scheme scheme = order_matrix_scheme(c);
    m.local[c] =
        local_order(sys, caches, ref, scheme, correction, taus, t_anchor, options.reaction_substeps);
    m.global[c] = global_convergence(sys, caches, ref, scheme, correction, taus, options);
    m.local_slopes[c] = m.local[c].slope;
    m.global_slopes[c] = m.global[c].slope_linf();
  }
  return m;
}

// ---------------------------------------------------------------- output

std::string format_full(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string sci4(double x) {
  if (!std::isfinite(x)) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string fixed2(const std::optional<double>& x) {
  if (!x) return "--";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *x);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "tau,err_linf,err_l2,order_linf,order_l2\n";
  for (const auto& row : report.rows) {
    if (!row.ok()) continue;
    const auto& e = row.errors(report.norm);
    out << format_full(row.tau) << ',' << format_full(e.linf) << ',' << format_full(e.l2) << ','
        << (row.order_linf ? format_full(*row.order_linf) : "") << ','
        << (row.order_l2 ? format_full(*row.order_l2) : "") << '\n';
  }
}

void write_csv(std::ostream& out, const LocalOrderReport& report) {
  out << "tau,local_err\n";
  for (std::size_t i = 0; i < report.taus.size(); ++i)
    out << format_full(report.taus[i]) << ',' << format_full(report.errors[i]) << '\n';
  out << "# slope=" << format_full(report.slope) << '\n';
}

void write_table(std::ostream& out, const ConvergenceReport& report) {
  const ErrorNorm other =
      report.norm == ErrorNorm::final_time ? ErrorNorm::max_over_grid : ErrorNorm::final_time;
  out << report.problem << ": " << to_string(report.scheme) << ", q_n " << to_string(report.correction)
      << ", errors at " << (report.norm == ErrorNorm::final_time ? "final time" : "max over grid")
      << ", reference " << report.reference_method << " tau_ref=" << sci4(report.tau_ref) << '\n';
  char line[256];
  std::snprintf(line, sizeof line, "%-11s | %-11s %-6s | %-11s %-6s || %-11s %-11s\n", "step size",
                "l_inf error", "order", "l2 error", "order",
                other == ErrorNorm::max_over_grid ? "max l_inf" : "final l_inf",
                other == ErrorNorm::max_over_grid ? "max l2" : "final l2");
  out << line;
  for (const auto& row : report.rows) {
    if (!row.ok()) {
      out << sci4(row.tau) << "  failed: " << row.failure << '\n';
      continue;
    }
    const auto& e = row.errors(report.norm);
    const auto& a = row.errors(other);
    std::snprintf(line, sizeof line, "%-11s | %-11s %-6s | %-11s %-6s || %-11s %-11s\n",
                  sci4(row.tau).c_str(), sci4(e.linf).c_str(), fixed2(row.order_linf).c_str(),
                  sci4(e.l2).c_str(), fixed2(row.order_l2).c_str(), sci4(a.linf).c_str(),
                  sci4(a.l2).c_str());
    out << line;
  }
}

void write_table(std::ostream& out, const OrderMatrix& matrix) {
  char line[256];
  std::snprintf(line, sizeof line, "%-14s|| %-15s | %-15s || %-15s | %-15s\n", "", "Lie",
                "reversed Lie", "Strang", "reversed Strang");
  out << line;
  out << "q_n           ";
  for (std::size_t c = 0; c < OrderMatrix::kColumns; ++c)
    out << (c % 2 == 0 ? "|| " : "| ") << (c % 2 == 0 ? "0      " : "f(u_n) ");
  out << '\n';
  auto row = [&](const char* label, const std::array<int, OrderMatrix::kColumns>& v) {
    std::snprintf(line, sizeof line, "%-14s", label);
    out << line;
    for (std::size_t c = 0; c < v.size(); ++c) {
      std::snprintf(line, sizeof line, "%s%-7d", c % 2 == 0 ? "|| " : "| ", v[c]);
      out << line;
    }
    out << '\n';
  };
  row("local error", matrix.local_rounded());
  row("global error", matrix.global_rounded());
}

void write_slopes_csv(std::ostream& out, const OrderMatrix& matrix) {
  out << "column,scheme,correction,local_slope,global_slope\n";
  for (std::size_t c = 0; c < OrderMatrix::kColumns; ++c) {
    out << c << ',' << to_string(order_matrix_scheme(c)) << ','
        << to_string(order_matrix_correction(c)) << ',' << format_full(matrix.local_slopes[c])
        << ',' << format_full(matrix.global_slopes[c]) << '\n';
  }
}

}  // namespace pdae
