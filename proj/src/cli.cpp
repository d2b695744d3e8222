#include "pdae/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "pdae/error.hpp"

namespace pdae::cli {

namespace {

constexpr double kExactLocalError = 1e-9;
constexpr std::size_t kReferenceRatio = 20;

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::config, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"' || s.front() == '[')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == ']')) s.remove_suffix(1);
  return s;
}

int exit_code_for(ErrorCode code) {
  return (code == ErrorCode::config || code == ErrorCode::policy) ? kUsage : kNumerical;
}

void report_error(std::ostream& err, const Error& e) {
  err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
}

ProblemSpec make_spec(const RunConfig& cfg) {
  ProblemSpec spec = default_spec(cfg.problem);
  if (cfg.n_grid) spec.n_grid = *cfg.n_grid;
  for (const auto& [key, value] : cfg.parameters) {
    require(spec.parameters.count(key) > 0, ErrorCode::config,
            "unknown parameter '" + key + "' for " + std::string(to_string(cfg.problem)));
    spec.parameters[key] = value;
  }
  validate(spec);
  return spec;
}

ConstrainedSystem make_system(const RunConfig& cfg) {
  ConstrainedSystem sys = build_problem(make_spec(cfg));
  if (cfg.zero_reaction) {
    const std::size_t n = sys.dim();
    sys.f = [n](const DenseVector&) { return DenseVector(n); };
    sys.f_jacobian = [n](const DenseVector&) { return DenseMatrix(n, n); };
    sys.name += " (f = 0)";
  }
  return sys;
}

CorrectionKind make_correction_kind(const RunConfig& cfg) {
  if (cfg.correction != CorrectionKind::Variant::perturbed_at_state) return {cfg.correction, {}};
  require(cfg.problem == ProblemKind::subset, ErrorCode::config,
          "the perturbed correction is only defined for the subset problem");
  return CorrectionKind::perturbed(subset_perturbation(make_spec(cfg)));
}

void check_taus(const std::vector<double>& taus) {
  require(!taus.empty(), ErrorCode::config, "no step sizes");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    require(taus[i] > 0.0 && std::isfinite(taus[i]), ErrorCode::config,
            "step sizes must be positive");
    require(i == 0 || std::abs(taus[i - 1] / taus[i] - 2.0) <= 1e-9, ErrorCode::config,
            "step sizes must halve from one entry to the next");
  }
}

ReferenceSolution make_reference(const RunConfig& cfg, const ConstrainedSystem& sys,
                                 FlowCacheStore& caches) {
  const double finest = *std::min_element(cfg.taus.begin(), cfg.taus.end());
  ReferenceOptions opts;
  opts.grid_tau = finest;
  opts.tau_ref = cfg.tau_ref.value_or(finest / static_cast<double>(kReferenceRatio));
  opts.reaction_substeps = cfg.substeps;
  opts.cross_validate = cfg.cross_validate;
  return reference_solution(sys, caches, opts);
}

void write_reference_note(std::ostream& err, const ReferenceSolution& ref) {
  if (!ref.check) return;
  err << "reference: tau_ref=" << format_full(ref.tau_ref)
      << " cross-check discrepancy=" << format_full(ref.check->discrepancy)
      << " bound=" << format_full(ref.check->bound) << '\n';
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : fallback_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    require(file_->good(), ErrorCode::config, "cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : *fallback_; }
  bool is_file() const { return file_ != nullptr; }
  void close(const std::string& path) {
    if (!file_) return;
    file_->close();
    require(!file_->fail(), ErrorCode::config, "failed writing '" + path + "'");
  }

 private:
  std::ostream* fallback_;
  std::unique_ptr<std::ofstream> file_;
};

void write_to_file(const std::string& path, const std::string& content) {
  Sink sink(path, std::cout);
  sink.stream() << content;
  sink.close(path);
}

void write_multiplier_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,index,lambda_split,lambda_full\n";
  for (std::size_t k = 0; k < traj.multipliers_split.size(); ++k) {
    const DenseVector& split = traj.multipliers_split[k];
    const DenseVector& full = traj.multipliers_full[k];
    for (std::size_t i = 0; i < split.size(); ++i) {
      out << format_full(traj.times[k]) << ',' << i << ',' << format_full(split[i]) << ','
          << format_full(full[i]) << '\n';
    }
  }
}

void write_residual_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,residual\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << format_full(traj.times[k]) << ',' << format_full(traj.constraint_residuals[k]) << '\n';
  }
}

Trajectory single_run(const RunConfig& cfg, const ConstrainedSystem& sys, FlowCacheStore& caches,
                      double tau, bool multipliers) {
  SchemeConfig sc;
  sc.scheme = cfg.scheme;
  sc.correction = make_correction_kind(cfg);
  sc.tau = tau;
  sc.reaction_substeps = cfg.substeps;
  IntegrateOptions io;
  io.multipliers = multipliers;
  if (multipliers) {
    require(static_cast<bool>(sys.g_dot), ErrorCode::multiplier_unavailable,
            "the problem does not provide G'");
  }
  return integrate(sys, caches, sc, io);
}

int cmd_convergence(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(!(cfg.emit_multipliers || cfg.emit_residuals) || !cfg.output.empty(), ErrorCode::config,
          "--emit-multipliers and --emit-residuals need --output");
  const ConstrainedSystem sys = make_system(cfg);
  FlowCacheStore caches(sys);
  const ReferenceSolution ref = make_reference(cfg, sys, caches);
  write_reference_note(err, ref);

  StudyOptions so;
  so.norm = cfg.norm;
  so.reaction_substeps = cfg.substeps;
  ConvergenceReport report = global_convergence(sys, caches, ref, cfg.scheme,
                                                make_correction_kind(cfg), cfg.taus, so);
  report.problem = std::string(to_string(cfg.problem));

  Sink sink(cfg.output, out);
  write_csv(sink.stream(), report);
  sink.close(cfg.output);
  if (sink.is_file()) write_table(out, report);

  if (cfg.emit_multipliers || cfg.emit_residuals) {
    const double finest = cfg.taus.back();
    const Trajectory traj = single_run(cfg, sys, caches, finest, cfg.emit_multipliers);
    if (cfg.emit_multipliers) {
      std::ostringstream s;
      write_multiplier_csv(s, traj);
      write_to_file(cfg.output + ".multipliers.csv", s.str());
    }
    if (cfg.emit_residuals) {
      std::ostringstream s;
      write_residual_csv(s, traj);
      write_to_file(cfg.output + ".residuals.csv", s.str());
    }
  }

  int status = kSuccess;
  for (const auto& row : report.rows) {
    if (row.ok()) continue;
    err << "error: " << row.failure << " (tau=" << format_full(row.tau) << ")\n";
    status = kNumerical;
  }
  return status;
}

double anchor_of(const RunConfig& cfg, const ConstrainedSystem& sys, double grid_tau) {
  const double anchor = cfg.anchor.value_or(sys.t_start);
  const double k = std::round((anchor - sys.t_start) / grid_tau);
  require(std::abs(sys.t_start + k * grid_tau - anchor) <= 1e-9 * std::max(1.0, std::abs(anchor)),
          ErrorCode::config, "--anchor must be a multiple of the finest step size");
  return anchor;
}

int cmd_local_order(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.taus.size() >= 2, ErrorCode::config, "need ≥ 2 step sizes for a slope");
  const ConstrainedSystem sys = make_system(cfg);
  FlowCacheStore caches(sys);
  const ReferenceSolution ref = make_reference(cfg, sys, caches);
  write_reference_note(err, ref);

  LocalOrderReport report =
      local_order(sys, caches, ref, cfg.scheme, make_correction_kind(cfg), cfg.taus,
                  anchor_of(cfg, sys, ref.grid_tau), cfg.substeps);
  report.problem = std::string(to_string(cfg.problem));
  Sink sink(cfg.output, out);
  write_csv(sink.stream(), report);
  sink.close(cfg.output);
  return kSuccess;
}

int cmd_table3(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  require(cfg.problem == ProblemKind::integral_mean, ErrorCode::config,
          "table3 runs on the integral-mean problem only");
  require(cfg.taus.size() >= 2, ErrorCode::config, "need ≥ 2 step sizes for a slope");
  const ConstrainedSystem sys = make_system(cfg);
  FlowCacheStore caches(sys);
  const ReferenceSolution ref = make_reference(cfg, sys, caches);
  write_reference_note(err, ref);

  StudyOptions so;
  so.norm = cfg.norm;
  so.reaction_substeps = cfg.substeps;
  const OrderMatrix matrix =
      order_matrix(sys, caches, ref, cfg.taus, anchor_of(cfg, sys, ref.grid_tau), so);

  bool exact = true;
  for (const auto& local : matrix.local) {
    for (double e : local.errors) exact = exact && e < kExactLocalError;
  }
  const std::string sidecar = cfg.output.empty() ? "table3_slopes.csv" : cfg.output;
  std::ostringstream slopes;
  write_slopes_csv(slopes, matrix);
  write_to_file(sidecar, slopes.str());
  if (exact) {
    out << "note: all local errors are below " << kExactLocalError
        << "; the subflows compose exactly and no orders are defined\n";
  } else {
    write_table(out, matrix);
  }
  return kSuccess;
}

int cmd_multiplier(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  const ConstrainedSystem sys = make_system(cfg);
  FlowCacheStore caches(sys);
  const Trajectory traj = single_run(cfg, sys, caches, cfg.taus.front(), true);
  Sink sink(cfg.output, out);
  write_multiplier_csv(sink.stream(), traj);
  sink.close(cfg.output);
  return kSuccess;
}

std::vector<double> default_taus(ProblemKind kind) {
  return halving_chain(kind == ProblemKind::mechanical ? 4e-2 : 2e-2, 6);
}

}  // namespace

std::vector<double> parse_taus(std::string_view text) {
  text = trim(text);
  std::vector<double> taus;
  if (text.empty()) return taus;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    const double start = parse_double(trim(text.substr(0, colon)));
    const double count = parse_double(trim(text.substr(colon + 1)));
    require(count >= 0.0 && count == std::floor(count) && count < 64.0, ErrorCode::config,
            "halving chain count must be a small non-negative integer");
    return halving_chain(start, static_cast<std::size_t>(count));
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = trim(text.substr(pos, comma - pos));
    if (!item.empty()) taus.push_back(parse_double(item));
    pos = comma + 1;
  }
  return taus;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Operator splitting for constrained diffusion-reaction systems", "pdae-split"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.require_subcommand(1);

  std::string problem = "integral-mean";
  std::string scheme = "strang";
  std::string correction = "none";
  std::string norm = "final";
  std::string taus_text;
  std::size_t n_grid = 0;
  RunConfig cfg;
  double tau_ref = 0.0;
  double anchor = 0.0;

  std::vector<std::string> params;
  app.add_option("--problem", problem, "integral-mean | subset | mechanical");
  app.add_option("--param", params, "problem parameter override key=value (repeatable)");
  auto* n_opt = app.add_option("--n", n_grid, "spatial grid size");
  app.add_option("--scheme", scheme, "lie | lie-reversed | strang | strang-reversed");
  app.add_option("--correction", correction, "none | state | constraint | perturbed");
  auto* taus_opt = app.add_option("--taus", taus_text, "a,b,c or start:count (halving)")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::Join);
  auto* tau_ref_opt = app.add_option("--tau-ref", tau_ref, "reference step (default finest/20)");
  app.add_option("--output", cfg.output, "output file (default stdout)");
  app.add_option("--norm", norm, "final | max");
  app.add_option("--substeps", cfg.substeps, "RK4 substeps per reaction flow")
      ->check(CLI::PositiveNumber);
  auto* anchor_opt = app.add_option("--anchor", anchor, "local-order anchor time");
  app.add_flag("--emit-multipliers", cfg.emit_multipliers, "convergence: multiplier sidecar");
  app.add_flag("--emit-residuals", cfg.emit_residuals, "convergence: residual sidecar");
  app.add_flag("--cross-validate,!--no-cross-validate", cfg.cross_validate,
               "check the reference against the implicit solver");
  app.add_flag("--zero-reaction", cfg.zero_reaction, "replace f by 0");

  app.add_subcommand("convergence", "global errors and orders, CSV")->fallthrough();
  app.add_subcommand("local-order", "one-step errors and slope, CSV")->fallthrough();
  app.add_subcommand("table3", "local and global order matrix")->fallthrough();
  app.add_subcommand("multiplier", "multipliers along a run at the first step size")
      ->fallthrough();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kSuccess;
    }
    err << "error: config: " << e.what() << '\n';
    return kUsage;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.problem = parse_problem(problem);
    cfg.scheme = parse_scheme(scheme);
    cfg.correction = parse_correction(correction);
    cfg.norm = parse_norm(norm);
    if (n_opt->count() > 0) cfg.n_grid = n_grid;
    for (const std::string& item : params) {
      const auto eq = item.find('=');
      require(eq != std::string::npos && eq > 0, ErrorCode::config,
              "--param expects key=value, got '" + item + "'");
      cfg.parameters[item.substr(0, eq)] = parse_double(trim(std::string_view(item).substr(eq + 1)));
    }
    if (tau_ref_opt->count() > 0) cfg.tau_ref = tau_ref;
    if (anchor_opt->count() > 0) cfg.anchor = anchor;
    cfg.taus = taus_opt->count() > 0 ? parse_taus(taus_text) : default_taus(cfg.problem);
    check_taus(cfg.taus);

    if (cfg.command == "convergence") return cmd_convergence(cfg, out, err);
    if (cfg.command == "local-order") return cmd_local_order(cfg, out, err);
    if (cfg.command == "table3") return cmd_table3(cfg, out, err);
    return cmd_multiplier(cfg, out, err);
  } catch (const Error& e) {
    report_error(err, e);
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace pdae::cli
