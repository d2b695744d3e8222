#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pdae/experiments.hpp"
#include "pdae/problems.hpp"
#include "pdae/splitting.hpp"

namespace pdae::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kNumerical = 3 };

struct RunConfig {
  std::string command;  // convergence | local-order | table3 | multiplier
  ProblemKind problem = ProblemKind::integral_mean;
  std::optional<std::size_t> n_grid;
  std::map<std::string, double> parameters;  // overrides of the problem defaults
  Scheme scheme = Scheme::strang;
  CorrectionKind::Variant correction = CorrectionKind::Variant::none;
  std::vector<double> taus;
  std::optional<double> tau_ref;  // default: finest / 20
  std::string output;             // empty: stdout
  bool emit_multipliers = false;
  bool emit_residuals = false;
  ErrorNorm norm = ErrorNorm::final_time;
  int substeps = kDefaultReactionSubsteps;
  std::optional<double> anchor;  // default: t_start
  bool cross_validate = true;
  bool zero_reaction = false;  // table3 only
};

/// "2e-2:6" (start and count of a halving chain) or "2e-2,1e-2,5e-3".
std::vector<double> parse_taus(std::string_view text);

/// Runs `pdae-split` with argv[1..] in `args`; returns the exit status.
/// Results go to `out` (or the --output file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdae::cli
