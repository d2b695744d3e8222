#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pdae/cli.hpp"
#include "pdae/error.hpp"

namespace fs = std::filesystem;
using pdae::cli::run;

namespace {

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<double> column(const std::string& csv_text, std::size_t col) {
  std::vector<double> out;
  const auto rows = lines(csv_text);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].empty() || rows[r][0] == '#') continue;
    std::istringstream in(rows[r]);
    std::string cell;
    for (std::size_t c = 0; c <= col; ++c) std::getline(in, cell, ',');
    out.push_back(cell.empty() ? std::nan("") : std::stod(cell));
  }
  return out;
}

double footer_slope(const std::string& csv_text) {
  const auto pos = csv_text.find("# slope=");
  REQUIRE(pos != std::string::npos);
  return std::stod(csv_text.substr(pos + 8));
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "pdae_cli_test";
  fs::create_directories(dir);
  return dir;
}

// Exactly one "error: " line, containing `needle`; other lines are diagnostics.
bool one_line_error(const Result& r, const std::string& needle) {
  int count = 0;
  bool found = false;
  for (const auto& l : lines(r.err)) {
    if (l.rfind("error: ", 0) != 0) continue;
    ++count;
    found = l.find(needle) != std::string::npos;
  }
  return count == 1 && found;
}

const std::vector<std::string> kSmall = {"--n", "60", "--no-cross-validate"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("cli parsing") {
  TEST_CASE("tau lists") {
    using pdae::cli::parse_taus;
    CHECK(parse_taus("2e-2:3") == std::vector<double>{2e-2, 1e-2, 5e-3});
    CHECK(parse_taus("0.1, 0.05") == std::vector<double>{0.1, 0.05});
    CHECK(parse_taus("").empty());
    CHECK(parse_taus("[0.1,0.05]") == std::vector<double>{0.1, 0.05});
    CHECK_THROWS_AS(parse_taus("0.1,abc"), pdae::Error);
    CHECK_THROWS_AS(parse_taus("0.1:2.5"), pdae::Error);
  }

  TEST_CASE("help") {
    const Result r = invoke({"--help"});
    CHECK(r.status == 0);
    CHECK(r.out.find("convergence") != std::string::npos);
  }

  TEST_CASE("usage errors exit with 2 and one line") {
    Result r = invoke({"convergence", "--taus", ""});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "no step sizes"));

    r = invoke({"local-order", "--taus", "1e-2"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "need ≥ 2 step sizes for a slope"));

    r = invoke({"convergence", "--problem", "stokes"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "unknown problem"));

    r = invoke({"convergence", "--scheme", "yoshida"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "unknown scheme"));

    r = invoke({"convergence", "--correction", "maybe"});
    CHECK(r.status == 2);

    r = invoke({"convergence", "--norm", "l1"});
    CHECK(r.status == 2);

    r = invoke({"convergence", "--n", "5"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "n_grid"));

    r = invoke({"table3", "--problem", "subset"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "integral-mean"));

    r = invoke({"convergence", "--emit-multipliers"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "--output"));

    r = invoke({"convergence", "--taus", "2e-2,5e-3", "--n", "30"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "halve"));

    r = invoke({"convergence", "--bogus"});
    CHECK(r.status == 2);
    CHECK(r.err.rfind("error: ", 0) == 0);

    r = invoke({});
    CHECK(r.status == 2);

    r = invoke({"convergence", "--output", "/nonexistent-dir/x.csv", "--n", "30",
                "--taus", "2e-2:2", "--no-cross-validate"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "cannot write"));
  }

  TEST_CASE("perturbed correction needs the subset problem") {
    const Result r = invoke(with({"convergence", "--correction", "perturbed", "--taus", "2e-2:2"},
                                 kSmall));
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "subset"));
  }

  TEST_CASE("problem parameters") {
    Result r = invoke(with({"multiplier", "--taus", "2e-2", "--param", "diffusion=0.2"}, kSmall));
    CHECK(r.status == 0);
    const Result base = invoke(with({"multiplier", "--taus", "2e-2"}, kSmall));
    CHECK(r.out != base.out);
    r = invoke(with({"multiplier", "--taus", "2e-2", "--param", "gravity=1"}, kSmall));
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "unknown parameter"));
    r = invoke(with({"multiplier", "--taus", "2e-2", "--param", "diffusion"}, kSmall));
    CHECK(r.status == 2);
    r = invoke(with({"multiplier", "--taus", "2e-2", "--param", "diffusion=-1"}, kSmall));
    CHECK(r.status == 2);
  }

  TEST_CASE("numerical failures exit with 3") {
    const Result blow = invoke({"convergence", "--problem", "mechanical", "--n", "20", "--taus",
                                "4e-2:2", "--param", "p0=-50", "--no-cross-validate"});
    CHECK(blow.status == 3);
    CHECK(one_line_error(blow, "reaction_blow_up"));

    // An explicit tau_ref that is too coarse relative to the grid spacing.
    Result r = invoke(with({"convergence", "--taus", "2e-2:2", "--tau-ref", "1e-3"}, kSmall));
    CHECK(r.status == 2);
    r = invoke(with({"multiplier", "--problem", "mechanical", "--taus", "4e-2", "--n", "20"}, {}));
    CHECK(r.status == 0);
    r = invoke({"local-order", "--n", "30", "--taus", "2e-2:3", "--anchor", "0.013",
                "--no-cross-validate"});
    CHECK(r.status == 2);
    CHECK(one_line_error(r, "--anchor"));
  }
}

TEST_SUITE("cli commands") {
  TEST_CASE("convergence CSV is complete and byte-stable") {
    const auto args = with({"convergence", "--scheme", "lie", "--taus", "2e-2:3"}, kSmall);
    const Result a = invoke(args);
    const Result b = invoke(args);
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    const auto l = lines(a.out);
    REQUIRE(l.size() == 4);
    CHECK(l[0] == "tau,err_linf,err_l2,order_linf,order_l2");
    CHECK(l[1].rfind("0.02,", 0) == 0);
    CHECK(l[1].substr(l[1].size() - 2) == ",,");
    const auto orders = column(a.out, 3);
    CHECK(std::abs(orders[2] - 1.0) < 0.2);
  }

  TEST_CASE("output file, table and sidecars") {
    const fs::path dir = scratch_dir();
    const fs::path out = dir / "conv.csv";
    const Result r = invoke(with({"convergence", "--taus", "2e-2:2", "--output", out.string(),
                                  "--emit-multipliers", "--emit-residuals", "--norm", "max"},
                                 kSmall));
    REQUIRE(r.status == 0);
    CHECK(r.out.find("step size") != std::string::npos);
    CHECK(slurp(out).rfind("tau,err_linf,err_l2,order_linf,order_l2\n", 0) == 0);
    const std::string mult = slurp(out.string() + ".multipliers.csv");
    CHECK(mult.rfind("t,index,lambda_split,lambda_full\n", 0) == 0);
    CHECK(lines(mult).size() == 1 + 11);  // 10 steps of 1e-2 plus t = 0
    const std::string res = slurp(out.string() + ".residuals.csv");
    CHECK(lines(res).size() == 1 + 11);
    for (double x : column(res, 1)) CHECK(x <= 1e-9);
  }

  TEST_CASE("config file with flag overrides") {
    const fs::path dir = scratch_dir();
    const fs::path cfg = dir / "run.ini";
    {
      std::ofstream f(cfg);
      f << "problem=integral-mean\nn=60\nscheme=strang\ncorrection=state\n"
           "taus=2e-2,1e-2,5e-3\ncross-validate=false\n";
    }
    const Result from_file = invoke({"local-order", "--config", cfg.string()});
    REQUIRE(from_file.status == 0);
    CHECK(lines(from_file.out).size() == 1 + 3 + 1);
    const Result direct = invoke({"local-order", "--n", "60", "--scheme", "strang", "--correction",
                                  "state", "--taus", "2e-2:3", "--no-cross-validate"});
    CHECK(direct.out == from_file.out);

    const Result overridden = invoke({"local-order", "--config", cfg.string(), "--scheme", "lie",
                                      "--correction", "none"});
    REQUIRE(overridden.status == 0);
    const Result lie = invoke({"local-order", "--n", "60", "--scheme", "lie", "--taus", "2e-2:3",
                               "--no-cross-validate"});
    CHECK(overridden.out == lie.out);
    CHECK(overridden.out != from_file.out);
  }

  TEST_CASE("multiplier dump") {
    const Result r = invoke(with({"multiplier", "--taus", "2e-2", "--scheme", "lie"}, kSmall));
    REQUIRE(r.status == 0);
    const auto l = lines(r.out);
    CHECK(l[0] == "t,index,lambda_split,lambda_full");
    CHECK(l.size() == 1 + 6);
  }

  TEST_CASE("table3 without reaction prints a note instead of the matrix") {
    const fs::path side = scratch_dir() / "slopes.csv";
    const Result r = invoke(with({"table3", "--zero-reaction", "--taus", "2e-2:4", "--output",
                                  side.string()},
                                 kSmall));
    REQUIRE(r.status == 0);
    CHECK(r.out.rfind("note: all local errors are below", 0) == 0);
    CHECK(r.out.find("||") == std::string::npos);
    CHECK(slurp(side).rfind("column,scheme,correction,local_slope,global_slope\n", 0) == 0);
  }
}

TEST_SUITE("cli benchmarks") {
  TEST_CASE("Lie on integral-mean, first error cell") {
    const Result r = invoke({"convergence", "--problem", "integral-mean", "--scheme", "lie",
                             "--correction", "none", "--taus", "2e-2:6"});
    REQUIRE(r.status == 0);
    const auto errs = column(r.out, 1);
    REQUIRE(errs.size() == 6);
    CHECK(errs[0] >= 8.895e-04 / 3.0);
    CHECK(errs[0] <= 8.895e-04 * 3.0);
  }

  TEST_CASE("local-order slopes and table3 matrix") {
    const Result strang = invoke({"local-order", "--scheme", "strang", "--correction", "state",
                                  "--taus", "2e-2:6", "--no-cross-validate"});
    REQUIRE(strang.status == 0);
    CHECK(std::abs(footer_slope(strang.out) - 3.0) <= 0.3);

    const Result rev = invoke({"local-order", "--scheme", "lie-reversed", "--correction", "none",
                               "--taus", "2e-2:6", "--no-cross-validate"});
    REQUIRE(rev.status == 0);
    CHECK(std::abs(footer_slope(rev.out) - 1.0) <= 0.25);

    const fs::path side = scratch_dir() / "table3.csv";
    const Result t3 = invoke({"table3", "--no-cross-validate", "--output", side.string()});
    REQUIRE(t3.status == 0);
    const auto l = lines(t3.out);
    REQUIRE(l.size() == 4);
    auto digits = [](const std::string& row) {
      std::vector<int> v;
      std::istringstream in(row.substr(14));
      for (std::string tok; in >> tok;)
        if (tok != "||" && tok != "|") v.push_back(std::stoi(tok));
      return v;
    };
    CHECK(digits(l[2]) == std::vector<int>{2, 2, 1, 2, 2, 3, 1, 2});
    CHECK(digits(l[3]) == std::vector<int>{1, 1, 1, 1, 1, 2, 1, 2});
    const auto local = column(slurp(side), 3);
    REQUIRE(local.size() == 8);
    CHECK(local[5] == doctest::Approx(3.0).epsilon(0.1));
  }

  TEST_CASE("mechanical corrected Strang, final order cell") {
    const Result r = invoke({"convergence", "--problem", "mechanical", "--scheme", "strang",
                             "--correction", "state", "--taus", "4e-2:6", "--no-cross-validate"});
    REQUIRE(r.status == 0);
    const auto orders = column(r.out, 3);
    REQUIRE(orders.size() == 6);
    CHECK(std::abs(orders.back() - 1.98) <= 0.2);
  }
}
