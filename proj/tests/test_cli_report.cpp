#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowcert/cli_report.hpp"

#include <cmath>
#include <sstream>

using namespace flowcert;

TEST_CASE("exit codes") {
  CHECK(exit_code_for(SolveStatus::Feasible) == 0);
  CHECK(exit_code_for(SolveStatus::Infeasible) == 2);
  CHECK(exit_code_for(SolveStatus::Marginal) == 3);
}

TEST_CASE("csv layout") {
  CsvTable t;
  t.meta = {{"command", "x"}, {"seed", "3"}};
  t.columns = {"a", "b"};
  t.rows = {{1.0, 0.5}, {2.0, 1e-12}};
  CHECK(t.to_string() == "# command=x\n# seed=3\na,b\n1,0.5\n2,1e-12\n");
}

TEST_CASE("rate and lyapunov tables") {
  auto r = cmd_rate("oscillator", {0.01, 0.25}, false);
  CHECK(r.exit_code == 0);
  REQUIRE(r.table.rows.size() == 2);
  CHECK(r.table.columns == std::vector<std::string>{"condition", "pep", "theory", "relative_gap"});
  for (const auto& row : r.table.rows) {
    CHECK(row[2] == doctest::Approx(4.0 / 3.0 * std::sqrt(row[0])));
    CHECK(std::abs(row[3]) <= 1e-3);
  }
  CHECK(r.doc["rows"][1]["certificate"]["family"]["family"] == "oscillator");

  auto l = cmd_lyapunov({0.04});
  CHECK(l.exit_code == 0);
  CHECK(l.table.rows[0][1] == doctest::Approx(l.table.rows[0][4]).epsilon(0.05));
  CHECK(l.table.rows[0][2] == doctest::Approx(l.table.rows[0][5]).epsilon(0.05));

  CHECK_THROWS_AS(cmd_rate("nope", {0.1}, false), std::invalid_argument);
  auto bad = cmd_rate("gf", {0.0}, false);
  CHECK(bad.exit_code == kExitInfeasible);
}

TEST_CASE("verify round trip through json text") {
  auto r = cmd_rate("gf", {0.1}, false);
  std::stringstream ss;
  ss << r.doc["rows"][0]["certificate"].dump();
  json j;
  ss >> j;
  auto v = cmd_verify(j, std::nullopt);
  CHECK(v.exit_code == 0);
  CHECK(v.doc["certified"] == true);

  j["rate_tau"] = 0.25;
  CHECK(cmd_verify(j, std::nullopt).exit_code == kExitInfeasible);
}

TEST_CASE("worstcase samples") {
  auto w = cmd_worstcase("gf", 0.1, 0.2);
  REQUIRE(w.table.rows.size() == 101);
  for (const auto& row : w.table.rows) CHECK(std::abs(row[1] - 0.05 * row[0] * row[0]) <= 1e-6);
  CHECK(cmd_worstcase("gf", 0.1, 0.2, 11).table.rows.size() == 11);
  CHECK_THROWS_AS(cmd_worstcase("gf", 0.1, 0.3), std::runtime_error);
}

TEST_CASE("simulate command") {
  SimulateParams p;
  p.flow = "gf";
  p.T = 10;
  auto r = cmd_simulate(p);
  CHECK(r.exit_code == 0);
  CHECK(r.doc["bound_checked"] == true);
  CHECK(r.table.columns == std::vector<std::string>{"time", "f_mean", "f_stderr", "bound", "margin"});

  SimulateParams s;
  s.flow = "sde";
  s.averaging = "pr";
  s.alpha = 0.5;
  s.beta = 0.5;
  s.dim = 3;
  s.eig_lo = 0.05;
  s.eig_hi = 1;
  s.T = 20;
  s.paths = 50;
  s.records = 10;
  auto a = cmd_simulate(s), b = cmd_simulate(s);
  CHECK(a.table.to_string() == b.table.to_string());
  CHECK(a.doc["bound_violated"] == false);
  s.seed = 2;
  CHECK(cmd_simulate(s).table.to_string() != a.table.to_string());

  SimulateParams bad;
  bad.flow = "warp";
  CHECK_THROWS_AS(cmd_simulate(bad), std::invalid_argument);
}

TEST_CASE("bounds and trivial-check") {
  SdeConstants k;
  auto b = cmd_bounds(bound_spec_from("step_only", 0.0, 0, 0, k), {0.0, 1.0});
  CHECK(b.table.rows[1][2] == doctest::Approx(1.0));
  CHECK(b.table.rows[0][2] == 0.0);
  CHECK_THROWS_AS(bound_spec_from("pr_averaged", 0.7, 0.6, 0, k), std::invalid_argument);
  CHECK_THROWS_AS(bound_spec_from("bogus", 0, 0, 0, k), std::invalid_argument);

  auto t = cmd_trivial("acc_sde", default_triviality_grid());
  CHECK(t.doc["trivial_only"] == true);
  CHECK(cmd_trivial("gf", default_triviality_grid()).doc["trivial_only"] == false);
}
