// Command layer behind the CLI: each command returns a table and/or JSON
// document plus an exit code. Parsing lives in tools/.
#pragma once

#include "flowcert/analysis.hpp"
#include "flowcert/sde_bounds.hpp"
#include "flowcert/simulate.hpp"
#include "flowcert/worst_case.hpp"

#include <string>
#include <utility>
#include <vector>

namespace flowcert {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitInfeasible = 2, kExitMarginal = 3, kExitIo = 4 };

int exit_code_for(SolveStatus s);

using Meta = std::vector<std::pair<std::string, std::string>>;

struct CsvTable {
  Meta meta;  // written as "# key=value" lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_string() const;
};

struct CmdResult {
  int exit_code = kExitOk;
  CsvTable table;
  json doc;  // command-specific; "config" is added by the caller
  std::string message;
};

// "gf" or "oscillator" (beta = 2 sqrt(mu) per row)
FlowSpec flow_from_id(const std::string& id, double mu = 0.0);

CmdResult cmd_rate(const std::string& flow_id, const std::vector<double>& mus, bool enforce_P_psd,
                   const BisectionOptions& opt = {});
CmdResult cmd_lyapunov(const std::vector<double>& mus, const SolverOptions& opt = {});
CmdResult cmd_verify(const json& certificate, const std::optional<std::vector<double>>& t_grid,
                     const SolverOptions& opt = {});
CmdResult cmd_worstcase(const std::string& flow_id, double mu, double tau, int n_points = 101);

struct SimulateParams {
  std::string flow = "gf";  // gf, nagf, oscillator, agf, sde, sde2
  std::string averaging = "none";  // none, pr, weighted, primal
  double alpha = 0.0;  // h_t = (t+1)^-alpha (sde, sde2); speed for nagf
  double beta = 0.5;   // u_t = (t+1)^-beta (weighted), a2 = t^beta (pr bound), a_t = t^beta (sde2 bound)
  double b = 3.0;      // damping b/t (agf, sde2)
  std::string function = "quadratic";  // quadratic, logcosh
  int dim = 1;
  double eig_lo = 0.1, eig_hi = 0.1;
  double x0 = 1.0;
  double t0 = 0.0, T = 10.0, dt = 1e-2;
  int paths = 100;
  std::uint64_t seed = 1;
  double sigma2 = 0.01;  // Sigma = sigma2 I
  double gamma = 1.0;
  std::string bound = "auto";  // auto, none
  int records = 200;
};

CmdResult cmd_simulate(const SimulateParams& p);

// family: step_only, pr_averaged, weighted_averaged, acc_diminishing, acc_printed
SdeBoundSpec bound_spec_from(const std::string& family, double alpha, double beta, double b,
                             const SdeConstants& constants);
CmdResult cmd_bounds(const SdeBoundSpec& spec, const std::vector<double>& t_grid);

// family: acc_sde, third_order, gf
CmdResult cmd_trivial(const std::string& family, const std::vector<double>& t_grid);

}  // namespace flowcert
