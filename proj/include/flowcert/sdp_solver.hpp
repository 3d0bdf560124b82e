// Small dense SDP solver: log-det barrier, damped Newton, equality
// elimination by null-space parameterization.
#pragma once

#include "flowcert/lmi.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace flowcert {

enum class SolveStatus { Feasible, Infeasible, Marginal };
std::string status_name(SolveStatus s);

struct SolverOptions {
  double feasibility_tol = 1e-7;
  double equality_tol = 1e-9;
  double marginal_band = 1e-6;
  double gap_tol = 1e-12;  // barrier duality-gap target (absolute, scaled by max(1,|value|))
  bool facial_reduction = true;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Infeasible;
  std::map<std::string, double> assignment;
  Eigen::VectorXd x;
  double objective = kInf;             // minimized largest eigenvalue (sense-normalized)
  double max_block_eigenvalue = kInf;  // same quantity re-evaluated on the unreduced blocks
  std::vector<std::pair<std::string, double>> block_residuals;
  std::vector<std::pair<std::string, double>> equality_residuals;
  double max_equality_residual = 0.0;
  double min_sign_value = kInf;  // smallest value of any sign-constrained variable
  int iterations = 0;
  bool unbounded = false;
  std::string diagnostic;

  json to_json() const;
};

// Largest eigenvalues per block and equality residuals at a full assignment.
SolveReport evaluate_assignment(const LmiSystem& lmi, const Eigen::VectorXd& x,
                                const SolverOptions& opt = {});

SolveReport minimize_max_eigenvalue(const LmiSystem& lmi, const SolverOptions& opt = {});

struct PrimalSolution {
  Eigen::MatrixXd G;
  Eigen::VectorXd F;
  double objective = 0.0;
  bool unbounded = false;
  bool solved = false;
  int iterations = 0;
  bool polished = false;
  std::string diagnostic;
};

// Barrier solve followed by a face polish: G is restricted to the range of
// its dominant eigenvectors and near-active rows are imposed as equalities.
// When the objective is constant on the feasible set the minimum-trace point
// is returned.
PrimalSolution solve_primal(const PrimalSdp& sdp, const SolverOptions& opt = {});

// ---- barrier core, exposed for tests

// M(y) = C + sum_j y_j A_j must stay positive definite.
struct ConeBlock {
  int dim = 0;
  Eigen::MatrixXd C;
  std::vector<std::pair<int, Eigen::MatrixXd>> A;
};

struct ConeProblem {
  int nvar = 0;
  Eigen::VectorXd cost;
  std::vector<ConeBlock> blocks;
};

struct BarrierOptions {
  double gap_tol = 1e-12;
  double stop_value = -kInf;        // return as soon as cost^T y <= stop_value
  double unbounded_value = -1e7;
  double y_bound = 1e8;
  double ball_radius = 1e7;  // |y| < R keeps the central path defined; ending near R means unbounded
  int max_newton = 20000;
};

struct BarrierResult {
  Eigen::VectorXd y;
  double value = 0.0;
  double t_final = 0.0;  // barrier weight at exit
  int newton_steps = 0;
  bool unbounded = false;
  bool converged = false;
};

// y0 must be strictly feasible.
BarrierResult barrier_minimize(const ConeProblem& P, const Eigen::VectorXd& y0,
                               const BarrierOptions& opt = {});

}  // namespace flowcert
