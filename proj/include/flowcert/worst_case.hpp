// Worst-case instances from primal solutions, and an F_{mu,inf} interpolant
// through the recovered triplets.
#pragma once

#include "flowcert/core_model.hpp"
#include "flowcert/sdp_solver.hpp"

#include <utility>
#include <vector>

namespace flowcert {

struct WorstCaseData {
  double tau = 0.0;
  double mu = 0.0;
  Eigen::MatrixXd gram;
  Eigen::VectorXd values;  // primal F, shifted so that f* = 0
  int rank = 0;
  std::vector<InterpolationTriplet> triplets;  // {X_t, star}
  std::vector<std::pair<double, double>> interpolant_samples;
  PrimalSolution primal;

  json to_json() const;
};

inline constexpr double kRankCutoff = 1e-7;

// Gram factor G = Y^T Y keeping eigenvalues above the cutoff. Columns of the
// returned Y are the Gram vectors.
Eigen::MatrixXd gram_factor(const Eigen::MatrixXd& G, double cutoff = kRankCutoff);

// Gradient flow only, with V = (f - f*) normalized to 1 at tau. Throws
// std::runtime_error when the primal is unbounded or its optimum exceeds 1e-6
// (tau above the rate).
WorstCaseData extract_worst_case(const FlowSpec& flow, const FunctionClass& cls, double tau,
                                 const SolverOptions& opt = {});

// max_i f_i + <g_i, x - x_i> + mu/2 |x - x_i|^2
double eval_interpolant(const std::vector<InterpolationTriplet>& triplets, double mu, const Eigen::VectorXd& x);

// Samples along s * u, s in [-R, R], R = max |x_i| (1 when all x_i = 0), u the
// direction of the farthest x_i. Throws std::invalid_argument when the class
// is smooth or some pairwise slack is below -1e-7.
std::vector<std::pair<double, double>> build_interpolant(const std::vector<InterpolationTriplet>& triplets,
                                                         const FunctionClass& cls, int n_points = 101);

}  // namespace flowcert
