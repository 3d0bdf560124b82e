// Certificate checking, Lyapunov search, rate bisection, grid verification
// and triviality detection.
#pragma once

#include "flowcert/builders.hpp"
#include "flowcert/sdp_solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowcert {

// LMI template selector. Flow coefficients live in FamilyData::coeffs under
// the keys each family reads:
//   GradientFlow      -
//   NonAutonomousGf   speed
//   Oscillator        beta (constant)
//   Agf               beta
//   PrAveraging       h
//   WeightedAveraging h, u
//   PrimalAveraging   h
//   AccSdeAveraging   beta
//   ThirdOrder        alpha, beta, gamma
enum class Family {
  GradientFlow,
  NonAutonomousGf,
  Oscillator,
  Agf,
  PrAveraging,
  WeightedAveraging,
  PrimalAveraging,
  AccSdeAveraging,
  ThirdOrder
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct FamilyData {
  Family family = Family::GradientFlow;
  std::map<std::string, Profile> coeffs;

  const Profile& coeff(const std::string& key) const;  // throws when missing
  json to_json() const;
  static FamilyData from_json(const json& j);
};

FamilyData family_of(const FlowSpec& flow);

// Ansatz layout per family: a_terms = {a} or {a1, a2}; quad over
//   GF: [X]   oscillator/AGF: [X, Xdot]   PR/primal: [X, Xbar]
//   acc averaging: [Xdot, X, Xbar]        third order: [Xddot, Xdot, X]
// Weighted averaging ignores the ansatz (it is fixed by u and h).
LyapunovAnsatz default_ansatz(Family f);

LmiSystem build_family_lmi(const FamilyData& fam, const FunctionClass& cls, const LyapunovAnsatz& ansatz,
                           double t, double tau, bool enforce_P_psd);

struct ResidualSummary {
  double max_block_eigenvalue = kInf;
  double max_equality_residual = kInf;
  double min_sign_value = kInf;
  std::vector<double> grid;  // empty for static certificates
  double argmax_t = 0.0;
};

struct Certificate {
  FamilyData family;
  FunctionClass cls;
  LyapunovAnsatz ansatz;
  double rate_tau = 0.0;
  bool enforce_P_psd = false;
  std::map<std::string, double> multipliers;
  std::map<std::string, Profile> multiplier_profiles;  // time-dependent multipliers
  ResidualSummary residual_summary;
  SolveStatus status = SolveStatus::Infeasible;

  bool time_dependent() const;
  json to_json() const;
  static Certificate from_json(const json& j);
};

struct GridPointReport {
  double t = 0.0;
  double max_block_eigenvalue = 0.0;
  double max_equality_residual = 0.0;
  double min_sign_value = kInf;
  SolveStatus status = SolveStatus::Infeasible;
};

struct CheckReport {
  bool certified = false;
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<GridPointReport> points;
  ResidualSummary summary;
  std::string diagnostic;

  json to_json() const;
};

std::vector<double> log_grid(double lo, double hi, int n);
std::vector<double> log_grid_per_decade(double lo, double hi, int per_decade);
// 400 points per decade on [1e-3, 1e3]
std::vector<double> default_t_grid();

// Multipliers missing from the certificate are searched per grid point.
// A grid is required iff the certificate is time-dependent.
CheckReport check_certificate(const Certificate& cert, const std::optional<std::vector<double>>& t_grid = std::nullopt,
                              const SolverOptions& opt = {});

struct SearchResult {
  SolveStatus status = SolveStatus::Infeasible;
  Certificate cert;
  SolveReport report;
};

SearchResult search_multipliers(const LmiSystem& lmi, const SolverOptions& opt = {});

// Joint search over (c or P) and multipliers with a = 1. Autonomous flows only:
// GradientFlow and DampedOscillator.
SearchResult search_lyapunov(const FlowSpec& flow, const FunctionClass& cls, double tau, bool enforce_P_psd,
                             const SolverOptions& opt = {});

struct BisectionStep {
  double tau = 0.0;
  double objective = 0.0;
  bool feasible = false;
};

struct BisectionResult {
  double tau_star = 0.0;
  double tau_certified = 0.0;  // lower end, carries the certificate
  Certificate cert;
  std::vector<BisectionStep> trace;
  bool monotone = true;
};

struct BisectionOptions {
  double tol = 1e-6;
  std::optional<double> tau_hi;  // default 4 (sqrt(mu) + mu)
  // tighter than the reporting ladder: near tau* the optimum moves like mu/2 (tau - tau*)
  SolverOptions solver = {1e-10, 1e-9, 1e-6, 1e-12, true};
};

// Throws std::runtime_error on bracket failure (tau_hi certifiable).
BisectionResult bisect_rate(const FlowSpec& flow, const FunctionClass& cls, bool enforce_P_psd,
                            const BisectionOptions& opt = {});

struct RateSweepRow {
  double mu = 0.0;
  double tau_pep = 0.0;
  double tau_reference = 0.0;
  double relative_gap = 0.0;
};

// 2 mu for the gradient flow; sqrt(mu) (P psd) or 4/3 sqrt(mu) for the oscillator.
double reference_rate(const FlowSpec& flow, double mu, bool enforce_P_psd);

// Parallel over mu; rows come back in the order of mus. The oscillator
// damping is reset to 2 sqrt(mu) on each row.
std::vector<RateSweepRow> rate_sweep(const FlowSpec& flow, const std::vector<double>& mus, bool enforce_P_psd,
                                     const BisectionOptions& opt = {});

struct SublinearReport {
  CheckReport check;
  bool c_decreasing = true;  // gradient-flow families only
  bool a_dominates_tc = true;
  double worst_monotonicity = 0.0;  // max c'(t)
  double worst_dominance = 0.0;     // max t c(t) - a(t)
  bool passed = false;
};

SublinearReport verify_sublinear_family(const Certificate& cert, const std::vector<double>& t_grid,
                                        const SolverOptions& opt = {});

struct TrivialityReport {
  bool trivial_only = false;
  double objective = 0.0;  // min max-eigenvalue under the normalization sum_i a(t_i) = 1
  double leading_coefficient_max = 0.0;  // max_i a(t_i) at the returned point
  std::vector<double> grid;
  SolveReport report;
};

// Polynomial ansatz entries sum_k theta_k t^k (k < basis_size), multipliers
// per grid point; Family must be GradientFlow, NonAutonomousGf, AccSdeAveraging
// (a1 fixed to 0) or ThirdOrder.
TrivialityReport detect_trivial_only(const FamilyData& fam, const FunctionClass& cls,
                                     const std::vector<double>& t_grid, int basis_size = 3,
                                     const SolverOptions& opt = {});
std::vector<double> default_triviality_grid();  // logspace(-1, 1, 9)

// Named families used by detect_trivial_only examples.
FamilyData acc_sde_family_default();   // beta = 3/t
FamilyData third_order_family_default();  // alpha = 3/t, beta = 3/t^2, gamma = 1/t

}  // namespace flowcert
