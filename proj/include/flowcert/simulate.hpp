// Trajectories of every flow on concrete test functions: RK4 for ODEs,
// Euler-Maruyama ensembles for SDEs.
#pragma once

#include "flowcert/core_model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace flowcert {

struct TestFunction {
  std::string name;
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> gradient;  // writes into the second argument
  double f_star = 0.0;
  Eigen::VectorXd x_star;
};

// 1/2 sum_i d_i (x_i - x*_i)^2
TestFunction diagonal_quadratic(const Eigen::VectorXd& diag, const std::optional<Eigen::VectorXd>& x_star = {});
// d eigenvalues log-spaced on [lo, hi]
TestFunction log_spectrum_quadratic(int d, double lo, double hi);
// sum_i log cosh(x_i): convex, 1-smooth, not strongly convex
TestFunction log_cosh_sum(int d);

struct RecordOptions {
  std::vector<double> record_times;  // snapped to the step grid; empty -> uniform stride
  int max_records = 1000;
  std::optional<Eigen::VectorXd> v0;  // second-order flows; default 0
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  // [X, V?, Xbar?], ensemble mean for SDEs
  std::vector<double> f_values;         // f(observed) - f*, observed = Xbar under averaging
  std::vector<double> f_stderr;         // SDE only
  std::vector<double> bound_values;
  std::uint64_t seed = 0;
  int n_paths = 0;  // 0 for ODE records
  std::string observed = "X";
  double dt = 0.0;

  bool is_sde() const { return n_paths > 0; }
};

// Throws std::invalid_argument on bad input (time-dependent coefficients
// off-domain at t0, dt <= 0) and std::runtime_error on a non-finite state.
// Averaged flows start at max(t0, dt) with Xbar = X.
TrajectoryRecord integrate_ode(const FlowSpec& flow, const TestFunction& f, const Eigen::VectorXd& x0, double t0,
                               double T, double dt, const RecordOptions& rec = {});

// Counter-based standard normal keyed by (seed, path, step, index).
double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t index);

// FirstOrderSde or SecondOrderSde with constant covariance Sigma; gamma = 0
// is accepted here and gives the noiseless Euler trajectory. Paths are
// grouped in fixed blocks so the result does not depend on thread count.
TrajectoryRecord simulate_sde(const FlowSpec& flow, const TestFunction& f, const Eigen::MatrixXd& Sigma,
                              const Eigen::VectorXd& x0, double t0, double T, double dt, int n_paths,
                              std::uint64_t seed, const RecordOptions& rec = {}, bool parallel = true);

struct BoundCheck {
  std::vector<double> bound_values;
  std::vector<double> margins;  // bound - observed
  double min_margin = kInf;
  double argmin_t = 0.0;
  double worst_z = kInf;  // min margin / stderr (SDE)
  bool violated = false;
};

// ODE: violated iff some margin < -ode_tol. SDE: iff some margin < -3 stderr.
BoundCheck check_bound(const TrajectoryRecord& rec, const std::function<double(double)>& bound, double ode_tol = 1e-6);

// Least-squares slope of log f against log t for t in [lo, hi].
double loglog_slope(const TrajectoryRecord& rec, double lo, double hi);

}  // namespace flowcert
