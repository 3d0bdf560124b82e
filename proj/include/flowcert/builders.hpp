// One constructor per flow family. Gram orderings (x* = 0, g* = 0):
//   gradient flow          [X, g]
//   oscillator / AGF       [X, Xdot, g]
//   PR / weighted / primal [X, Xbar, g, gbar]
//   accelerated averaging  [Xdot, X, Xbar, g, gbar]
//   third order            [Xddot, Xdot, X, g]
// Each NegSemidef block is dV/dt (+ tau V) + sum_k lambda_k * ineq_k.
#pragma once

#include "flowcert/core_model.hpp"
#include "flowcert/lmi.hpp"

#include <optional>

namespace flowcert {

// ---- symbolic layer: ansatz coefficients are affine in search variables

struct TermMatrix {
  int n = 0;
  std::vector<Term> e;

  TermMatrix() = default;
  explicit TermMatrix(int dim) : n(dim), e(static_cast<size_t>(dim * dim)) {}
  const Term& operator()(int i, int j) const { return e[i * n + j]; }
  void set(int i, int j, const Term& v) { e[i * n + j] = v; e[j * n + i] = v; }
  static TermMatrix of(const ProfileMatrix& p, double t);
  static TermMatrix of(const Eigen::MatrixXd& m);
};

enum class Positivity { None, Interpolation, PsdP };

void append_first_order(LmiSystem& sys, double mu, const Term& a, const Term& c, double speed,
                        double tau, const std::string& suffix = "");

void append_second_order(LmiSystem& sys, double mu, const Term& a, const TermMatrix& P,
                         double beta, double tau, Positivity pos, const std::string& suffix = "");

// avg_rate is 1/t for Polyak-Ruppert and u_t / int_0^t u for weighted averaging.
// primal_avg: the gradient driving X is taken at Xbar.
void append_averaging(LmiSystem& sys, double mu, const Term& a1, const Term& a2, const TermMatrix& P,
                      double h, double avg_rate, bool primal_avg, const std::string& suffix = "");

void append_acc_averaging(LmiSystem& sys, const Term& a1, const Term& a2, const TermMatrix& P,
                          double beta, double t, const std::string& suffix = "");

void append_third_order(LmiSystem& sys, double mu, const Term& a, const TermMatrix& P, double alpha,
                        double beta, double gamma, const std::string& suffix = "");

// ---- numeric constructors

PrimalSdp build_gf_primal(const FunctionClass& cls, double a, double c, double tau,
                          bool normalize_V = false);
LmiSystem build_gf_dual(const FunctionClass& cls, double a, double c, double tau);
LmiSystem build_gf_convex_dual(const Profile& a_t, const Profile& c_t, double t);
LmiSystem build_nonautonomous_gf_dual(const FunctionClass& cls, const Profile& a_t,
                                      const Profile& c_t, const Profile& speed_t, double t);
// beta defaults to 2 sqrt(mu)
LmiSystem build_oscillator_dual(const FunctionClass& cls, double a, const Eigen::Matrix2d& P,
                                double tau, bool enforce_P_psd,
                                std::optional<double> beta = std::nullopt);
LmiSystem build_agf_dual(const Profile& a_t, const ProfileMatrix& P_t, const Profile& beta_t,
                         const FunctionClass& cls, double t, bool include_P_psd = false);
LmiSystem build_pr_averaging_dual(const Profile& a1_t, const Profile& a2_t, const ProfileMatrix& P_t,
                                  const Profile& h_t, double t);
LmiSystem build_weighted_avg_dual(const Profile& u_t, const Profile& h_t, const FunctionClass& cls,
                                  double t);
LmiSystem build_acc_sde_avg_dual(const Profile& a1_t, const Profile& a2_t, const ProfileMatrix& P_t,
                                 const Profile& beta_t, double t);
LmiSystem build_primal_avg_dual(const Profile& a2_t, const ProfileMatrix& P_t, const Profile& h_t,
                                double t);
LmiSystem build_third_order_dual(const Profile& a_t, const ProfileMatrix& P_t, const Profile& alpha_t,
                                 const Profile& beta_t, const Profile& gamma_t, double t);

// Replaces the named variables by constants; the rest stay free.
LmiSystem fix_variables(const LmiSystem& sys, const std::map<std::string, double>& values);

}  // namespace flowcert
