// Closed-form SDE convergence bounds E[f - f*] <= init_term + variance_term,
// with h_t = (t+1)^-alpha throughout.
#pragma once

#include <string>
#include <variant>
#include <vector>

namespace flowcert {

struct SdeConstants {
  double gamma = 1.0;
  double trace_sigma = 1.0;
  double L = 1.0;
  double x0_dist2 = 1.0;  // |x0 - x*|^2
  double f0_gap = 0.0;    // f(x0) - f*, carried for reports
};

struct StepOnly {
  double alpha = 0.0;
};
// a2 = t^beta
struct PrAveraged {
  double alpha = 0.5;
  double beta = 0.5;
};
// u_t = (t+1)^-beta
struct WeightedAveraged {
  double alpha = 0.5;
  double beta = 0.5;
};
enum class AccForm {
  Integral,  // beta^2/t^beta |x0|^2 + gamma/(4 t^beta) int_0^t s^beta/(s+1)^alpha Tr ds
  Printed    // 9/(4 sqrt t) |x0|^2 + log t/sqrt t gamma Tr; alpha = 3/2, b = 3, beta = 1/2 only
};
// beta_t = b/t, a_t = t^beta
struct AccDiminishing {
  double alpha = 1.5;
  double b = 3.0;
  double beta = 0.5;
  AccForm form = AccForm::Integral;
};

using SdeFamily = std::variant<StepOnly, PrAveraged, WeightedAveraged, AccDiminishing>;

struct SdeBoundSpec {
  SdeFamily family;
  SdeConstants constants;

  // Throws std::invalid_argument outside the hypotheses of the family.
  void validate() const;
  std::string name() const;
};

struct BoundTerms {
  double init_term = 0.0;
  double variance_term = 0.0;
  double total() const { return init_term + variance_term; }
};

BoundTerms step_only_bound(const SdeBoundSpec& spec, double t);
BoundTerms pr_averaged_bound(const SdeBoundSpec& spec, double t);
BoundTerms weighted_averaged_bound(const SdeBoundSpec& spec, double t);
BoundTerms acc_diminishing_bound(const SdeBoundSpec& spec, double t);
BoundTerms evaluate_bound(const SdeBoundSpec& spec, double t);  // dispatch on the family

struct BoundRow {
  double t = 0.0;
  BoundTerms terms;
};
std::vector<BoundRow> tabulate_bound(const SdeBoundSpec& spec, const std::vector<double>& t_grid);

}  // namespace flowcert
