// Shared vocabulary: function classes, time profiles, flow specifications,
// Lyapunov ansatz descriptions and the interpolation inequality.
#pragma once

#include <Eigen/Dense>

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace flowcert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// F_{mu,L}; L may be +inf.
struct FunctionClass {
  double mu = 0.0;
  double L = kInf;

  FunctionClass() = default;
  FunctionClass(double mu_in, double L_in = kInf);

  bool smooth() const { return L < kInf; }
};

struct InterpolationTriplet {
  Eigen::VectorXd x;
  Eigen::VectorXd g;
  double f = 0.0;
};

// Slack of the (i, j) interpolation inequality. Throws on dimension mismatch.
double interpolation_slack(const FunctionClass& cls,
                           const InterpolationTriplet& i,
                           const InterpolationTriplet& j);

// Symbolic scalar function of time with an exact derivative. The four base
// families cover every schedule used by the builders; Sum and Product
// compose them (e.g. a2_t / (2 t h_t)).
class Profile {
 public:
  enum class Kind { Constant, PowerShift, Reciprocal, Exponential, Sum, Product };

  Profile();  // Constant(0)

  static Profile constant(double c);
  static Profile power_shift(double c, double p, double s);  // c (t+s)^p
  static Profile reciprocal(double r);                       // r / t
  static Profile exponential(double c, double rho);          // c e^{rho t}
  static Profile sum(const Profile& a, const Profile& b);
  static Profile product(const Profile& a, const Profile& b);
  static Profile scaled(const Profile& a, double k);

  // integral_0^t of the profile when a closed form exists
  // (Constant, PowerShift with s > 0 or p >= 0, Exponential).
  Profile antiderivative_from_zero() const;

  Kind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  const Profile& lhs() const { return *children_[0]; }
  const Profile& rhs() const { return *children_[1]; }

  bool in_domain(double t) const;
  double value(double t) const;       // throws std::domain_error off-domain
  double derivative(double t) const;  // exact
  bool is_constant() const;
  std::string describe() const;

 private:
  Kind kind_;
  std::vector<double> params_;
  std::vector<std::shared_ptr<const Profile>> children_;
};

double eval_profile(const Profile& p, double t);
double eval_profile_derivative(const Profile& p, double t);

Profile operator+(const Profile& a, const Profile& b);
Profile operator*(const Profile& a, const Profile& b);
Profile operator*(double k, const Profile& a);

enum class Averaging { None, PolyakRuppert, Weighted, Primal };

struct GradientFlow {};
struct NonAutonomousGradientFlow {
  Profile alpha;
};
struct DampedOscillator {
  double beta = 0.0;
};
struct SecondOrderFlow {
  Profile beta_t;
};
struct FirstOrderSde {
  Profile h_t = Profile::constant(1.0);
  double gamma = 1.0;
  double trace_sigma_bound = 0.0;
  double smoothness_L = kInf;
  Averaging averaging = Averaging::None;
  std::optional<Profile> u_t;  // weights for Averaging::Weighted
};
struct SecondOrderSde {
  Profile beta_t;
  Profile h_t = Profile::constant(1.0);
  double gamma = 1.0;
  double trace_sigma_bound = 0.0;
  Averaging averaging = Averaging::None;
};

using FlowSpec = std::variant<GradientFlow, NonAutonomousGradientFlow, DampedOscillator,
                              SecondOrderFlow, FirstOrderSde, SecondOrderSde>;

// Throws std::invalid_argument when a variant invariant is violated.
void validate_flow(const FlowSpec& flow);
std::string flow_name(const FlowSpec& flow);

// Symmetric matrix of profiles, stored densely.
struct ProfileMatrix {
  int n = 0;
  std::vector<Profile> entries;  // row-major n*n, kept symmetric

  ProfileMatrix() = default;
  explicit ProfileMatrix(int dim);
  const Profile& operator()(int i, int j) const { return entries[i * n + j]; }
  void set(int i, int j, const Profile& p);
  static ProfileMatrix constant(const Eigen::MatrixXd& m);
  Eigen::MatrixXd value(double t) const;
  Eigen::MatrixXd derivative(double t) const;
};

struct LyapunovAnsatz {
  std::vector<Profile> a_terms;
  ProfileMatrix quad;
  std::vector<std::string> state_basis;

  void validate() const;
  bool time_dependent() const;
};

}  // namespace flowcert
