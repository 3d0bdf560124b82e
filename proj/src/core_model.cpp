#include "flowcert/core_model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace flowcert {

FunctionClass::FunctionClass(double mu_in, double L_in) : mu(mu_in), L(L_in) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be finite and >= 0");
  if (!(L > 0.0)) throw std::invalid_argument("L must be > 0");
  if (mu > L) throw std::invalid_argument("mu must not exceed L");
}

double interpolation_slack(const FunctionClass& cls, const InterpolationTriplet& i,
                           const InterpolationTriplet& j) {
  const auto d = i.x.size();
  if (i.g.size() != d || j.x.size() != d || j.g.size() != d) {
    throw std::invalid_argument("interpolation_slack: dimension mismatch");
  }
  const Eigen::VectorXd dx = i.x - j.x;
  const double base = i.f - j.f - j.g.dot(dx);
  if (!cls.smooth()) return base - 0.5 * cls.mu * dx.squaredNorm();
  const Eigen::VectorXd dg = i.g - j.g;
  const double ratio = cls.mu / cls.L;
  if (ratio >= 1.0) {
    // mu == L: only shifted quadratics remain; fall back to the strongly convex gap.
    return base - 0.5 * cls.mu * dx.squaredNorm();
  }
  const double q = dg.squaredNorm() / cls.L + cls.mu * dx.squaredNorm() -
                   2.0 * ratio * dg.dot(dx);
  return base - q / (2.0 * (1.0 - ratio));
}

// ---------------------------------------------------------------- Profile

Profile::Profile() : kind_(Kind::Constant), params_{0.0} {}

Profile Profile::constant(double c) {
  Profile p;
  p.kind_ = Kind::Constant;
  p.params_ = {c};
  return p;
}

Profile Profile::power_shift(double c, double pw, double s) {
  Profile p;
  p.kind_ = Kind::PowerShift;
  p.params_ = {c, pw, s};
  return p;
}

Profile Profile::reciprocal(double r) {
  Profile p;
  p.kind_ = Kind::Reciprocal;
  p.params_ = {r};
  return p;
}

Profile Profile::exponential(double c, double rho) {
  Profile p;
  p.kind_ = Kind::Exponential;
  p.params_ = {c, rho};
  return p;
}

Profile Profile::sum(const Profile& a, const Profile& b) {
  Profile p;
  p.kind_ = Kind::Sum;
  p.params_.clear();
  p.children_ = {std::make_shared<const Profile>(a), std::make_shared<const Profile>(b)};
  return p;
}

Profile Profile::product(const Profile& a, const Profile& b) {
  Profile p;
  p.kind_ = Kind::Product;
  p.params_.clear();
  p.children_ = {std::make_shared<const Profile>(a), std::make_shared<const Profile>(b)};
  return p;
}

Profile Profile::scaled(const Profile& a, double k) { return product(constant(k), a); }

Profile operator+(const Profile& a, const Profile& b) { return Profile::sum(a, b); }
Profile operator*(const Profile& a, const Profile& b) { return Profile::product(a, b); }
Profile operator*(double k, const Profile& a) { return Profile::scaled(a, k); }

bool Profile::in_domain(double t) const {
  if (!std::isfinite(t)) return false;
  switch (kind_) {
    case Kind::Constant:
    case Kind::Exponential:
      return true;
    case Kind::Reciprocal:
      return t > 0.0;
    case Kind::PowerShift: {
      const double pw = params_[1], s = params_[2];
      const double base = t + s;
      if (pw == std::floor(pw) && pw >= 0.0) return true;
      if (pw < 0.0) return base > 0.0;
      return base >= 0.0;
    }
    case Kind::Sum:
    case Kind::Product:
      return lhs().in_domain(t) && rhs().in_domain(t);
  }
  return false;
}

double Profile::value(double t) const {
  if (!in_domain(t)) {
    std::ostringstream os;
    os << "profile " << describe() << " evaluated outside its domain at t=" << t;
    throw std::domain_error(os.str());
  }
  switch (kind_) {
    case Kind::Constant:
      return params_[0];
    case Kind::PowerShift:
      if (params_[1] == 0.0) return params_[0];
      return params_[0] * std::pow(t + params_[2], params_[1]);
    case Kind::Reciprocal:
      return params_[0] / t;
    case Kind::Exponential:
      return params_[0] * std::exp(params_[1] * t);
    case Kind::Sum:
      return lhs().value(t) + rhs().value(t);
    case Kind::Product:
      return lhs().value(t) * rhs().value(t);
  }
  return 0.0;
}

double Profile::derivative(double t) const {
  if (!in_domain(t)) {
    std::ostringstream os;
    os << "profile " << describe() << " differentiated outside its domain at t=" << t;
    throw std::domain_error(os.str());
  }
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::PowerShift: {
      const double c = params_[0], pw = params_[1], s = params_[2];
      if (pw == 0.0) return 0.0;
      if (pw == 1.0) return c;
      return c * pw * std::pow(t + s, pw - 1.0);
    }
    case Kind::Reciprocal:
      return -params_[0] / (t * t);
    case Kind::Exponential:
      return params_[0] * params_[1] * std::exp(params_[1] * t);
    case Kind::Sum:
      return lhs().derivative(t) + rhs().derivative(t);
    case Kind::Product:
      return lhs().derivative(t) * rhs().value(t) + lhs().value(t) * rhs().derivative(t);
  }
  return 0.0;
}

bool Profile::is_constant() const {
  switch (kind_) {
    case Kind::Constant:
      return true;
    case Kind::PowerShift:
      return params_[1] == 0.0 || params_[0] == 0.0;
    case Kind::Reciprocal:
      return params_[0] == 0.0;
    case Kind::Exponential:
      return params_[0] == 0.0 || params_[1] == 0.0;
    case Kind::Sum:
      return lhs().is_constant() && rhs().is_constant();
    case Kind::Product:
      return lhs().is_constant() && rhs().is_constant();
  }
  return false;
}

Profile Profile::antiderivative_from_zero() const {
  switch (kind_) {
    case Kind::Constant:
      return power_shift(params_[0], 1.0, 0.0);
    case Kind::PowerShift: {
      const double c = params_[0], pw = params_[1], s = params_[2];
      if (pw == -1.0) {
        throw std::domain_error("antiderivative of c/(t+s) is logarithmic; not a profile family");
      }
      if (pw < 0.0 && s <= 0.0) throw std::domain_error("antiderivative diverges at t=0");
      // c/(p+1) ((t+s)^{p+1} - s^{p+1})
      const double k = c / (pw + 1.0);
      return sum(power_shift(k, pw + 1.0, s), constant(-k * std::pow(s, pw + 1.0)));
    }
    case Kind::Exponential: {
      const double c = params_[0], rho = params_[1];
      if (rho == 0.0) return power_shift(c, 1.0, 0.0);
      return sum(exponential(c / rho, rho), constant(-c / rho));
    }
    case Kind::Sum:
      return sum(lhs().antiderivative_from_zero(), rhs().antiderivative_from_zero());
    default:
      throw std::domain_error("no closed-form antiderivative for " + describe());
  }
}

std::string Profile::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::Constant:
      os << "Constant(" << params_[0] << ")";
      break;
    case Kind::PowerShift:
      os << "PowerShift(" << params_[0] << "," << params_[1] << "," << params_[2] << ")";
      break;
    case Kind::Reciprocal:
      os << "Reciprocal(" << params_[0] << ")";
      break;
    case Kind::Exponential:
      os << "Exponential(" << params_[0] << "," << params_[1] << ")";
      break;
    case Kind::Sum:
      os << "Sum(" << lhs().describe() << "," << rhs().describe() << ")";
      break;
    case Kind::Product:
      os << "Product(" << lhs().describe() << "," << rhs().describe() << ")";
      break;
  }
  return os.str();
}

double eval_profile(const Profile& p, double t) { return p.value(t); }
double eval_profile_derivative(const Profile& p, double t) { return p.derivative(t); }

// ---------------------------------------------------------------- flows

void validate_flow(const FlowSpec& flow) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DampedOscillator>) {
          if (!(f.beta >= 0.0)) throw std::invalid_argument("damping must be >= 0");
        } else if constexpr (std::is_same_v<T, FirstOrderSde>) {
          if (!(f.gamma > 0.0)) throw std::invalid_argument("SDE gamma must be > 0");
          if (f.trace_sigma_bound < 0.0) throw std::invalid_argument("trace bound must be >= 0");
          if (f.averaging == Averaging::Weighted && !f.u_t) {
            throw std::invalid_argument("weighted averaging needs u_t");
          }
        } else if constexpr (std::is_same_v<T, SecondOrderSde>) {
          if (!(f.gamma > 0.0)) throw std::invalid_argument("SDE gamma must be > 0");
          if (f.averaging == Averaging::Weighted) {
            throw std::invalid_argument("weighted averaging is not defined for second-order SDEs");
          }
        }
      },
      flow);
}

std::string flow_name(const FlowSpec& flow) {
  static const char* names[] = {"gradient_flow", "nonautonomous_gradient_flow",
                                "damped_oscillator", "second_order_flow",
                                "first_order_sde", "second_order_sde"};
  return names[flow.index()];
}

// ---------------------------------------------------------------- ansatz

ProfileMatrix::ProfileMatrix(int dim) : n(dim), entries(static_cast<size_t>(dim * dim)) {}

void ProfileMatrix::set(int i, int j, const Profile& p) {
  entries[i * n + j] = p;
  entries[j * n + i] = p;
}

ProfileMatrix ProfileMatrix::constant(const Eigen::MatrixXd& m) {
  ProfileMatrix pm(static_cast<int>(m.rows()));
  for (int i = 0; i < pm.n; ++i)
    for (int j = 0; j <= i; ++j) pm.set(i, j, Profile::constant(0.5 * (m(i, j) + m(j, i))));
  return pm;
}

Eigen::MatrixXd ProfileMatrix::value(double t) const {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = (*this)(i, j).value(t);
  return m;
}

Eigen::MatrixXd ProfileMatrix::derivative(double t) const {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = (*this)(i, j).derivative(t);
  return m;
}

void LyapunovAnsatz::validate() const {
  if (static_cast<int>(state_basis.size()) != quad.n) {
    throw std::invalid_argument("ansatz: quad dimension does not match state basis");
  }
  for (int i = 0; i < quad.n; ++i)
    for (int j = 0; j < quad.n; ++j)
      if (quad(i, j).describe() != quad(j, i).describe()) {
        throw std::invalid_argument("ansatz: quad is not symmetric");
      }
}

bool LyapunovAnsatz::time_dependent() const {
  for (const auto& a : a_terms)
    if (!a.is_constant()) return true;
  for (const auto& e : quad.entries)
    if (!e.is_constant()) return true;
  return false;
}

}  // namespace flowcert
