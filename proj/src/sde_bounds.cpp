#include "flowcert/sde_bounds.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flowcert {

namespace {

// ((t+1)^e - 1) / e, with its limit log(t+1) at e = 0
double power_integral(double t, double e) {
  const double lt = std::log1p(t);
  if (std::abs(e) * lt < 1e-8) return lt * (1.0 + 0.5 * e * lt);
  return std::expm1(e * lt) / e;
}

double integrate(const std::function<double(double)>& fn, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  thread_local boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(fn, lo, hi, 1e-10);
}

void check_t(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::domain_error("bound evaluated at t = " + std::to_string(t));
}

template <class F>
const F& family_as(const SdeBoundSpec& spec, const char* who) {
  const F* f = std::get_if<F>(&spec.family);
  if (!f) throw std::invalid_argument(std::string(who) + ": family mismatch (" + spec.name() + ")");
  spec.validate();
  return *f;
}

}  // namespace

void SdeBoundSpec::validate() const {
  const auto& c = constants;
  if (!(c.gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(c.trace_sigma >= 0.0)) throw std::invalid_argument("trace_sigma must be >= 0");
  if (!(c.L >= 0.0)) throw std::invalid_argument("L must be >= 0");
  if (!(c.x0_dist2 >= 0.0)) throw std::invalid_argument("|x0 - x*|^2 must be >= 0");
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StepOnly>) {
          if (!(f.alpha >= 0.0 && f.alpha <= 1.0)) throw std::invalid_argument("step_only: needs 0 <= alpha <= 1");
        } else if constexpr (std::is_same_v<T, PrAveraged>) {
          if (!(f.alpha >= 0.0)) throw std::invalid_argument("pr_averaged: alpha >= 0");
          // beta = 0 makes the variance integral diverge at s = 0
          if (!(f.beta > 0.0 && f.beta <= 1.0)) throw std::invalid_argument("pr_averaged: needs 0 < beta <= 1");
          if (!(f.alpha + f.beta <= 1.0)) throw std::invalid_argument("pr_averaged: needs alpha + beta <= 1");
        } else if constexpr (std::is_same_v<T, WeightedAveraged>) {
          if (!(f.alpha >= 0.0 && f.beta >= 0.0)) throw std::invalid_argument("weighted_averaged: alpha, beta >= 0");
          // (u / 2h)' <= 0 for convex f
          if (!(f.alpha <= f.beta)) throw std::invalid_argument("weighted_averaged: needs alpha <= beta");
        } else if constexpr (std::is_same_v<T, AccDiminishing>) {
          if (!(f.alpha > 0.0 && f.b > 0.0)) throw std::invalid_argument("acc_diminishing: alpha, b > 0");
          if (!(f.beta >= 0.0)) throw std::invalid_argument("acc_diminishing: beta >= 0");
          if (!(f.beta <= std::min((2.0 * f.b - f.alpha) / 3.0, 2.0 - f.alpha)))
            throw std::invalid_argument("acc_diminishing: needs beta <= min((2b - alpha)/3, 2 - alpha)");
          if (f.form == AccForm::Printed && !(f.alpha == 1.5 && f.b == 3.0 && f.beta == 0.5))
            throw std::invalid_argument("acc_diminishing: printed form is the alpha = 3/2, b = 3, beta = 1/2 case");
        }
      },
      family);
}

std::string SdeBoundSpec::name() const {
  std::ostringstream os;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StepOnly>) {
          os << "step_only(alpha=" << f.alpha << ")";
        } else if constexpr (std::is_same_v<T, PrAveraged>) {
          os << "pr_averaged(alpha=" << f.alpha << ",beta=" << f.beta << ")";
        } else if constexpr (std::is_same_v<T, WeightedAveraged>) {
          os << "weighted_averaged(alpha=" << f.alpha << ",beta=" << f.beta << ")";
        } else {
          os << "acc_diminishing(alpha=" << f.alpha << ",b=" << f.b << ",beta=" << f.beta
             << (f.form == AccForm::Printed ? ",printed" : "") << ")";
        }
      },
      family);
  return os.str();
}

BoundTerms step_only_bound(const SdeBoundSpec& spec, double t) {
  const auto& f = family_as<StepOnly>(spec, "step_only_bound");
  check_t(t);
  const auto& c = spec.constants;
  const double a = f.alpha;
  BoundTerms out;
  out.init_term = c.x0_dist2 / std::pow(t + 1.0, 1.0 - a);
  if (t == 0.0) return out;
  const double gt = c.gamma * c.trace_sigma;
  if (a < 1.0) {
    out.variance_term =
        gt / std::pow(t + 1.0, 1.0 - a) * (c.L * power_integral(t, 2.0 - 3.0 * a) + 0.5 * power_integral(t, 1.0 - 2.0 * a));
  } else {
    if (!(t > 1.0)) throw std::domain_error("step_only_bound: alpha = 1 branch divides by log t, needs t > 1");
    const double I = integrate([](double s) { return std::log1p(s) / ((s + 1.0) * (s + 1.0)); }, 0.0, t);
    out.variance_term = gt / std::log(t) * (c.L * I + 0.5 * (1.0 - 1.0 / (t + 1.0)));
  }
  return out;
}

BoundTerms pr_averaged_bound(const SdeBoundSpec& spec, double t) {
  const auto& f = family_as<PrAveraged>(spec, "pr_averaged_bound");
  check_t(t);
  const auto& c = spec.constants;
  BoundTerms out;
  if (t == 0.0) {
    out.init_term = std::numeric_limits<double>::infinity();
    return out;
  }
  const double a2 = std::pow(t, f.beta);
  out.init_term = c.x0_dist2 / (2.0 * a2);
  // int_0^t s^(beta-1) (s+1)^-alpha ds
  const double alpha = f.alpha, beta = f.beta;
  const double I =
      integrate([alpha, beta](double s) { return std::pow(s, beta - 1.0) * std::pow(s + 1.0, -alpha); }, 0.0, t);
  out.variance_term = c.gamma / (2.0 * a2) * I * c.trace_sigma;
  return out;
}

BoundTerms weighted_averaged_bound(const SdeBoundSpec& spec, double t) {
  const auto& f = family_as<WeightedAveraged>(spec, "weighted_averaged_bound");
  check_t(t);
  const auto& c = spec.constants;
  BoundTerms out;
  if (t == 0.0) {
    out.init_term = std::numeric_limits<double>::infinity();
    return out;
  }
  const double U = power_integral(t, 1.0 - f.beta);        // int u
  const double UH = power_integral(t, 1.0 - f.alpha - f.beta);  // int u h
  // u_0 = h_0 = 1
  out.init_term = c.x0_dist2 / (2.0 * U);
  out.variance_term = c.gamma / (4.0 * U) * UH * c.trace_sigma;
  return out;
}

BoundTerms acc_diminishing_bound(const SdeBoundSpec& spec, double t) {
  const auto& f = family_as<AccDiminishing>(spec, "acc_diminishing_bound");
  check_t(t);
  const auto& c = spec.constants;
  BoundTerms out;
  if (t == 0.0) {
    out.init_term = f.beta > 0.0 ? std::numeric_limits<double>::infinity() : f.beta * f.beta * c.x0_dist2;
    return out;
  }
  if (f.form == AccForm::Printed) {
    out.init_term = 9.0 / (4.0 * std::sqrt(t)) * c.x0_dist2;
    out.variance_term = std::log(t) / std::sqrt(t) * c.gamma * c.trace_sigma;
    return out;
  }
  const double tb = std::pow(t, f.beta);
  out.init_term = f.beta * f.beta / tb * c.x0_dist2;
  const double alpha = f.alpha, beta = f.beta;
  const double I = integrate([alpha, beta](double s) { return std::pow(s, beta) * std::pow(s + 1.0, -alpha); }, 0.0, t);
  out.variance_term = c.gamma / (4.0 * tb) * I * c.trace_sigma;
  return out;
}

BoundTerms evaluate_bound(const SdeBoundSpec& spec, double t) {
  return std::visit(
      [&](const auto& f) -> BoundTerms {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, StepOnly>) return step_only_bound(spec, t);
        else if constexpr (std::is_same_v<T, PrAveraged>) return pr_averaged_bound(spec, t);
        else if constexpr (std::is_same_v<T, WeightedAveraged>) return weighted_averaged_bound(spec, t);
        else return acc_diminishing_bound(spec, t);
      },
      spec.family);
}

std::vector<BoundRow> tabulate_bound(const SdeBoundSpec& spec, const std::vector<double>& t_grid) {
  std::vector<BoundRow> rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) rows.push_back({t, evaluate_bound(spec, t)});
  return rows;
}

}  // namespace flowcert
