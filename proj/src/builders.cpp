#include "flowcert/builders.hpp"

#include <cmath>
#include <stdexcept>

namespace flowcert {

TermMatrix TermMatrix::of(const ProfileMatrix& p, double t) {
  TermMatrix m(p.n);
  for (int i = 0; i < p.n; ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, term_of(p(i, j), t));
  return m;
}

TermMatrix TermMatrix::of(const Eigen::MatrixXd& m) {
  TermMatrix out(static_cast<int>(m.rows()));
  for (int i = 0; i < out.n; ++i)
    for (int j = 0; j <= i; ++j) out.set(i, j, Term(0.5 * (m(i, j) + m(j, i))));
  return out;
}

namespace {

Affine multiplier(LmiSystem& sys, const std::string& base, int k, const std::string& suffix) {
  const int id = sys.add_variable(base + std::to_string(k) + suffix, Sign::NonNeg);
  return Affine::var(id);
}

void require_dim(const TermMatrix& P, int n, const char* who) {
  if (P.n != n) throw std::invalid_argument(std::string(who) + ": P has wrong dimension");
}

}  // namespace

// V = a f + c |X|^2,  Xdot = -speed g
void append_first_order(LmiSystem& sys, double mu, const Term& a, const Term& c, double speed,
                        double tau, const std::string& suffix) {
  const Affine l1 = multiplier(sys, "lambda", 1, suffix);
  const Affine l2 = multiplier(sys, "lambda", 2, suffix);
  LmiBlock& S = sys.add_block("S" + suffix, Sense::NegSemidef, 2);
  S.at(0, 0) = c.deriv + tau * c.value - (mu / 2) * (l1 + l2);
  S.at(1, 0) = -speed * c.value + l1 / 2;
  S.at(1, 1) = -speed * a.value;
  sys.add_equality("rate" + suffix, a.deriv + tau * a.value - l1 + l2);
}

// V = a f + z^T P z, z = [X, Xdot],  Xddot = -beta Xdot - g
void append_second_order(LmiSystem& sys, double mu, const Term& a, const TermMatrix& P,
                         double beta, double tau, Positivity pos, const std::string& suffix) {
  require_dim(P, 2, "second order");
  const Affine l1 = multiplier(sys, "lambda", 1, suffix);
  const Affine l2 = multiplier(sys, "lambda", 2, suffix);
  const Term &p11 = P(0, 0), &p12 = P(0, 1), &p22 = P(1, 1);
  LmiBlock& S = sys.add_block("S" + suffix, Sense::NegSemidef, 3);
  S.at(0, 0) = p11.deriv + tau * p11.value - (mu / 2) * (l1 + l2);
  S.at(1, 0) = p12.deriv + p11.value - beta * p12.value + tau * p12.value;
  S.at(2, 0) = -p12.value + l1 / 2;
  S.at(1, 1) = p22.deriv + 2.0 * p12.value - 2.0 * beta * p22.value + tau * p22.value;
  S.at(2, 1) = a.value / 2 - p22.value;
  S.at(2, 2) = 0.0;
  sys.add_equality("rate" + suffix, a.deriv + tau * a.value - l1 + l2);

  if (pos == Positivity::Interpolation) {
    const Affine n1 = multiplier(sys, "nu", 1, suffix);
    const Affine n2 = multiplier(sys, "nu", 2, suffix);
    LmiBlock& Q = sys.add_block("positivity" + suffix, Sense::PosSemidef, 3);
    Q.at(0, 0) = p11.value + (mu / 2) * (n1 + n2);
    Q.at(1, 0) = p12.value;
    Q.at(2, 0) = -(n1 / 2);
    Q.at(1, 1) = p22.value;
    Q.at(2, 1) = 0.0;
    Q.at(2, 2) = 0.0;
    sys.add_equality("positivity_a" + suffix, a.value - n2 + n1);
  } else if (pos == Positivity::PsdP) {
    LmiBlock& Q = sys.add_block("P" + suffix, Sense::PosSemidef, 2);
    Q.at(0, 0) = p11.value;
    Q.at(1, 0) = p12.value;
    Q.at(1, 1) = p22.value;
  }
}

// V = a1 f(X) + a2 f(Xbar) + z^T P z, z = [X, Xbar]
// Xdot = -h g (or -h gbar when primal_avg), Xbardot = avg_rate (X - Xbar)
void append_averaging(LmiSystem& sys, double mu, const Term& a1, const Term& a2, const TermMatrix& P,
                      double h, double avg_rate, bool primal_avg, const std::string& suffix) {
  require_dim(P, 2, "averaging");
  Affine l[7];
  for (int k = 1; k <= 6; ++k) l[k] = multiplier(sys, "lambda", k, suffix);
  const Term &p11 = P(0, 0), &p12 = P(0, 1), &p22 = P(1, 1);
  const double C = avg_rate;
  const double m2 = mu / 2;

  LmiBlock& S = sys.add_block("S" + suffix, Sense::NegSemidef, 4);
  S.at(0, 0) = p11.deriv + 2.0 * C * p12.value - m2 * (l[1] + l[4] + l[5] + l[6]);
  S.at(1, 0) = p12.deriv + C * (p22.value - p12.value) + m2 * (l[5] + l[6]);
  S.at(1, 1) = p22.deriv - 2.0 * C * p22.value - m2 * (l[2] + l[3] + l[5] + l[6]);
  // gradient at X
  S.at(2, 0) = (l[4] + l[6]) / 2;
  S.at(2, 1) = -(l[6] / 2);
  S.at(2, 2) = 0.0;
  // gradient at Xbar
  S.at(3, 0) = (C / 2) * a2.value - l[5] / 2;
  S.at(3, 1) = (l[3] + l[5]) / 2 - (C / 2) * a2.value;
  S.at(3, 2) = 0.0;
  S.at(3, 3) = 0.0;
  if (!primal_avg) {
    S.at(2, 0) -= h * p11.value;
    S.at(2, 1) -= h * p12.value;
    S.at(2, 2) = -h * a1.value;
  } else {
    S.at(3, 0) -= h * p11.value;
    S.at(3, 1) -= h * p12.value;
    S.at(3, 2) = -(h / 2) * a1.value;
  }
  sys.add_equality("f_X" + suffix, a1.deriv + l[1] + l[5] - l[4] - l[6]);
  sys.add_equality("f_Xbar" + suffix, a2.deriv + l[2] + l[6] - l[3] - l[5]);
}

// V = a1 f(X) + a2 f(Xbar) + z^T P z, z = [Xdot, X, Xbar]
// Xddot = -beta Xdot - g,  Xbardot = (X - Xbar)/t
void append_acc_averaging(LmiSystem& sys, const Term& a1, const Term& a2, const TermMatrix& P,
                          double beta, double t, const std::string& suffix) {
  require_dim(P, 3, "accelerated averaging");
  Affine l[7];
  for (int k = 1; k <= 6; ++k) l[k] = multiplier(sys, "lambda", k, suffix);
  const Term &p11 = P(0, 0), &p12 = P(0, 1), &p13 = P(0, 2), &p22 = P(1, 1), &p23 = P(1, 2),
             &p33 = P(2, 2);
  const double it = 1.0 / t;

  LmiBlock& S = sys.add_block("S" + suffix, Sense::NegSemidef, 5);
  S.at(0, 0) = p11.deriv - 2.0 * beta * p11.value + 2.0 * p12.value;
  S.at(1, 0) = p12.deriv - beta * p12.value + p22.value + it * p13.value;
  S.at(2, 0) = p13.deriv - beta * p13.value + p23.value - it * p13.value;
  S.at(3, 0) = -p11.value + a1.value / 2;
  S.at(4, 0) = 0.0;
  S.at(1, 1) = p22.deriv + 2.0 * it * p23.value;
  S.at(2, 1) = p23.deriv + it * (p33.value - p23.value);
  S.at(3, 1) = -p12.value + (l[4] + l[6]) / 2;
  S.at(4, 1) = (it / 2) * a2.value - l[5] / 2;
  S.at(2, 2) = p33.deriv - 2.0 * it * p33.value;
  S.at(3, 2) = -p13.value - l[6] / 2;
  S.at(4, 2) = (l[3] + l[5]) / 2 - (it / 2) * a2.value;
  S.at(3, 3) = 0.0;
  S.at(4, 3) = 0.0;
  S.at(4, 4) = 0.0;
  sys.add_equality("f_X" + suffix, a1.deriv + l[1] + l[5] - l[4] - l[6]);
  sys.add_equality("f_Xbar" + suffix, a2.deriv + l[2] + l[6] - l[3] - l[5]);
}

// V = a f + z^T P z, z = [Xddot, Xdot, X]
// Xdddot = -alpha Xddot - beta Xdot - gamma g
void append_third_order(LmiSystem& sys, double mu, const Term& a, const TermMatrix& P, double alpha,
                        double beta, double gamma, const std::string& suffix) {
  require_dim(P, 3, "third order");
  const Affine l1 = multiplier(sys, "lambda", 1, suffix);
  const Affine l2 = multiplier(sys, "lambda", 2, suffix);
  const Term &p11 = P(0, 0), &p12 = P(0, 1), &p13 = P(0, 2), &p22 = P(1, 1), &p23 = P(1, 2),
             &p33 = P(2, 2);
  LmiBlock& S = sys.add_block("S" + suffix, Sense::NegSemidef, 4);
  S.at(0, 0) = p11.deriv - 2.0 * alpha * p11.value + 2.0 * p12.value;
  S.at(1, 0) = p12.deriv - beta * p11.value - alpha * p12.value + p22.value + p13.value;
  S.at(2, 0) = p13.deriv - alpha * p13.value + p23.value;
  S.at(3, 0) = -gamma * p11.value;
  S.at(1, 1) = p22.deriv - 2.0 * beta * p12.value + 2.0 * p23.value;
  S.at(2, 1) = p23.deriv - beta * p13.value + p33.value;
  S.at(3, 1) = a.value / 2 - gamma * p12.value;
  S.at(2, 2) = p33.deriv - (mu / 2) * (l1 + l2);
  S.at(3, 2) = l1 / 2 - gamma * p13.value;
  S.at(3, 3) = 0.0;
  sys.add_equality("rate" + suffix, a.deriv - l1 + l2);
}

// ---------------------------------------------------------------- numeric

PrimalSdp build_gf_primal(const FunctionClass& cls, double a, double c, double tau, bool normalize_V) {
  if (a < 0.0 || c < 0.0) throw std::invalid_argument("gf primal: a and c must be >= 0");
  if (tau < 0.0) throw std::invalid_argument("gf primal: tau must be >= 0");
  const double mu = cls.mu;
  PrimalSdp p;
  p.gram_dimension = 2;
  p.F_dimension = 2;  // [f(X), f*]
  p.A0.resize(2, 2);
  p.A0 << c * tau, -c, -c, -a;
  p.b0 = Eigen::Vector2d(a * tau, -a * tau);
  Eigen::MatrixXd A1(2, 2), A2(2, 2);
  A1 << -mu / 2, 0.5, 0.5, 0.0;
  A2 << -mu / 2, 0.0, 0.0, 0.0;
  p.constraints.push_back({A1, Eigen::Vector2d(-1.0, 1.0)});
  p.constraints.push_back({A2, Eigen::Vector2d(1.0, -1.0)});
  if (normalize_V) {
    Eigen::MatrixXd AV = Eigen::MatrixXd::Zero(2, 2);
    AV(0, 0) = c;
    p.normalization = PrimalNormalization{AV, Eigen::Vector2d(a, -a), 1.0};
  }
  p.validate();
  return p;
}

LmiSystem build_gf_dual(const FunctionClass& cls, double a, double c, double tau) {
  if (a < 0.0 || c < 0.0) throw std::invalid_argument("gf dual: a and c must be >= 0");
  if (tau < 0.0) throw std::invalid_argument("gf dual: tau must be >= 0");
  LmiSystem sys;
  append_first_order(sys, cls.mu, Term(a), Term(c), 1.0, tau);
  return sys;
}

LmiSystem build_gf_convex_dual(const Profile& a_t, const Profile& c_t, double t) {
  LmiSystem sys;
  append_first_order(sys, 0.0, term_of(a_t, t), term_of(c_t, t), 1.0, 0.0);
  return sys;
}

LmiSystem build_nonautonomous_gf_dual(const FunctionClass& cls, const Profile& a_t, const Profile& c_t,
                                      const Profile& speed_t, double t) {
  LmiSystem sys;
  append_first_order(sys, cls.mu, term_of(a_t, t), term_of(c_t, t), speed_t.value(t), 0.0);
  return sys;
}

LmiSystem build_oscillator_dual(const FunctionClass& cls, double a, const Eigen::Matrix2d& P, double tau,
                                bool enforce_P_psd, std::optional<double> beta) {
  if (!(cls.mu > 0.0) && !beta) throw std::invalid_argument("oscillator: needs mu > 0");
  const double b = beta.value_or(2.0 * std::sqrt(cls.mu));
  LmiSystem sys;
  append_second_order(sys, cls.mu, Term(a), TermMatrix::of(Eigen::MatrixXd(P)), b, tau,
                      enforce_P_psd ? Positivity::PsdP : Positivity::Interpolation);
  return sys;
}

LmiSystem build_agf_dual(const Profile& a_t, const ProfileMatrix& P_t, const Profile& beta_t,
                         const FunctionClass& cls, double t, bool include_P_psd) {
  LmiSystem sys;
  append_second_order(sys, cls.mu, term_of(a_t, t), TermMatrix::of(P_t, t), beta_t.value(t), 0.0,
                      include_P_psd ? Positivity::PsdP : Positivity::None);
  return sys;
}

LmiSystem build_pr_averaging_dual(const Profile& a1_t, const Profile& a2_t, const ProfileMatrix& P_t,
                                  const Profile& h_t, double t) {
  if (!(t > 0.0)) throw std::domain_error("PR averaging needs t > 0");
  LmiSystem sys;
  append_averaging(sys, 0.0, term_of(a1_t, t), term_of(a2_t, t), TermMatrix::of(P_t, t), h_t.value(t),
                   1.0 / t, false);
  return sys;
}

LmiSystem build_weighted_avg_dual(const Profile& u_t, const Profile& h_t, const FunctionClass& cls,
                                  double t) {
  if (!(t > 0.0)) throw std::domain_error("weighted averaging needs t > 0");
  const Profile U = u_t.antiderivative_from_zero();
  const double u = u_t.value(t), Ut = U.value(t), h = h_t.value(t);
  // a2 = int_0^t u,  p11 = u / (2h)
  const double dh = h_t.derivative(t), du = u_t.derivative(t);
  TermMatrix P(2);
  P.set(0, 0, Term(Affine(u / (2 * h)), Affine((du * h - u * dh) / (2 * h * h))));
  P.set(0, 1, Term(0.0));
  P.set(1, 1, Term(0.0));
  LmiSystem sys;
  append_averaging(sys, cls.mu, Term(0.0), Term(Affine(Ut), Affine(u)), P, h, u / Ut, false);
  return sys;
}

LmiSystem build_acc_sde_avg_dual(const Profile& a1_t, const Profile& a2_t, const ProfileMatrix& P_t,
                                 const Profile& beta_t, double t) {
  if (!(t > 0.0)) throw std::domain_error("accelerated averaging needs t > 0");
  LmiSystem sys;
  append_acc_averaging(sys, term_of(a1_t, t), term_of(a2_t, t), TermMatrix::of(P_t, t), beta_t.value(t), t);
  return sys;
}

LmiSystem build_primal_avg_dual(const Profile& a2_t, const ProfileMatrix& P_t, const Profile& h_t,
                                double t) {
  if (!(t > 0.0)) throw std::domain_error("primal averaging needs t > 0");
  LmiSystem sys;
  append_averaging(sys, 0.0, Term(0.0), term_of(a2_t, t), TermMatrix::of(P_t, t), h_t.value(t), 1.0 / t,
                   true);
  return sys;
}

LmiSystem build_third_order_dual(const Profile& a_t, const ProfileMatrix& P_t, const Profile& alpha_t,
                                 const Profile& beta_t, const Profile& gamma_t, double t) {
  LmiSystem sys;
  append_third_order(sys, 0.0, term_of(a_t, t), TermMatrix::of(P_t, t), alpha_t.value(t),
                     beta_t.value(t), gamma_t.value(t));
  return sys;
}

LmiSystem fix_variables(const LmiSystem& sys, const std::map<std::string, double>& values) {
  for (const auto& [name, v] : values)
    if (!sys.has_variable(name)) throw std::invalid_argument("fix_variables: unknown variable " + name);
  LmiSystem out;
  std::vector<int> remap(sys.num_variables(), -1);
  std::vector<double> fixed(sys.num_variables(), 0.0);
  for (int i = 0; i < sys.num_variables(); ++i) {
    const auto& v = sys.variables()[i];
    auto it = values.find(v.name);
    if (it == values.end()) {
      remap[i] = out.add_variable(v.name, v.sign);
    } else {
      fixed[i] = it->second;
    }
  }
  auto subst = [&](const Affine& a) {
    Affine r(a.constant);
    for (const auto& [i, c] : a.terms) {
      if (remap[i] < 0) {
        r.constant += c * fixed[i];
      } else {
        r += Affine::var(remap[i], c);
      }
    }
    return r;
  };
  for (const auto& b : sys.blocks()) {
    LmiBlock& nb = out.add_block(b.name, b.sense, b.dim);
    for (size_t k = 0; k < b.lower.size(); ++k) nb.lower[k] = subst(b.lower[k]);
  }
  for (const auto& e : sys.equalities()) out.add_equality(e.name, subst(e.expr));
  // sign constraints of fixed variables become 1x1 checks
  for (int i = 0; i < sys.num_variables(); ++i) {
    const auto& v = sys.variables()[i];
    if (remap[i] < 0 && v.sign == Sign::NonNeg) {
      LmiBlock& nb = out.add_block("sign_" + v.name, Sense::PosSemidef, 1);
      nb.at(0, 0) = Affine(fixed[i]);
    }
  }
  return out;
}

}  // namespace flowcert
