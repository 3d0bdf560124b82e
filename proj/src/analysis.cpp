#include "flowcert/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowcert {

namespace {

const std::vector<std::pair<Family, const char*>>& family_names() {
  static const std::vector<std::pair<Family, const char*>> names = {
      {Family::GradientFlow, "gradient_flow"},
      {Family::NonAutonomousGf, "nonautonomous_gf"},
      {Family::Oscillator, "oscillator"},
      {Family::Agf, "agf"},
      {Family::PrAveraging, "pr_averaging"},
      {Family::WeightedAveraging, "weighted_averaging"},
      {Family::PrimalAveraging, "primal_averaging"},
      {Family::AccSdeAveraging, "acc_sde_averaging"},
      {Family::ThirdOrder, "third_order"},
  };
  return names;
}

json class_to_json(const FunctionClass& c) {
  json j;
  j["mu"] = c.mu;
  if (c.smooth()) {
    j["L"] = c.L;
  } else {
    j["L"] = "inf";
  }
  return j;
}

FunctionClass class_from_json(const json& j) {
  double L = kInf;
  if (j.contains("L") && j.at("L").is_number()) L = j.at("L").get<double>();
  return FunctionClass(j.at("mu").get<double>(), L);
}

json ansatz_to_json(const LyapunovAnsatz& a) {
  json j;
  j["a_terms"] = json::array();
  for (const auto& p : a.a_terms) j["a_terms"].push_back(profile_to_json(p));
  j["quad"] = json::array();
  for (int i = 0; i < a.quad.n; ++i) {
    json row = json::array();
    for (int k = 0; k < a.quad.n; ++k) row.push_back(profile_to_json(a.quad(i, k)));
    j["quad"].push_back(row);
  }
  j["state_basis"] = a.state_basis;
  return j;
}

LyapunovAnsatz ansatz_from_json(const json& j) {
  LyapunovAnsatz a;
  for (const auto& p : j.at("a_terms")) a.a_terms.push_back(profile_from_json(p));
  const auto& q = j.at("quad");
  a.quad = ProfileMatrix(static_cast<int>(q.size()));
  for (int i = 0; i < a.quad.n; ++i)
    for (int k = 0; k <= i; ++k) a.quad.set(i, k, profile_from_json(q.at(i).at(k)));
  a.state_basis = j.at("state_basis").get<std::vector<std::string>>();
  a.validate();
  return a;
}

SolveStatus combine(SolveStatus a, SolveStatus b) {
  if (a == SolveStatus::Infeasible || b == SolveStatus::Infeasible) return SolveStatus::Infeasible;
  if (a == SolveStatus::Marginal || b == SolveStatus::Marginal) return SolveStatus::Marginal;
  return SolveStatus::Feasible;
}

const Profile& a_term(const LyapunovAnsatz& a, size_t k, const char* who) {
  if (a.a_terms.size() <= k) throw std::invalid_argument(std::string(who) + ": ansatz lacks a-term");
  return a.a_terms[k];
}

void need_quad(const LyapunovAnsatz& a, int n, const char* who) {
  if (a.quad.n != n) throw std::invalid_argument(std::string(who) + ": ansatz quad has wrong dimension");
}

std::vector<const Profile*> all_profiles(const Certificate& c) {
  std::vector<const Profile*> out;
  for (const auto& p : c.ansatz.a_terms) out.push_back(&p);
  for (const auto& p : c.ansatz.quad.entries) out.push_back(&p);
  for (const auto& [k, p] : c.family.coeffs) out.push_back(&p);
  for (const auto& [k, p] : c.multiplier_profiles) out.push_back(&p);
  return out;
}

ResidualSummary summary_of(const SolveReport& r) {
  ResidualSummary s;
  s.max_block_eigenvalue = r.max_block_eigenvalue;
  s.max_equality_residual = r.max_equality_residual;
  s.min_sign_value = r.min_sign_value;
  return s;
}

json summary_to_json(const ResidualSummary& s) {
  json j;
  j["max_block_eigenvalue"] = s.max_block_eigenvalue;
  j["max_equality_residual"] = s.max_equality_residual;
  j["min_sign_value"] = std::isfinite(s.min_sign_value) ? json(s.min_sign_value) : json(nullptr);
  j["argmax_t"] = s.argmax_t;
  if (!s.grid.empty()) {
    j["grid"] = {{"points", s.grid.size()}, {"lo", s.grid.front()}, {"hi", s.grid.back()}};
  }
  return j;
}

SolveStatus status_from_name(const std::string& s) {
  if (s == "Feasible") return SolveStatus::Feasible;
  if (s == "Marginal") return SolveStatus::Marginal;
  return SolveStatus::Infeasible;
}

}  // namespace

std::string family_name(Family f) {
  for (const auto& [k, n] : family_names())
    if (k == f) return n;
  return "unknown";
}

Family family_from_name(const std::string& name) {
  for (const auto& [k, n] : family_names())
    if (name == n) return k;
  throw std::invalid_argument("unknown family " + name);
}

const Profile& FamilyData::coeff(const std::string& key) const {
  auto it = coeffs.find(key);
  if (it == coeffs.end()) throw std::invalid_argument(family_name(family) + " needs coefficient " + key);
  return it->second;
}

json FamilyData::to_json() const {
  json j;
  j["family"] = family_name(family);
  j["coeffs"] = json::object();
  for (const auto& [k, p] : coeffs) j["coeffs"][k] = profile_to_json(p);
  return j;
}

FamilyData FamilyData::from_json(const json& j) {
  FamilyData f;
  f.family = family_from_name(j.at("family").get<std::string>());
  if (j.contains("coeffs"))
    for (const auto& [k, v] : j.at("coeffs").items()) f.coeffs[k] = profile_from_json(v);
  return f;
}

FamilyData family_of(const FlowSpec& flow) {
  validate_flow(flow);
  FamilyData f;
  if (std::holds_alternative<GradientFlow>(flow)) {
    f.family = Family::GradientFlow;
  } else if (auto* na = std::get_if<NonAutonomousGradientFlow>(&flow)) {
    f.family = Family::NonAutonomousGf;
    f.coeffs["speed"] = na->alpha;
  } else if (auto* osc = std::get_if<DampedOscillator>(&flow)) {
    f.family = Family::Oscillator;
    f.coeffs["beta"] = Profile::constant(osc->beta);
  } else if (auto* so = std::get_if<SecondOrderFlow>(&flow)) {
    f.family = Family::Agf;
    f.coeffs["beta"] = so->beta_t;
  } else if (auto* sde = std::get_if<FirstOrderSde>(&flow)) {
    f.coeffs["h"] = sde->h_t;
    switch (sde->averaging) {
      case Averaging::None:
        f.family = Family::NonAutonomousGf;
        f.coeffs.erase("h");
        f.coeffs["speed"] = sde->h_t;
        break;
      case Averaging::PolyakRuppert: f.family = Family::PrAveraging; break;
      case Averaging::Weighted:
        f.family = Family::WeightedAveraging;
        f.coeffs["u"] = *sde->u_t;
        break;
      case Averaging::Primal: f.family = Family::PrimalAveraging; break;
    }
  } else if (auto* acc = std::get_if<SecondOrderSde>(&flow)) {
    f.coeffs["beta"] = acc->beta_t;
    switch (acc->averaging) {
      case Averaging::None: f.family = Family::Agf; break;
      case Averaging::PolyakRuppert: f.family = Family::AccSdeAveraging; break;
      default: throw std::invalid_argument("second-order SDE: no LMI template for this averaging mode");
    }
  }
  return f;
}

LyapunovAnsatz default_ansatz(Family f) {
  LyapunovAnsatz a;
  auto zero = [](int n) {
    ProfileMatrix m(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) m.set(i, j, Profile::constant(0.0));
    return m;
  };
  switch (f) {
    case Family::GradientFlow:
    case Family::NonAutonomousGf:
      a.a_terms = {Profile::constant(0.0)};
      a.quad = zero(1);
      a.state_basis = {"X"};
      break;
    case Family::Oscillator:
    case Family::Agf:
      a.a_terms = {Profile::constant(0.0)};
      a.quad = zero(2);
      a.state_basis = {"X", "Xdot"};
      break;
    case Family::PrAveraging:
    case Family::WeightedAveraging:
    case Family::PrimalAveraging:
      a.a_terms = {Profile::constant(0.0), Profile::constant(0.0)};
      a.quad = zero(2);
      a.state_basis = {"X", "Xbar"};
      break;
    case Family::AccSdeAveraging:
      a.a_terms = {Profile::constant(0.0), Profile::constant(0.0)};
      a.quad = zero(3);
      a.state_basis = {"Xdot", "X", "Xbar"};
      break;
    case Family::ThirdOrder:
      a.a_terms = {Profile::constant(0.0)};
      a.quad = zero(3);
      a.state_basis = {"Xddot", "Xdot", "X"};
      break;
  }
  return a;
}

LmiSystem build_family_lmi(const FamilyData& fam, const FunctionClass& cls, const LyapunovAnsatz& ansatz,
                           double t, double tau, bool enforce_P_psd) {
  const double mu = cls.mu;
  switch (fam.family) {
    case Family::GradientFlow:
    case Family::NonAutonomousGf: {
      need_quad(ansatz, 1, "gradient flow");
      const Profile& a = a_term(ansatz, 0, "gradient flow");
      const Profile& c = ansatz.quad(0, 0);
      if (fam.family == Family::GradientFlow && !ansatz.time_dependent())
        return build_gf_dual(cls, a.value(t), c.value(t), tau);
      const Profile speed = fam.family == Family::GradientFlow ? Profile::constant(1.0) : fam.coeff("speed");
      if (tau == 0.0) return build_nonautonomous_gf_dual(cls, a, c, speed, t);
      LmiSystem sys;
      append_first_order(sys, mu, term_of(a, t), term_of(c, t), speed.value(t), tau);
      return sys;
    }
    case Family::Oscillator: {
      need_quad(ansatz, 2, "oscillator");
      const Profile& a = a_term(ansatz, 0, "oscillator");
      const double beta = fam.coeffs.count("beta") ? fam.coeff("beta").value(t) : 2.0 * std::sqrt(mu);
      if (!ansatz.time_dependent())
        return build_oscillator_dual(cls, a.value(t), ansatz.quad.value(t), tau, enforce_P_psd, beta);
      LmiSystem sys;
      append_second_order(sys, mu, term_of(a, t), TermMatrix::of(ansatz.quad, t), beta, tau,
                          enforce_P_psd ? Positivity::PsdP : Positivity::Interpolation);
      return sys;
    }
    case Family::Agf: {
      need_quad(ansatz, 2, "agf");
      const Profile& a = a_term(ansatz, 0, "agf");
      if (tau == 0.0) return build_agf_dual(a, ansatz.quad, fam.coeff("beta"), cls, t, enforce_P_psd);
      LmiSystem sys;
      append_second_order(sys, mu, term_of(a, t), TermMatrix::of(ansatz.quad, t), fam.coeff("beta").value(t), tau,
                          enforce_P_psd ? Positivity::PsdP : Positivity::None);
      return sys;
    }
    case Family::PrAveraging:
      need_quad(ansatz, 2, "pr averaging");
      return build_pr_averaging_dual(a_term(ansatz, 0, "pr averaging"), a_term(ansatz, 1, "pr averaging"),
                                     ansatz.quad, fam.coeff("h"), t);
    case Family::WeightedAveraging:
      return build_weighted_avg_dual(fam.coeff("u"), fam.coeff("h"), cls, t);
    case Family::PrimalAveraging:
      need_quad(ansatz, 2, "primal averaging");
      return build_primal_avg_dual(a_term(ansatz, 1, "primal averaging"), ansatz.quad, fam.coeff("h"), t);
    case Family::AccSdeAveraging:
      need_quad(ansatz, 3, "acc averaging");
      return build_acc_sde_avg_dual(a_term(ansatz, 0, "acc averaging"), a_term(ansatz, 1, "acc averaging"),
                                    ansatz.quad, fam.coeff("beta"), t);
    case Family::ThirdOrder:
      need_quad(ansatz, 3, "third order");
      return build_third_order_dual(a_term(ansatz, 0, "third order"), ansatz.quad, fam.coeff("alpha"),
                                    fam.coeff("beta"), fam.coeff("gamma"), t);
  }
  throw std::logic_error("unreachable family");
}

// ---------------------------------------------------------------- certificates

bool Certificate::time_dependent() const {
  if (ansatz.time_dependent() || !multiplier_profiles.empty()) return true;
  for (const auto& [k, p] : family.coeffs)
    if (!p.is_constant()) return true;
  return false;
}

json Certificate::to_json() const {
  json j;
  j["family"] = family.to_json();
  j["class"] = class_to_json(cls);
  j["ansatz"] = ansatz_to_json(ansatz);
  j["rate_tau"] = rate_tau;
  j["enforce_P_psd"] = enforce_P_psd;
  j["multipliers"] = json::object();
  for (const auto& [k, v] : multipliers) j["multipliers"][k] = v;
  for (const auto& [k, p] : multiplier_profiles) j["multipliers"][k] = profile_to_json(p);
  j["residual_summary"] = summary_to_json(residual_summary);
  j["status"] = status_name(status);
  return j;
}

Certificate Certificate::from_json(const json& j) {
  Certificate c;
  c.family = FamilyData::from_json(j.at("family"));
  c.cls = class_from_json(j.at("class"));
  c.ansatz = j.contains("ansatz") ? ansatz_from_json(j.at("ansatz")) : default_ansatz(c.family.family);
  c.rate_tau = j.value("rate_tau", 0.0);
  if (c.rate_tau < 0.0) throw std::invalid_argument("certificate: negative rate");
  c.enforce_P_psd = j.value("enforce_P_psd", false);
  if (j.contains("multipliers"))
    for (const auto& [k, v] : j.at("multipliers").items()) {
      if (v.is_number()) {
        c.multipliers[k] = v.get<double>();
      } else {
        c.multiplier_profiles[k] = profile_from_json(v);
      }
    }
  if (j.contains("status")) c.status = status_from_name(j.at("status").get<std::string>());
  if (j.contains("residual_summary")) {
    const auto& r = j.at("residual_summary");
    c.residual_summary.max_block_eigenvalue = r.value("max_block_eigenvalue", kInf);
    c.residual_summary.max_equality_residual = r.value("max_equality_residual", kInf);
    c.residual_summary.argmax_t = r.value("argmax_t", 0.0);
  }
  return c;
}

json CheckReport::to_json() const {
  json j;
  j["certified"] = certified;
  j["status"] = status_name(status);
  j["summary"] = summary_to_json(summary);
  if (!diagnostic.empty()) j["diagnostic"] = diagnostic;
  return j;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw std::invalid_argument("log_grid: need 0 < lo <= hi, n >= 1");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> log_grid_per_decade(double lo, double hi, int per_decade) {
  const double decades = std::log10(hi / lo);
  const int n = std::max(2, static_cast<int>(std::lround(decades * per_decade)) + 1);
  return log_grid(lo, hi, n);
}

std::vector<double> default_t_grid() { return log_grid_per_decade(1e-3, 1e3, 400); }

CheckReport check_certificate(const Certificate& cert, const std::optional<std::vector<double>>& t_grid,
                              const SolverOptions& opt) {
  CheckReport rep;
  const bool td = cert.time_dependent();
  if (td && !t_grid) throw std::invalid_argument("check_certificate: time-dependent certificate needs a grid");
  std::vector<double> grid = t_grid ? *t_grid : std::vector<double>{1.0};
  if (grid.empty()) throw std::invalid_argument("check_certificate: empty grid");
  const auto profiles = all_profiles(cert);
  for (double t : grid)
    for (const Profile* p : profiles)
      if (!p->in_domain(t))
        throw std::domain_error("check_certificate: grid point t=" + std::to_string(t) + " outside domain of " +
                                p->describe());

  rep.points.resize(grid.size());
  std::vector<std::string> errors(grid.size());
  const int n = static_cast<int>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const double t = grid[i];
      const LmiSystem lmi = build_family_lmi(cert.family, cert.cls, cert.ansatz, t, cert.rate_tau, cert.enforce_P_psd);
      std::map<std::string, double> values = cert.multipliers;
      for (const auto& [k, p] : cert.multiplier_profiles) values[k] = p.value(t);
      SolveReport r;
      if (static_cast<int>(values.size()) == lmi.num_variables()) {
        r = evaluate_assignment(lmi, lmi.assignment_vector(values), opt);
      } else {
        r = minimize_max_eigenvalue(fix_variables(lmi, values), opt);
      }
      GridPointReport& g = rep.points[i];
      g.t = t;
      g.max_block_eigenvalue = r.max_block_eigenvalue;
      g.max_equality_residual = r.max_equality_residual;
      g.min_sign_value = r.min_sign_value;
      g.status = r.status;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::invalid_argument("check_certificate: " + e);

  rep.status = SolveStatus::Feasible;
  rep.summary.max_block_eigenvalue = -kInf;
  rep.summary.max_equality_residual = 0.0;
  for (const auto& g : rep.points) {
    rep.status = combine(rep.status, g.status);
    if (g.max_block_eigenvalue > rep.summary.max_block_eigenvalue) {
      rep.summary.max_block_eigenvalue = g.max_block_eigenvalue;
      rep.summary.argmax_t = g.t;
    }
    rep.summary.max_equality_residual = std::max(rep.summary.max_equality_residual, g.max_equality_residual);
    rep.summary.min_sign_value = std::min(rep.summary.min_sign_value, g.min_sign_value);
  }
  if (t_grid) rep.summary.grid = grid;
  rep.certified = rep.status == SolveStatus::Feasible;
  return rep;
}

SearchResult search_multipliers(const LmiSystem& lmi, const SolverOptions& opt) {
  SearchResult out;
  out.report = minimize_max_eigenvalue(lmi, opt);
  out.status = out.report.status;
  out.cert.multipliers = out.report.assignment;
  out.cert.residual_summary = summary_of(out.report);
  out.cert.status = out.status;
  return out;
}

SearchResult search_lyapunov(const FlowSpec& flow, const FunctionClass& cls, double tau, bool enforce_P_psd,
                             const SolverOptions& opt) {
  if (tau < 0.0) throw std::invalid_argument("search_lyapunov: tau must be >= 0");
  SearchResult out;
  out.cert.family = family_of(flow);
  out.cert.cls = cls;
  out.cert.rate_tau = tau;
  out.cert.enforce_P_psd = enforce_P_psd;
  out.cert.ansatz = default_ansatz(out.cert.family.family);
  out.cert.ansatz.a_terms[0] = Profile::constant(1.0);

  LmiSystem sys;
  std::vector<std::string> params;
  if (std::holds_alternative<GradientFlow>(flow)) {
    const int c = sys.add_variable("c", Sign::NonNeg);
    params = {"c"};
    append_first_order(sys, cls.mu, Term(1.0), Term(Affine::var(c), Affine(0.0)), 1.0, tau);
  } else if (auto* osc = std::get_if<DampedOscillator>(&flow)) {
    TermMatrix P(2);
    const int p11 = sys.add_variable("p11", Sign::Free);
    const int p12 = sys.add_variable("p12", Sign::Free);
    const int p22 = sys.add_variable("p22", Sign::Free);
    params = {"p11", "p12", "p22"};
    P.set(0, 0, Term(Affine::var(p11), Affine(0.0)));
    P.set(0, 1, Term(Affine::var(p12), Affine(0.0)));
    P.set(1, 1, Term(Affine::var(p22), Affine(0.0)));
    append_second_order(sys, cls.mu, Term(1.0), P, osc->beta, tau,
                        enforce_P_psd ? Positivity::PsdP : Positivity::Interpolation);
  } else {
    throw std::invalid_argument("search_lyapunov: joint search needs an autonomous flow (gradient flow or oscillator)");
  }

  out.report = minimize_max_eigenvalue(sys, opt);
  out.status = out.report.status;
  const auto& x = out.report.assignment;
  if (params.size() == 1) {
    out.cert.ansatz.quad.set(0, 0, Profile::constant(x.at("c")));
  } else {
    out.cert.ansatz.quad.set(0, 0, Profile::constant(x.at("p11")));
    out.cert.ansatz.quad.set(0, 1, Profile::constant(x.at("p12")));
    out.cert.ansatz.quad.set(1, 1, Profile::constant(x.at("p22")));
  }
  for (const auto& [k, v] : x)
    if (std::find(params.begin(), params.end(), k) == params.end()) out.cert.multipliers[k] = v;
  out.cert.residual_summary = summary_of(out.report);
  out.cert.status = out.status;
  return out;
}

double reference_rate(const FlowSpec& flow, double mu, bool enforce_P_psd) {
  if (std::holds_alternative<GradientFlow>(flow)) return 2.0 * mu;
  if (std::holds_alternative<DampedOscillator>(flow))
    return enforce_P_psd ? std::sqrt(mu) : 4.0 / 3.0 * std::sqrt(mu);
  throw std::invalid_argument("reference_rate: no closed form for " + flow_name(flow));
}

BisectionResult bisect_rate(const FlowSpec& flow, const FunctionClass& cls, bool enforce_P_psd,
                            const BisectionOptions& opt) {
  if (!(cls.mu > 0.0)) throw std::invalid_argument("bisect_rate: needs mu > 0");
  BisectionResult res;
  double lo = 0.0;
  double hi = opt.tau_hi.value_or(4.0 * (std::sqrt(cls.mu) + cls.mu));
  auto probe = [&](double tau) {
    SearchResult s = search_lyapunov(flow, cls, tau, enforce_P_psd, opt.solver);
    const bool ok = s.status == SolveStatus::Feasible;
    res.trace.push_back({tau, s.report.objective, ok});
    return std::make_pair(ok, s);
  };

  auto [lo_ok, lo_cert] = probe(lo);
  if (!lo_ok) throw std::runtime_error("bisect_rate: tau = 0 not certifiable");
  res.cert = lo_cert.cert;
  if (probe(hi).first) throw std::runtime_error("bisect_rate: bracket failure, tau_hi = " + std::to_string(hi) + " is certifiable");

  while (hi - lo > opt.tol) {
    const double mid = 0.5 * (lo + hi);
    auto [ok, s] = probe(mid);
    if (ok) {
      lo = mid;
      res.cert = s.cert;
    } else {
      hi = mid;
    }
  }
  res.tau_star = 0.5 * (lo + hi);
  res.tau_certified = lo;

  double max_ok = -kInf, min_bad = kInf;
  for (const auto& s : res.trace) {
    if (s.feasible) {
      max_ok = std::max(max_ok, s.tau);
    } else {
      min_bad = std::min(min_bad, s.tau);
    }
  }
  res.monotone = max_ok < min_bad;
  return res;
}

std::vector<RateSweepRow> rate_sweep(const FlowSpec& flow, const std::vector<double>& mus, bool enforce_P_psd,
                                     const BisectionOptions& opt) {
  std::vector<RateSweepRow> rows(mus.size());
  std::vector<std::string> errors(mus.size());
  const int n = static_cast<int>(mus.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const double mu = mus[i];
      FlowSpec f = flow;
      if (auto* osc = std::get_if<DampedOscillator>(&f)) osc->beta = 2.0 * std::sqrt(mu);
      auto b = bisect_rate(f, FunctionClass(mu), enforce_P_psd, opt);
      rows[i].mu = mu;
      rows[i].tau_pep = b.tau_star;
      rows[i].tau_reference = reference_rate(flow, mu, enforce_P_psd);
      rows[i].relative_gap = (b.tau_star - rows[i].tau_reference) / rows[i].tau_reference;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("rate_sweep: " + e);
  return rows;
}

SublinearReport verify_sublinear_family(const Certificate& cert, const std::vector<double>& t_grid,
                                        const SolverOptions& opt) {
  SublinearReport r;
  r.check = check_certificate(cert, t_grid, opt);
  const Family f = cert.family.family;
  if (f == Family::GradientFlow || f == Family::NonAutonomousGf) {
    const Profile& a = cert.ansatz.a_terms.at(0);
    const Profile& c = cert.ansatz.quad(0, 0);
    r.worst_monotonicity = -kInf;
    r.worst_dominance = -kInf;
    for (double t : t_grid) {
      const double dc = c.derivative(t);
      const double gap = t * c.value(t) - a.value(t);
      r.worst_monotonicity = std::max(r.worst_monotonicity, dc);
      r.worst_dominance = std::max(r.worst_dominance, gap);
      const double scale = std::max(1.0, std::abs(a.value(t)));
      if (dc > 1e-12 * std::max(1.0, std::abs(c.value(t)))) r.c_decreasing = false;
      if (gap > 1e-9 * scale) r.a_dominates_tc = false;
    }
  }
  r.passed = r.check.certified && r.c_decreasing && r.a_dominates_tc;
  return r;
}

// ---------------------------------------------------------------- triviality

namespace {

struct PolyEntry {
  std::vector<int> ids;  // coefficient of t^k
  Term at(double t) const {
    Affine v, d;
    for (size_t k = 0; k < ids.size(); ++k) {
      v += Affine::var(ids[k], std::pow(t, static_cast<double>(k)));
      if (k > 0) d += Affine::var(ids[k], static_cast<double>(k) * std::pow(t, static_cast<double>(k) - 1.0));
    }
    return Term(v, d);
  }
};

PolyEntry poly_entry(LmiSystem& sys, const std::string& name, int basis) {
  PolyEntry e;
  for (int k = 0; k < basis; ++k) e.ids.push_back(sys.add_variable(name + "_t" + std::to_string(k), Sign::Free));
  return e;
}

}  // namespace

std::vector<double> default_triviality_grid() { return log_grid(0.1, 10.0, 9); }

FamilyData acc_sde_family_default() {
  FamilyData f;
  f.family = Family::AccSdeAveraging;
  f.coeffs["beta"] = Profile::reciprocal(3.0);
  return f;
}

FamilyData third_order_family_default() {
  FamilyData f;
  f.family = Family::ThirdOrder;
  f.coeffs["alpha"] = Profile::reciprocal(3.0);
  f.coeffs["beta"] = Profile::product(Profile::reciprocal(3.0), Profile::reciprocal(1.0));
  f.coeffs["gamma"] = Profile::reciprocal(1.0);
  return f;
}

TrivialityReport detect_trivial_only(const FamilyData& fam, const FunctionClass& cls, const std::vector<double>& t_grid,
                                     int basis_size, const SolverOptions& opt) {
  if (t_grid.empty()) throw std::invalid_argument("detect_trivial_only: empty grid");
  if (basis_size < 1) throw std::invalid_argument("detect_trivial_only: basis_size >= 1");
  for (double t : t_grid)
    for (const auto& [k, p] : fam.coeffs)
      if (!p.in_domain(t)) throw std::domain_error("detect_trivial_only: grid outside coefficient domain");

  LmiSystem sys;
  int qdim = 0;
  switch (fam.family) {
    case Family::GradientFlow:
    case Family::NonAutonomousGf: qdim = 1; break;
    case Family::AccSdeAveraging:
    case Family::ThirdOrder: qdim = 3; break;
    default: throw std::invalid_argument("detect_trivial_only: unsupported family " + family_name(fam.family));
  }
  const PolyEntry lead = poly_entry(sys, fam.family == Family::AccSdeAveraging ? "a2" : "a", basis_size);
  std::vector<PolyEntry> quad(qdim * qdim);
  for (int i = 0; i < qdim; ++i)
    for (int j = 0; j <= i; ++j)
      quad[i * qdim + j] = quad[j * qdim + i] =
          poly_entry(sys, "p" + std::to_string(j + 1) + std::to_string(i + 1), basis_size);

  Affine normalization(-1.0);
  for (size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    const std::string sfx = "@" + std::to_string(i);
    TermMatrix P(qdim);
    for (int r = 0; r < qdim; ++r)
      for (int c = 0; c <= r; ++c) P.set(r, c, quad[r * qdim + c].at(t));
    const Term a = lead.at(t);
    switch (fam.family) {
      case Family::GradientFlow:
        append_first_order(sys, cls.mu, a, P(0, 0), 1.0, 0.0, sfx);
        break;
      case Family::NonAutonomousGf:
        append_first_order(sys, cls.mu, a, P(0, 0), fam.coeff("speed").value(t), 0.0, sfx);
        break;
      case Family::AccSdeAveraging:
        append_acc_averaging(sys, Term(0.0), a, P, fam.coeff("beta").value(t), t, sfx);
        break;
      case Family::ThirdOrder:
        append_third_order(sys, cls.mu, a, P, fam.coeff("alpha").value(t), fam.coeff("beta").value(t),
                           fam.coeff("gamma").value(t), sfx);
        break;
      default: break;
    }
    LmiBlock& pb = sys.add_block("P" + sfx, Sense::PosSemidef, qdim);
    for (int r = 0; r < qdim; ++r)
      for (int c = 0; c <= r; ++c) pb.at(r, c) = P(r, c).value;
    sys.add_block("a" + sfx, Sense::PosSemidef, 1).at(0, 0) = a.value;
    normalization += a.value;
  }
  sys.add_equality("normalization", normalization);

  TrivialityReport out;
  out.grid = t_grid;
  out.report = minimize_max_eigenvalue(sys, opt);
  out.objective = out.report.objective;
  out.trivial_only = out.report.status == SolveStatus::Infeasible;
  if (out.trivial_only) {
    out.leading_coefficient_max = 0.0;
  } else {
    out.leading_coefficient_max = -kInf;
    for (double t : t_grid) out.leading_coefficient_max = std::max(out.leading_coefficient_max, lead.at(t).value.eval(out.report.x));
  }
  return out;
}

}  // namespace flowcert
