#include "flowcert/cli_report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flowcert {

int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible:
      return kExitOk;
    case SolveStatus::Marginal:
      return kExitMarginal;
    case SolveStatus::Infeasible:
      return kExitInfeasible;
  }
  return kExitInfeasible;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int worse(int a, int b) {
  // infeasible beats marginal beats ok
  auto rank = [](int c) { return c == kExitInfeasible ? 2 : c == kExitMarginal ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

const double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string CsvTable::to_string() const {
  std::ostringstream os;
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
  for (size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << fmt(r[i]);
    os << "\n";
  }
  return os.str();
}

FlowSpec flow_from_id(const std::string& id, double mu) {
  if (id == "gf") return GradientFlow{};
  if (id == "oscillator") return DampedOscillator{2.0 * std::sqrt(std::max(mu, 0.0))};
  throw std::invalid_argument("unknown flow id '" + id + "' (expected gf or oscillator)");
}

CmdResult cmd_rate(const std::string& flow_id, const std::vector<double>& mus, bool enforce_P_psd,
                   const BisectionOptions& opt) {
  CmdResult out;
  const int n = static_cast<int>(mus.size());
  std::vector<BisectionResult> res(n);
  std::vector<std::string> err(n);
  flow_from_id(flow_id);  // validate before fanning out
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      res[i] = bisect_rate(flow_from_id(flow_id, mus[i]), FunctionClass(mus[i]), enforce_P_psd, opt);
    } catch (const std::exception& e) {
      err[i] = e.what();
    }
  }
  out.table.columns = {"condition", "pep", "theory", "relative_gap"};
  out.doc["rows"] = json::array();
  for (int i = 0; i < n; ++i) {
    if (!err[i].empty()) {
      out.exit_code = kExitInfeasible;
      out.message += "mu=" + fmt(mus[i]) + ": " + err[i] + "\n";
      out.table.rows.push_back({mus[i], kNaN, kNaN, kNaN});
      continue;
    }
    const double ref = reference_rate(flow_from_id(flow_id, mus[i]), mus[i], enforce_P_psd);
    const double gap = (res[i].tau_star - ref) / ref;
    out.table.rows.push_back({mus[i], res[i].tau_star, ref, gap});
    out.doc["rows"].push_back({{"mu", mus[i]},
                               {"tau_star", res[i].tau_star},
                               {"tau_certified", res[i].tau_certified},
                               {"theory", ref},
                               {"monotone", res[i].monotone},
                               {"bisection_steps", res[i].trace.size()},
                               {"certificate", res[i].cert.to_json()}});
  }
  return out;
}

CmdResult cmd_lyapunov(const std::vector<double>& mus, const SolverOptions& opt) {
  CmdResult out;
  const int n = static_cast<int>(mus.size());
  std::vector<SearchResult> res(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    const double sm = std::sqrt(mus[i]);
    res[i] = search_lyapunov(DampedOscillator{2 * sm}, FunctionClass(mus[i]), 4.0 / 3.0 * sm, false, opt);
  }
  out.table.columns = {"condition", "p11", "p12", "p22", "ref_p11", "ref_p12"};
  out.doc["rows"] = json::array();
  for (int i = 0; i < n; ++i) {
    const double mu = mus[i], sm = std::sqrt(mu);
    const Eigen::MatrixXd P = res[i].cert.ansatz.quad.value(1.0);
    out.table.rows.push_back({mu, P(0, 0), P(0, 1), P(1, 1), 4 * mu / 9, 2 * sm / 3});
    out.exit_code = worse(out.exit_code, exit_code_for(res[i].status));
    out.doc["rows"].push_back({{"mu", mu}, {"status", status_name(res[i].status)}, {"certificate", res[i].cert.to_json()}});
  }
  return out;
}

CmdResult cmd_verify(const json& certificate, const std::optional<std::vector<double>>& t_grid,
                     const SolverOptions& opt) {
  CmdResult out;
  const Certificate cert = Certificate::from_json(certificate);
  std::optional<std::vector<double>> grid = t_grid;
  if (cert.time_dependent() && !grid) grid = default_t_grid();
  if (!cert.time_dependent()) grid.reset();
  const CheckReport rep = check_certificate(cert, grid, opt);
  out.exit_code = exit_code_for(rep.status);
  out.doc = rep.to_json();
  out.table.columns = {"t", "max_block_eigenvalue", "max_equality_residual"};
  for (const auto& p : rep.points) out.table.rows.push_back({p.t, p.max_block_eigenvalue, p.max_equality_residual});
  out.message = std::string(rep.certified ? "certified" : "not certified") + " (" + status_name(rep.status) +
                "), max eigenvalue " + fmt(rep.summary.max_block_eigenvalue);
  return out;
}

CmdResult cmd_worstcase(const std::string& flow_id, double mu, double tau, int n_points) {
  CmdResult out;
  WorstCaseData wc = extract_worst_case(flow_from_id(flow_id, mu), FunctionClass(mu), tau);
  if (n_points != 101) wc.interpolant_samples = build_interpolant(wc.triplets, FunctionClass(mu), n_points);
  out.table.columns = {"x", "f"};
  for (auto [x, fx] : wc.interpolant_samples) out.table.rows.push_back({x, fx});
  out.doc = wc.to_json();
  return out;
}

namespace {

Profile step_profile(double alpha) { return Profile::power_shift(1.0, -alpha, 1.0); }

}  // namespace

CmdResult cmd_simulate(const SimulateParams& p) {
  CmdResult out;
  if (p.dim < 1) throw std::invalid_argument("dim must be >= 1");
  TestFunction f;
  double L = 1.0, mu = 0.0;
  if (p.function == "quadratic") {
    f = log_spectrum_quadratic(p.dim, p.eig_lo, p.eig_hi);
    L = p.eig_hi;
    mu = p.eig_lo;
  } else if (p.function == "logcosh") {
    f = log_cosh_sum(p.dim);
  } else {
    throw std::invalid_argument("unknown function '" + p.function + "'");
  }

  Averaging avg = Averaging::None;
  if (p.averaging == "pr") avg = Averaging::PolyakRuppert;
  else if (p.averaging == "weighted") avg = Averaging::Weighted;
  else if (p.averaging == "primal") avg = Averaging::Primal;
  else if (p.averaging != "none") throw std::invalid_argument("unknown averaging '" + p.averaging + "'");

  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(p.dim, p.x0);
  const double x0_dist2 = (x0 - f.x_star).squaredNorm();
  const double f0 = f.value(x0) - f.f_star;
  RecordOptions rec;
  rec.max_records = p.records;

  FlowSpec flow;
  std::function<double(double)> bound;
  const bool want = p.bound == "auto";
  if (p.bound != "auto" && p.bound != "none") throw std::invalid_argument("bound must be auto or none");

  SdeConstants k;
  k.gamma = p.gamma;
  k.trace_sigma = p.sigma2 * p.dim;
  k.L = L;
  k.x0_dist2 = x0_dist2;
  k.f0_gap = f0;

  if (p.flow == "gf") {
    flow = GradientFlow{};
    if (want && p.function == "quadratic") bound = [f0, mu](double t) { return std::exp(-2 * mu * t) * f0; };
  } else if (p.flow == "nagf") {
    flow = NonAutonomousGradientFlow{step_profile(p.alpha)};
  } else if (p.flow == "oscillator") {
    flow = DampedOscillator{2 * std::sqrt(mu)};
  } else if (p.flow == "agf") {
    flow = SecondOrderFlow{Profile::reciprocal(p.b)};
    if (want && p.b == 3.0) {
      const double t0 = std::max(p.t0, 0.0);
      bound = [=](double t) { return (t0 * t0 * f0 + 2 * x0_dist2) / (t * t); };
    }
  } else if (p.flow == "sde") {
    FirstOrderSde s;
    s.h_t = step_profile(p.alpha);
    s.gamma = p.gamma;
    s.averaging = avg;
    if (avg == Averaging::Weighted) s.u_t = step_profile(p.beta);
    flow = s;
    if (want) {
      std::optional<SdeBoundSpec> spec;
      if (avg == Averaging::None) spec = bound_spec_from("step_only", p.alpha, 0, 0, k);
      else if (avg == Averaging::PolyakRuppert) spec = bound_spec_from("pr_averaged", p.alpha, p.beta, 0, k);
      else if (avg == Averaging::Weighted) spec = bound_spec_from("weighted_averaged", p.alpha, p.beta, 0, k);
      if (spec) bound = [s = *spec](double t) { return evaluate_bound(s, t).total(); };
    }
  } else if (p.flow == "sde2") {
    SecondOrderSde s;
    s.beta_t = Profile::reciprocal(p.b);
    s.h_t = step_profile(p.alpha);
    s.gamma = p.gamma;
    s.averaging = avg;
    flow = s;
    if (want && avg == Averaging::None) {
      auto spec = bound_spec_from("acc_diminishing", p.alpha, p.beta, p.b, k);
      bound = [spec](double t) { return evaluate_bound(spec, t).total(); };
    }
  } else {
    throw std::invalid_argument("unknown flow '" + p.flow + "'");
  }

  const bool sde = p.flow == "sde" || p.flow == "sde2";
  const TrajectoryRecord r =
      sde ? simulate_sde(flow, f, p.sigma2 * Eigen::MatrixXd::Identity(p.dim, p.dim), x0, p.t0, p.T, p.dt, p.paths,
                         p.seed, rec)
          : integrate_ode(flow, f, x0, p.t0, p.T, p.dt, rec);

  out.table.columns = {"time", "f_mean", "f_stderr", "bound", "margin"};
  BoundCheck bc;
  if (bound) {
    // bounds may be undefined at the first sample (t = 0 with 1/t forms)
    auto safe = [&](double t) {
      try {
        const double v = bound(t);
        return std::isfinite(v) ? v : kInf;
      } catch (const std::domain_error&) {
        return kInf;
      }
    };
    bc = check_bound(r, safe);
    if (bc.violated) out.exit_code = kExitInfeasible;
  }
  for (size_t i = 0; i < r.times.size(); ++i) {
    const double se = r.is_sde() ? r.f_stderr[i] : 0.0;
    const double bv = bound ? bc.bound_values[i] : kNaN;
    const double m = bound ? bc.margins[i] : kNaN;
    out.table.rows.push_back({r.times[i], r.f_values[i], se, bv, m});
  }
  out.doc = {{"observed", r.observed},
             {"n_paths", r.n_paths},
             {"seed", r.seed},
             {"bound_checked", static_cast<bool>(bound)},
             {"bound_violated", bc.violated},
             {"min_margin", bound ? bc.min_margin : kNaN}};
  if (bound) out.message = std::string(bc.violated ? "bound violated" : "bound holds") + ", min margin " + fmt(bc.min_margin);
  return out;
}

SdeBoundSpec bound_spec_from(const std::string& family, double alpha, double beta, double b,
                             const SdeConstants& constants) {
  SdeBoundSpec s;
  s.constants = constants;
  if (family == "step_only") s.family = StepOnly{alpha};
  else if (family == "pr_averaged") s.family = PrAveraged{alpha, beta};
  else if (family == "weighted_averaged") s.family = WeightedAveraged{alpha, beta};
  else if (family == "acc_diminishing") s.family = AccDiminishing{alpha, b, beta, AccForm::Integral};
  else if (family == "acc_printed") s.family = AccDiminishing{alpha, b, beta, AccForm::Printed};
  else throw std::invalid_argument("unknown bound family '" + family + "'");
  s.validate();
  return s;
}

CmdResult cmd_bounds(const SdeBoundSpec& spec, const std::vector<double>& t_grid) {
  CmdResult out;
  out.table.columns = {"t", "init_term", "variance_term", "total"};
  for (const auto& row : tabulate_bound(spec, t_grid))
    out.table.rows.push_back({row.t, row.terms.init_term, row.terms.variance_term, row.terms.total()});
  out.doc = {{"family", spec.name()}};
  return out;
}

CmdResult cmd_trivial(const std::string& family, const std::vector<double>& t_grid) {
  FamilyData fam;
  if (family == "acc_sde") fam = acc_sde_family_default();
  else if (family == "third_order") fam = third_order_family_default();
  else if (family != "gf") throw std::invalid_argument("unknown family '" + family + "'");
  const TrivialityReport r = detect_trivial_only(fam, FunctionClass(0.0), t_grid);
  CmdResult out;
  out.doc = {{"family", family},
             {"trivial_only", r.trivial_only},
             {"objective", r.objective},
             {"leading_coefficient_max", r.leading_coefficient_max},
             {"grid", r.grid}};
  out.message = family + (r.trivial_only ? ": only the trivial Lyapunov function" : ": nontrivial Lyapunov function found");
  return out;
}

}  // namespace flowcert
