// flowcert: rate / lyapunov / verify / worstcase / simulate / bounds / trivial-check
#include "flowcert/cli_report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace flowcert;

namespace {

struct Grid {
  std::vector<double> values;
  double lo = 0, hi = 0;
  int n = 0;
  bool log = true;

  std::vector<double> resolve() const {
    if (!values.empty()) return values;
    if (n < 1) throw std::invalid_argument("grid: give explicit values or n >= 1");
    if (n == 1) return {lo};
    if (log) return log_grid(lo, hi, n);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
    return out;
  }
};

void add_grid(CLI::App* app, Grid& g, const std::string& name, double lo, double hi, int n) {
  g.lo = lo;
  g.hi = hi;
  g.n = n;
  app->add_option("--" + name, g.values, "explicit " + name + " values");
  app->add_option("--" + name + "-lo", g.lo, name + " grid lower end")->capture_default_str();
  app->add_option("--" + name + "-hi", g.hi, name + " grid upper end")->capture_default_str();
  app->add_option("--" + name + "-n", g.n, name + " grid size")->capture_default_str();
}

// CLI11's resolved config (TOML) as flat key/value pairs
Meta resolved_config(const CLI::App& app, const std::string& command) {
  Meta meta;
  std::istringstream is(app.config_to_str(true, false));
  std::string line, section;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      section = line.substr(1, line.find(']') - 1);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(' '), b = s.find_last_not_of(' ');
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    const auto dot = key.find('.');
    if (dot != std::string::npos && key.substr(0, dot) != command) continue;
    meta.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return meta;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) return false;
  os << text;
  return static_cast<bool>(os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov certificates and rates for optimization flows"};
  app.set_config("--config", "", "TOML config file; [subcommand] sections hold subcommand options");
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_csv, out_json;
  app.add_option("-o,--out", out_csv, "CSV output path (default stdout)");
  app.add_option("--json", out_json, "JSON output path");

  // rate
  auto* rate = app.add_subcommand("rate", "bisect the certified rate over a mu grid");
  std::string rate_flow = "gf";
  bool psd = false;
  double tol = 1e-6;
  Grid rate_mu;
  rate->add_option("--flow", rate_flow, "gf or oscillator")->capture_default_str();
  rate->add_flag("--psd", psd, "enforce P >= 0");
  rate->add_option("--tol", tol, "bisection tolerance")->capture_default_str();
  add_grid(rate, rate_mu, "mu", 1e-3, 1.0, 20);

  // lyapunov
  auto* lyap = app.add_subcommand("lyapunov", "oscillator Lyapunov parameters at 4/3 sqrt(mu)");
  Grid lyap_mu;
  add_grid(lyap, lyap_mu, "mu", 1e-3, 1.0, 20);

  // verify
  auto* verify = app.add_subcommand("verify", "check a certificate file");
  std::string cert_path;
  Grid verify_t;
  verify->add_option("certificate", cert_path, "certificate JSON")->required();
  add_grid(verify, verify_t, "t", 1e-3, 1e3, 0);

  // worstcase
  auto* worst = app.add_subcommand("worstcase", "worst-case function reconstruction");
  std::string wc_flow = "gf";
  double wc_mu = 0.1, wc_tau = -1;
  int wc_n = 101;
  worst->add_option("--flow", wc_flow, "gf")->capture_default_str();
  worst->add_option("--mu", wc_mu)->capture_default_str();
  worst->add_option("--tau", wc_tau, "rate (default 2 mu)");
  worst->add_option("--points", wc_n)->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "integrate a flow and check its bound");
  SimulateParams sp;
  sim->add_option("--flow", sp.flow, "gf, nagf, oscillator, agf, sde, sde2")->capture_default_str();
  sim->add_option("--averaging", sp.averaging, "none, pr, weighted, primal")->capture_default_str();
  sim->add_option("--alpha", sp.alpha, "step exponent, h = (t+1)^-alpha")->capture_default_str();
  sim->add_option("--beta", sp.beta, "averaging / Lyapunov exponent")->capture_default_str();
  sim->add_option("--b", sp.b, "damping b/t")->capture_default_str();
  sim->add_option("--function", sp.function, "quadratic or logcosh")->capture_default_str();
  sim->add_option("--dim", sp.dim)->capture_default_str();
  sim->add_option("--eig-lo", sp.eig_lo)->capture_default_str();
  sim->add_option("--eig-hi", sp.eig_hi)->capture_default_str();
  sim->add_option("--x0", sp.x0, "initial point, all coordinates")->capture_default_str();
  sim->add_option("--t0", sp.t0)->capture_default_str();
  sim->add_option("--T", sp.T)->capture_default_str();
  sim->add_option("--dt", sp.dt)->capture_default_str();
  sim->add_option("--paths", sp.paths)->capture_default_str();
  sim->add_option("--seed", sp.seed)->capture_default_str();
  sim->add_option("--sigma2", sp.sigma2, "Sigma = sigma2 I")->capture_default_str();
  sim->add_option("--gamma", sp.gamma)->capture_default_str();
  sim->add_option("--bound", sp.bound, "auto or none")->capture_default_str();
  sim->add_option("--records", sp.records)->capture_default_str();

  // bounds
  auto* bnd = app.add_subcommand("bounds", "tabulate an SDE bound");
  std::string bfam = "step_only";
  double ba = 0.0, bb = 0.5, bdamp = 3.0;
  SdeConstants bk;
  Grid bt;
  bnd->add_option("--family", bfam, "step_only, pr_averaged, weighted_averaged, acc_diminishing, acc_printed")
      ->capture_default_str();
  bnd->add_option("--alpha", ba)->capture_default_str();
  bnd->add_option("--beta", bb)->capture_default_str();
  bnd->add_option("--b", bdamp)->capture_default_str();
  bnd->add_option("--gamma", bk.gamma)->capture_default_str();
  bnd->add_option("--trace-sigma", bk.trace_sigma)->capture_default_str();
  bnd->add_option("--L", bk.L)->capture_default_str();
  bnd->add_option("--x0-dist2", bk.x0_dist2)->capture_default_str();
  add_grid(bnd, bt, "t", 1.0, 1e4, 41);

  // trivial-check
  auto* triv = app.add_subcommand("trivial-check", "does only V = 0 satisfy the LMI family?");
  std::string tfam = "acc_sde";
  Grid tt;
  triv->add_option("--family", tfam, "acc_sde, third_order, gf")->capture_default_str();
  add_grid(triv, tt, "t", 0.1, 10.0, 9);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CmdResult res;
  try {
    if (*rate) {
      BisectionOptions bo;
      bo.tol = tol;
      res = cmd_rate(rate_flow, rate_mu.resolve(), psd, bo);
    } else if (*lyap) {
      res = cmd_lyapunov(lyap_mu.resolve());
    } else if (*verify) {
      std::ifstream is(cert_path);
      if (!is) {
        std::cerr << "cannot read " << cert_path << "\n";
        return kExitIo;
      }
      json j;
      try {
        is >> j;
      } catch (const json::exception& e) {
        std::cerr << "bad certificate JSON: " << e.what() << "\n";
        return kExitIo;
      }
      std::optional<std::vector<double>> grid;
      if (!verify_t.values.empty() || verify_t.n > 0) grid = verify_t.resolve();
      res = cmd_verify(j, grid);
    } else if (*worst) {
      res = cmd_worstcase(wc_flow, wc_mu, wc_tau < 0 ? 2 * wc_mu : wc_tau, wc_n);
    } else if (*sim) {
      res = cmd_simulate(sp);
    } else if (*bnd) {
      res = cmd_bounds(bound_spec_from(bfam, ba, bb, bdamp, bk), bt.resolve());
    } else if (*triv) {
      res = cmd_trivial(tfam, tt.resolve());
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::runtime_error& e) {
    std::cerr << "not certified: " << e.what() << "\n";
    return kExitInfeasible;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Meta config = resolved_config(app, command);
  config.insert(config.begin(), {"command", command});
  res.table.meta.insert(res.table.meta.begin(), config.begin(), config.end());
  json doc = res.doc;
  doc["config"] = json::object();
  for (const auto& [k, v] : config) {
    // TOML scalars and arrays are valid JSON here; anything else stays text
    json parsed = json::parse(v, nullptr, false);
    doc["config"][k] = parsed.is_discarded() ? json(v) : parsed;
  }
  doc["exit_code"] = res.exit_code;

  if (!res.table.columns.empty()) {
    if (out_csv.empty()) {
      std::cout << res.table.to_string();
    } else if (!write_file(out_csv, res.table.to_string())) {
      std::cerr << "cannot write " << out_csv << "\n";
      return kExitIo;
    }
  } else if (out_json.empty()) {
    std::cout << doc.dump(2) << "\n";
  }
  if (!out_json.empty() && !write_file(out_json, doc.dump(2) + "\n")) {
    std::cerr << "cannot write " << out_json << "\n";
    return kExitIo;
  }
  if (!res.message.empty()) std::cerr << res.message << (res.message.back() == '\n' ? "" : "\n");
  return res.exit_code;
}
