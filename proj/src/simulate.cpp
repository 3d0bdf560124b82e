#include "flowcert/simulate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flowcert {

TestFunction diagonal_quadratic(const Eigen::VectorXd& diag, const std::optional<Eigen::VectorXd>& x_star) {
  if ((diag.array() < 0.0).any()) throw std::invalid_argument("diagonal_quadratic: negative curvature");
  TestFunction f;
  f.name = "diagonal_quadratic";
  f.dim = static_cast<int>(diag.size());
  f.x_star = x_star.value_or(Eigen::VectorXd::Zero(diag.size()));
  if (f.x_star.size() != diag.size()) throw std::invalid_argument("diagonal_quadratic: x_star size");
  const Eigen::VectorXd D = diag, xs = f.x_star;
  f.value = [D, xs](const Eigen::VectorXd& x) { return 0.5 * (D.array() * (x - xs).array().square()).sum(); };
  f.gradient = [D, xs](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g.array() = D.array() * (x - xs).array(); };
  return f;
}

TestFunction log_spectrum_quadratic(int d, double lo, double hi) {
  if (d < 1 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("log_spectrum_quadratic: bad arguments");
  Eigen::VectorXd diag(d);
  for (int i = 0; i < d; ++i) diag(i) = d == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (d - 1));
  auto f = diagonal_quadratic(diag);
  f.name = "log_spectrum_quadratic";
  return f;
}

TestFunction log_cosh_sum(int d) {
  TestFunction f;
  f.name = "log_cosh_sum";
  f.dim = d;
  f.x_star = Eigen::VectorXd::Zero(d);
  f.value = [](const Eigen::VectorXd& x) {
    double s = 0.0;
    for (double v : x) {
      const double a = std::abs(v);
      s += a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;  // stable log cosh
    }
    return s;
  };
  f.gradient = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = x.array().tanh(); };
  return f;
}

namespace {

enum class Avg { None, Uniform, Weighted, Primal };

struct Dynamics {
  int d = 0;
  bool second = false;
  Avg avg = Avg::None;
  std::function<double(double)> speed;    // multiplies the gradient (and the noise)
  std::function<double(double)> damping;  // second order
  std::function<double(double)> avg_rate;
  double gamma = 0.0;
  bool sde = false;

  int dim_state() const { return d * (1 + (second ? 1 : 0) + (avg != Avg::None ? 1 : 0)); }
  int avg_offset() const { return second ? 2 * d : d; }
};

std::function<double(double)> of(const Profile& p) {
  return [p](double t) { return p.value(t); };
}
std::function<double(double)> constant_fn(double c) {
  return [c](double) { return c; };
}

void require_domain(const Profile& p, double t, const char* what) {
  if (!p.in_domain(t))
    throw std::invalid_argument(std::string(what) + " " + p.describe() + " undefined at t0 = " + std::to_string(t) +
                                "; start at t0 >= dt");
}

Avg averaging_of(Averaging a) {
  switch (a) {
    case Averaging::None:
      return Avg::None;
    case Averaging::PolyakRuppert:
      return Avg::Uniform;
    case Averaging::Weighted:
      return Avg::Weighted;
    case Averaging::Primal:
      return Avg::Primal;
  }
  return Avg::None;
}

Dynamics make_dynamics(const FlowSpec& flow, int d, double& t0, double dt) {
  Dynamics dy;
  dy.d = d;
  dy.speed = constant_fn(1.0);
  dy.damping = constant_fn(0.0);
  dy.avg_rate = constant_fn(0.0);
  std::visit(
      [&](const auto& fl) {
        using T = std::decay_t<decltype(fl)>;
        if constexpr (std::is_same_v<T, GradientFlow>) {
        } else if constexpr (std::is_same_v<T, NonAutonomousGradientFlow>) {
          require_domain(fl.alpha, t0, "speed");
          dy.speed = of(fl.alpha);
        } else if constexpr (std::is_same_v<T, DampedOscillator>) {
          dy.second = true;
          dy.damping = constant_fn(fl.beta);
        } else if constexpr (std::is_same_v<T, SecondOrderFlow>) {
          dy.second = true;
          require_domain(fl.beta_t, t0, "damping");
          dy.damping = of(fl.beta_t);
        } else if constexpr (std::is_same_v<T, FirstOrderSde>) {
          dy.sde = true;
          dy.gamma = fl.gamma;
          dy.avg = averaging_of(fl.averaging);
          if (dy.avg != Avg::None) t0 = std::max(t0, dt);
          require_domain(fl.h_t, t0, "step size");
          dy.speed = of(fl.h_t);
          if (dy.avg == Avg::Weighted) {
            if (!fl.u_t) throw std::invalid_argument("weighted averaging needs u_t");
            const Profile u = *fl.u_t;
            const Profile U = u.antiderivative_from_zero();
            dy.avg_rate = [u, U](double t) { return u.value(t) / U.value(t); };
          } else if (dy.avg != Avg::None) {
            dy.avg_rate = [](double t) { return 1.0 / t; };
          }
        } else if constexpr (std::is_same_v<T, SecondOrderSde>) {
          dy.sde = true;
          dy.second = true;
          dy.gamma = fl.gamma;
          dy.avg = averaging_of(fl.averaging);
          if (dy.avg == Avg::Weighted || dy.avg == Avg::Primal)
            throw std::invalid_argument("second-order SDE supports no averaging or Polyak-Ruppert averaging");
          if (dy.avg != Avg::None) t0 = std::max(t0, dt);
          require_domain(fl.beta_t, t0, "damping");
          require_domain(fl.h_t, t0, "step size");
          dy.damping = of(fl.beta_t);
          dy.speed = of(fl.h_t);
          if (dy.avg != Avg::None) dy.avg_rate = [](double t) { return 1.0 / t; };
        }
      },
      flow);
  return dy;
}

struct Schedule {
  double t0 = 0.0;
  long n_steps = 0;
  std::vector<long> rec_steps;
};

Schedule make_schedule(double t0, double T, double dt, const RecordOptions& rec) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(T > t0)) throw std::invalid_argument("t_span must have T > t0");
  Schedule s;
  s.t0 = t0;
  s.n_steps = std::max(1L, std::lround((T - t0) / dt));
  if (!rec.record_times.empty()) {
    for (double r : rec.record_times) {
      const long k = std::lround((r - t0) / dt);
      if (k >= 0 && k <= s.n_steps) s.rec_steps.push_back(k);
    }
    s.rec_steps.push_back(0);
  } else {
    const long stride = std::max(1L, s.n_steps / std::max(1, rec.max_records));
    for (long k = 0; k <= s.n_steps; k += stride) s.rec_steps.push_back(k);
    s.rec_steps.push_back(s.n_steps);
  }
  std::sort(s.rec_steps.begin(), s.rec_steps.end());
  s.rec_steps.erase(std::unique(s.rec_steps.begin(), s.rec_steps.end()), s.rec_steps.end());
  return s;
}

Eigen::VectorXd initial_state(const Dynamics& dy, const Eigen::VectorXd& x0, const RecordOptions& rec) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(dy.dim_state());
  z.head(dy.d) = x0;
  if (dy.second && rec.v0) {
    if (rec.v0->size() != dy.d) throw std::invalid_argument("v0 dimension mismatch");
    z.segment(dy.d, dy.d) = *rec.v0;
  }
  if (dy.avg != Avg::None) z.segment(dy.avg_offset(), dy.d) = x0;
  return z;
}

double observed_gap(const Dynamics& dy, const TestFunction& f, const Eigen::VectorXd& z) {
  const Eigen::VectorXd pt = dy.avg != Avg::None ? Eigen::VectorXd(z.segment(dy.avg_offset(), dy.d))
                                                 : Eigen::VectorXd(z.head(dy.d));
  return f.value(pt) - f.f_star;
}

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline void normal_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t pair, double& z0,
                        double& z1) {
  std::uint64_t h = mix64(mix64(mix64(mix64(seed) ^ path) ^ step) ^ pair);
  const std::uint64_t h2 = mix64(h);
  const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  z0 = r * std::cos(th);
  z1 = r * std::sin(th);
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t index) {
  double a, b;
  normal_pair(seed, path, step, index / 2, a, b);
  return index % 2 == 0 ? a : b;
}

TrajectoryRecord integrate_ode(const FlowSpec& flow, const TestFunction& f, const Eigen::VectorXd& x0, double t0,
                               double T, double dt, const RecordOptions& rec) {
  if (x0.size() != f.dim) throw std::invalid_argument("integrate_ode: x0 dimension mismatch");
  Dynamics dy = make_dynamics(flow, f.dim, t0, dt);
  const Schedule sc = make_schedule(t0, T, dt, rec);
  const int d = dy.d;
  Eigen::VectorXd g(d);

  auto drift = [&](double t, const Eigen::VectorXd& z, Eigen::VectorXd& out) {
    out.resize(z.size());
    const auto X = z.head(d);
    if (dy.avg == Avg::Primal) {
      f.gradient(z.segment(dy.avg_offset(), d), g);
    } else {
      f.gradient(X, g);
    }
    const double s = dy.speed(t);
    if (dy.second) {
      out.head(d) = z.segment(d, d);
      out.segment(d, d) = -dy.damping(t) * z.segment(d, d) - s * g;
    } else {
      out.head(d) = -s * g;
    }
    if (dy.avg != Avg::None) out.segment(dy.avg_offset(), d) = dy.avg_rate(t) * (X - z.segment(dy.avg_offset(), d));
  };

  TrajectoryRecord out;
  out.dt = dt;
  out.observed = dy.avg != Avg::None ? "Xbar" : "X";
  Eigen::VectorXd z = initial_state(dy, x0, rec), k1, k2, k3, k4;
  size_t next = 0;
  for (long k = 0;; ++k) {
    const double t = sc.t0 + static_cast<double>(k) * dt;
    if (next < sc.rec_steps.size() && sc.rec_steps[next] == k) {
      out.times.push_back(t);
      out.states.push_back(z);
      out.f_values.push_back(observed_gap(dy, f, z));
      ++next;
    }
    if (k == sc.n_steps) break;
    drift(t, z, k1);
    drift(t + 0.5 * dt, z + 0.5 * dt * k1, k2);
    drift(t + 0.5 * dt, z + 0.5 * dt * k2, k3);
    drift(t + dt, z + dt * k3, k4);
    z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!z.allFinite())
      throw std::runtime_error("integrate_ode: non-finite state at t = " + std::to_string(t + dt));
  }
  return out;
}

TrajectoryRecord simulate_sde(const FlowSpec& flow, const TestFunction& f, const Eigen::MatrixXd& Sigma,
                              const Eigen::VectorXd& x0, double t0, double T, double dt, int n_paths,
                              std::uint64_t seed, const RecordOptions& rec, bool parallel) {
  if (!std::holds_alternative<FirstOrderSde>(flow) && !std::holds_alternative<SecondOrderSde>(flow))
    throw std::invalid_argument("simulate_sde: needs an SDE flow, got " + flow_name(flow));
  if (n_paths < 1) throw std::invalid_argument("simulate_sde: n_paths >= 1");
  if (x0.size() != f.dim) throw std::invalid_argument("simulate_sde: x0 dimension mismatch");
  if (Sigma.rows() != f.dim || Sigma.cols() != f.dim) throw std::invalid_argument("simulate_sde: Sigma dimension");
  {
    // gamma = 0 is allowed here (noiseless degeneration); everything else as usual
    FlowSpec probe = flow;
    std::visit(
        [](auto& fl) {
          if constexpr (requires { fl.gamma; }) {
            if (fl.gamma < 0.0) throw std::invalid_argument("simulate_sde: gamma >= 0");
            fl.gamma = 1.0;
          }
        },
        probe);
    validate_flow(probe);
  }

  Dynamics dy = make_dynamics(flow, f.dim, t0, dt);
  const Schedule sc = make_schedule(t0, T, dt, rec);
  const int d = dy.d, dz = dy.dim_state();
  const auto n_rec = sc.rec_steps.size();

  // Sigma = S S^T, S with one column per positive eigenvalue
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sigma + Sigma.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("simulate_sde: Sigma not PSD");
  std::vector<int> cols;
  for (int i = 0; i < d; ++i)
    if (es.eigenvalues()(i) > 0.0) cols.push_back(i);
  const int r = static_cast<int>(cols.size());
  Eigen::MatrixXd S(d, r);
  for (int j = 0; j < r; ++j) S.col(j) = es.eigenvectors().col(cols[j]) * std::sqrt(es.eigenvalues()(cols[j]));
  const double sq = std::sqrt(dy.gamma * dt);
  const bool noisy = r > 0 && dy.gamma > 0.0;

  std::vector<double> spd(sc.n_steps), damp(sc.n_steps), arate(sc.n_steps);
  for (long k = 0; k < sc.n_steps; ++k) {
    const double t = sc.t0 + static_cast<double>(k) * dt;
    spd[k] = dy.speed(t);
    damp[k] = dy.damping(t);
    arate[k] = dy.avg_rate(t);
  }

  constexpr int kBlock = 32;
  const int n_blocks = (n_paths + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> bsum(n_blocks), bsum2(n_blocks);
  std::vector<Eigen::MatrixXd> bstate(n_blocks);
  std::vector<int> bad(n_blocks, 0);

  auto run_block = [&](int b) {
    std::vector<double> s1(n_rec, 0.0), s2(n_rec, 0.0);
    Eigen::MatrixXd st = Eigen::MatrixXd::Zero(dz, static_cast<Eigen::Index>(n_rec));
    Eigen::VectorXd z(dz), g(d), xi(r), noise(d), xold(d);
    const int p_end = std::min(n_paths, (b + 1) * kBlock);
    for (int p = b * kBlock; p < p_end; ++p) {
      z = initial_state(dy, x0, rec);
      size_t next = 0;
      for (long k = 0;; ++k) {
        if (next < n_rec && sc.rec_steps[next] == k) {
          const double fv = observed_gap(dy, f, z);
          if (!std::isfinite(fv)) {
            bad[b] = 1;
            return;
          }
          s1[next] += fv;
          s2[next] += fv * fv;
          st.col(static_cast<Eigen::Index>(next)) += z;
          ++next;
        }
        if (k == sc.n_steps) break;
        if (dy.avg == Avg::Primal) {
          f.gradient(z.segment(dy.avg_offset(), d), g);
        } else {
          f.gradient(z.head(d), g);
        }
        const double s = spd[k];
        if (noisy) {
          for (int i = 0; i < r; i += 2) {
            double a, c;
            normal_pair(seed, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(k),
                        static_cast<std::uint64_t>(i / 2), a, c);
            xi(i) = a;
            if (i + 1 < r) xi(i + 1) = c;
          }
          noise.noalias() = (s * sq) * (S * xi);
        }
        xold = z.head(d);
        if (dy.second) {
          auto V = z.segment(d, d);
          z.head(d) += dt * V;
          V = V - dt * (damp[k] * V + s * g);
          if (noisy) V += noise;
        } else {
          z.head(d) -= (dt * s) * g;
          if (noisy) z.head(d) += noise;
        }
        if (dy.avg != Avg::None) {
          auto Xb = z.segment(dy.avg_offset(), d);
          Xb += (dt * arate[k]) * (xold - Xb);
        }
      }
    }
    bsum[b] = std::move(s1);
    bsum2[b] = std::move(s2);
    bstate[b] = std::move(st);
  };

  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    for (int b = 0; b < n_blocks; ++b) run_block(b);
  }
  for (int b = 0; b < n_blocks; ++b)
    if (bad[b]) throw std::runtime_error("simulate_sde: non-finite ensemble member in block " + std::to_string(b));

  TrajectoryRecord out;
  out.seed = seed;
  out.n_paths = n_paths;
  out.dt = dt;
  out.observed = dy.avg != Avg::None ? "Xbar" : "X";
  const double n = n_paths;
  for (size_t i = 0; i < n_rec; ++i) {
    double s1 = 0.0, s2 = 0.0;
    Eigen::VectorXd st = Eigen::VectorXd::Zero(dz);
    for (int b = 0; b < n_blocks; ++b) {
      s1 += bsum[b][i];
      s2 += bsum2[b][i];
      st += bstate[b].col(static_cast<Eigen::Index>(i));
    }
    const double mean = s1 / n;
    const double var = n > 1 ? std::max(0.0, (s2 - n * mean * mean) / (n - 1)) : 0.0;
    out.times.push_back(sc.t0 + static_cast<double>(sc.rec_steps[i]) * dt);
    out.states.push_back(st / n);
    out.f_values.push_back(mean);
    out.f_stderr.push_back(std::sqrt(var / n));
  }
  return out;
}

BoundCheck check_bound(const TrajectoryRecord& rec, const std::function<double(double)>& bound, double ode_tol) {
  BoundCheck bc;
  for (size_t i = 0; i < rec.times.size(); ++i) {
    const double bv = bound(rec.times[i]);
    const double m = bv - rec.f_values[i];
    bc.bound_values.push_back(bv);
    bc.margins.push_back(m);
    if (m < bc.min_margin) {
      bc.min_margin = m;
      bc.argmin_t = rec.times[i];
    }
    if (rec.is_sde()) {
      const double se = rec.f_stderr[i];
      const double z = se > 0.0 ? m / se : (m >= 0.0 ? kInf : -kInf);
      bc.worst_z = std::min(bc.worst_z, z);
      if (m < -3.0 * se) bc.violated = true;
    } else if (m < -ode_tol) {
      bc.violated = true;
    }
  }
  return bc;
}

double loglog_slope(const TrajectoryRecord& rec, double lo, double hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = 0; i < rec.times.size(); ++i) {
    const double t = rec.times[i], fv = rec.f_values[i];
    if (t < lo || t > hi || !(fv > 0.0)) continue;
    const double x = std::log(t), y = std::log(fv);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("loglog_slope: fewer than two positive samples in range");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace flowcert
