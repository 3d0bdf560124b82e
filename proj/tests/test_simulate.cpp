#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowcert/simulate.hpp"

#include <cmath>
#include <cstring>

using namespace flowcert;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

// x'' + beta x' + lam x = 0, x(0) = 1, x'(0) = 0, underdamped
double oscillator_exact(double beta, double lam, double t) {
  const double w = std::sqrt(lam - beta * beta / 4);
  return std::exp(-beta * t / 2) * (std::cos(w * t) + beta / (2 * w) * std::sin(w * t));
}

bool same_bits(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.f_values.size() != b.f_values.size()) return false;
  if (std::memcmp(a.f_values.data(), b.f_values.data(), a.f_values.size() * sizeof(double)) != 0) return false;
  if (std::memcmp(a.f_stderr.data(), b.f_stderr.data(), a.f_stderr.size() * sizeof(double)) != 0) return false;
  for (size_t i = 0; i < a.states.size(); ++i)
    if (std::memcmp(a.states[i].data(), b.states[i].data(), a.states[i].size() * sizeof(double)) != 0) return false;
  return true;
}

}  // namespace

TEST_CASE("gradient flow on 0.05 x^2") {
  auto f = diagonal_quadratic(vec({0.1}));
  auto r = integrate_ode(GradientFlow{}, f, vec({1.0}), 0.0, 10.0, 1e-2);
  CHECK(r.times.front() == 0.0);
  CHECK(r.times.back() == doctest::Approx(10.0));
  const double f0 = 0.05;
  CHECK(std::abs(r.f_values.back() - std::exp(-2.0) * f0) <= 1e-6);
  auto bc = check_bound(r, [&](double t) { return std::exp(-0.2 * t) * f0; });
  CHECK(!bc.violated);
  CHECK(bc.min_margin >= -1e-6);
  CHECK(r.n_paths == 0);

  auto still = integrate_ode(GradientFlow{}, f, vec({0.0}), 0.0, 5.0, 0.1);
  for (size_t i = 0; i < still.times.size(); ++i) {
    CHECK(still.states[i](0) == 0.0);
    CHECK(still.f_values[i] == 0.0);
  }
}

TEST_CASE("RK4 order on the damped oscillator") {
  auto f = diagonal_quadratic(vec({1.0}));
  double err[2];
  int k = 0;
  for (double dt : {0.1, 0.05}) {
    auto r = integrate_ode(DampedOscillator{0.4}, f, vec({1.0}), 0.0, 10.0, dt);
    err[k++] = std::abs(r.states.back()(0) - oscillator_exact(0.4, 1.0, 10.0));
  }
  CHECK(err[0] / err[1] >= 12.0);
  CHECK(err[1] <= 1e-6);
}

TEST_CASE("oscillator Lyapunov stays under its envelope") {
  const double mu = 0.04, sm = 0.2;
  auto f = diagonal_quadratic(vec({mu, 0.5, 2.0}));
  const Eigen::VectorXd x0 = vec({1.0, -2.0, 0.5});
  auto r = integrate_ode(DampedOscillator{2 * sm}, f, x0, 0.0, 100.0, 1e-2);
  auto V = [&](const Eigen::VectorXd& z) {
    const auto X = z.head(3), Xd = z.segment(3, 3);
    return f.value(X) + 4 * mu / 9 * X.squaredNorm() + 2 * (2 * sm / 3) * X.dot(Xd) + 0.5 * Xd.squaredNorm();
  };
  const double V0 = V(r.states.front());
  double worst = kInf;
  for (size_t i = 0; i < r.times.size(); ++i)
    worst = std::min(worst, std::exp(-4.0 / 3.0 * sm * r.times[i]) * V0 - V(r.states[i]));
  CHECK(worst >= -1e-6);
}

TEST_CASE("Su flow needs t0 >= dt and obeys its bound") {
  auto f = diagonal_quadratic(vec({0.5, 0.01}));
  SecondOrderFlow su{Profile::reciprocal(3)};
  CHECK_THROWS_AS(integrate_ode(su, f, vec({1, 1}), 0.0, 10.0, 1e-2), std::invalid_argument);
  const double t0 = 1e-2;
  auto r = integrate_ode(su, f, vec({1, 1}), t0, 200.0, 1e-2);
  const double V0 = t0 * t0 * f.value(vec({1, 1})) + 2 * 2.0;
  auto bc = check_bound(r, [&](double t) { return V0 / (t * t); });
  CHECK(!bc.violated);
}

TEST_CASE("averaging identity without noise") {
  auto f = diagonal_quadratic(vec({0.3, 1.0}));
  FirstOrderSde pr;
  pr.averaging = Averaging::PolyakRuppert;
  const double dt = 1e-3, T = 5.0;
  RecordOptions every;
  every.max_records = 1 << 30;
  auto r = integrate_ode(pr, f, vec({1.0, -1.0}), 0.0, T, dt, every);
  CHECK(r.observed == "Xbar");
  CHECK(r.times.front() == doctest::Approx(dt));
  // T Xbar_T = t0 X_t0 + int_t0^T X
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(2);
  for (size_t i = 1; i < r.times.size(); ++i)
    integral += 0.5 * (r.times[i] - r.times[i - 1]) * (r.states[i].head(2) + r.states[i - 1].head(2));
  const Eigen::VectorXd ref = (r.times.front() * r.states.front().head(2) + integral) / r.times.back();
  CHECK((r.states.back().tail(2) - ref).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("noiseless SDE matches the ODE to first order") {
  auto f = diagonal_quadratic(vec({0.5, 2.0}));
  FirstOrderSde sde;
  sde.h_t = Profile::power_shift(1, -0.5, 1);
  sde.gamma = 0.0;
  auto ode = integrate_ode(NonAutonomousGradientFlow{Profile::power_shift(1, -0.5, 1)}, f, vec({1, 1}), 0, 5, 1e-3);
  double err[2];
  int k = 0;
  for (double dt : {2e-3, 1e-3}) {
    auto r = simulate_sde(sde, f, Eigen::MatrixXd::Identity(2, 2), vec({1, 1}), 0, 5, dt, 1, 7);
    err[k++] = std::abs(r.states.back()(0) - ode.states.back()(0));
  }
  CHECK(err[1] <= 1e-3);
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.1));

  SecondOrderSde acc;
  acc.beta_t = Profile::reciprocal(3);
  acc.gamma = 0.0;
  auto su = integrate_ode(SecondOrderFlow{Profile::reciprocal(3)}, f, vec({1, 1}), 1e-3, 5, 1e-3);
  auto em = simulate_sde(acc, f, Eigen::MatrixXd::Identity(2, 2), vec({1, 1}), 1e-3, 5, 1e-4, 1, 7);
  CHECK(std::abs(em.states.back()(0) - su.states.back()(0)) <= 2e-3);
}

TEST_CASE("Ornstein-Uhlenbeck moments") {
  const double mu = 1.0, s2 = 0.25, x0 = 2.0, gamma = 1.0;
  auto f = diagonal_quadratic(vec({mu}));
  FirstOrderSde ou;
  ou.gamma = gamma;
  RecordOptions rec;
  rec.record_times = {0.5, 1.0, 2.0};
  const int n = 4000;
  auto r = simulate_sde(ou, f, Eigen::MatrixXd::Constant(1, 1, s2), vec({x0}), 0, 2.0, 1e-3, n, 2024, rec);
  REQUIRE(r.times.size() == 4);
  for (size_t i = 1; i < r.times.size(); ++i) {
    const double t = r.times[i];
    const double m = x0 * std::exp(-mu * t);
    const double v = gamma * s2 * (1 - std::exp(-2 * mu * t)) / (2 * mu);
    CHECK(std::abs(r.states[i](0) - m) <= 3 * std::sqrt(v / n));
    const double ef = 0.5 * mu * (m * m + v);
    CHECK(std::abs(r.f_values[i] - ef) <= 3 * r.f_stderr[i]);
  }
  CHECK(r.n_paths == n);
  CHECK(r.seed == 2024);
}

TEST_CASE("ensembles are reproducible and thread-independent") {
  auto f = log_spectrum_quadratic(5, 0.01, 1.0);
  FirstOrderSde sde;
  sde.averaging = Averaging::PolyakRuppert;
  sde.h_t = Profile::power_shift(1, -0.5, 1);
  const Eigen::MatrixXd S = 0.1 * Eigen::MatrixXd::Identity(5, 5);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(5);
  auto a = simulate_sde(sde, f, S, x0, 0, 20, 1e-2, 100, 9);
  auto b = simulate_sde(sde, f, S, x0, 0, 20, 1e-2, 100, 9);
  auto c = simulate_sde(sde, f, S, x0, 0, 20, 1e-2, 100, 9, {}, false);
  auto d = simulate_sde(sde, f, S, x0, 0, 20, 1e-2, 100, 10);
  CHECK(same_bits(a, b));
  CHECK(same_bits(a, c));
  CHECK(!same_bits(a, d));
}

TEST_CASE("counter-based normals") {
  double s = 0, s2 = 0, cross = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = counter_normal(1, i / 100, i % 100, 0);
    const double w = counter_normal(1, i / 100, i % 100, 1);
    s += z;
    s2 += z * z;
    cross += z * w;
  }
  CHECK(std::abs(s / n) <= 4 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1) <= 4 * std::sqrt(2.0 / n));
  CHECK(std::abs(cross / n) <= 4 / std::sqrt(n));
  CHECK(counter_normal(5, 1, 2, 3) == counter_normal(5, 1, 2, 3));
  CHECK(counter_normal(5, 1, 2, 3) != counter_normal(5, 1, 3, 3));
}

TEST_CASE("slope for alpha = 2/3 without averaging") {
  auto f = log_spectrum_quadratic(13, 1e-4, 10);
  FirstOrderSde sde;
  sde.h_t = Profile::power_shift(1, -2.0 / 3.0, 1);
  RecordOptions rec;
  for (int i = 0; i <= 40; ++i) rec.record_times.push_back(100 * std::pow(10.0, i / 40.0));
  auto r = simulate_sde(sde, f, 0.01 * Eigen::MatrixXd::Identity(13, 13), Eigen::VectorXd::Ones(13), 0, 1000, 1e-2,
                        64, 1);
  CHECK(loglog_slope(r, 100, 1000) == doctest::Approx(-1.0 / 3.0).epsilon(0.3));
}

TEST_CASE("other averaging schemes run") {
  auto f = diagonal_quadratic(vec({0.2, 1.0}));
  FirstOrderSde w;
  w.averaging = Averaging::Weighted;
  w.u_t = Profile::power_shift(1, -0.5, 1);
  w.h_t = Profile::power_shift(1, -0.5, 1);
  auto rw = simulate_sde(w, f, Eigen::MatrixXd::Identity(2, 2), vec({1, 1}), 0, 10, 1e-2, 8, 3);
  CHECK(rw.f_values.back() < rw.f_values.front());
  FirstOrderSde p;
  p.averaging = Averaging::Primal;
  auto rp = integrate_ode(p, f, vec({1, 1}), 0, 50, 1e-2);
  CHECK(rp.f_values.back() < 1e-2 * rp.f_values.front());
  SecondOrderSde sw;
  sw.beta_t = Profile::reciprocal(3);
  sw.averaging = Averaging::Weighted;
  CHECK_THROWS(simulate_sde(sw, f, Eigen::MatrixXd::Identity(2, 2), vec({1, 1}), 0.01, 1, 1e-2, 1, 1));
}

TEST_CASE("bad inputs and blow-up") {
  auto f = diagonal_quadratic(vec({1e3}));
  CHECK_THROWS_AS(integrate_ode(GradientFlow{}, f, vec({1.0}), 0, 100, 0.1), std::runtime_error);
  FirstOrderSde sde;
  CHECK_THROWS_AS(simulate_sde(sde, f, Eigen::MatrixXd::Identity(1, 1), vec({1.0}), 0, 100, 0.1, 4, 1),
                  std::runtime_error);
  auto g = diagonal_quadratic(vec({1.0}));
  CHECK_THROWS_AS(integrate_ode(GradientFlow{}, g, vec({1.0}), 0, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate_ode(GradientFlow{}, g, vec({1.0, 2.0}), 0, 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(simulate_sde(sde, g, Eigen::MatrixXd::Identity(1, 1), vec({1.0}), 0, 1, 0.1, 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_sde(GradientFlow{}, g, Eigen::MatrixXd::Identity(1, 1), vec({1.0}), 0, 1, 0.1, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_sde(sde, g, -Eigen::MatrixXd::Identity(1, 1), vec({1.0}), 0, 1, 0.1, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("check_bound rules") {
  TrajectoryRecord ode;
  ode.times = {0, 1, 2};
  ode.f_values = {1.0, 0.5, 0.25};
  auto ok = check_bound(ode, [](double t) { return std::pow(0.5, t); });
  CHECK(!ok.violated);
  CHECK(ok.min_margin == 0.0);
  auto bad = check_bound(ode, [](double t) { return std::pow(0.5, t) - (t == 2 ? 1e-5 : 0.0); });
  CHECK(bad.violated);
  CHECK(bad.argmin_t == 2.0);

  TrajectoryRecord sde = ode;
  sde.n_paths = 100;
  sde.f_stderr = {0.01, 0.01, 0.01};
  CHECK(!check_bound(sde, [](double t) { return std::pow(0.5, t) - 0.029; }).violated);
  auto v = check_bound(sde, [](double t) { return std::pow(0.5, t) - 0.031; });
  CHECK(v.violated);
  CHECK(v.worst_z == doctest::Approx(-3.1));
}

TEST_CASE("log cosh test function") {
  auto f = log_cosh_sum(3);
  Eigen::VectorXd g(3);
  const Eigen::VectorXd x = vec({0.3, -2.0, 40.0});
  f.gradient(x, g);
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
    e(i) = 1e-6;
    CHECK(g(i) == doctest::Approx((f.value(x + e) - f.value(x - e)) / 2e-6).epsilon(1e-6));
  }
  CHECK(f.value(vec({0, 0, 0})) == 0.0);
  auto r = integrate_ode(GradientFlow{}, f, x, 0, 50, 1e-2);
  CHECK(r.f_values.back() < 1e-6 + 0.5 * 0.0 + r.f_values.front() * 1e-3);
}
