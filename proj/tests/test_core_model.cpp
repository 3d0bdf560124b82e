#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowcert/core_model.hpp"

#include <cmath>
#include <random>

using namespace flowcert;

static InterpolationTriplet trip(double x, double g, double f) {
  InterpolationTriplet t;
  t.x = Eigen::VectorXd::Constant(1, x);
  t.g = Eigen::VectorXd::Constant(1, g);
  t.f = f;
  return t;
}

TEST_CASE("slack: documented points") {
  CHECK(interpolation_slack(FunctionClass(0.0), trip(1, 1, 0.5), trip(0, 0, 0)) == doctest::Approx(0.5));
  CHECK(interpolation_slack(FunctionClass(1.0), trip(0, 0, 0), trip(0, 0, 0)) == 0.0);
  // extremal quadratic 0.05 x^2 is tight in both orders
  const FunctionClass c(0.1);
  CHECK(std::abs(interpolation_slack(c, trip(1, 0.1, 0.05), trip(0, 0, 0))) < 1e-15);
  CHECK(std::abs(interpolation_slack(c, trip(0, 0, 0), trip(1, 0.1, 0.05))) < 1e-15);
}

TEST_CASE("slack: dimension mismatch throws") {
  InterpolationTriplet a = trip(1, 1, 0);
  InterpolationTriplet b;
  b.x = Eigen::VectorXd::Zero(2);
  b.g = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(interpolation_slack(FunctionClass(0.0), a, b), std::invalid_argument);
}

TEST_CASE("slack: reduces to convexity / strongly convex gaps") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 50; ++k) {
    const double xi = U(rng), xj = U(rng), gi = U(rng), gj = U(rng), fi = U(rng), fj = U(rng);
    const double convex_gap = fi - fj - gj * (xi - xj);
    CHECK(interpolation_slack(FunctionClass(0.0), trip(xi, gi, fi), trip(xj, gj, fj)) ==
          doctest::Approx(convex_gap).epsilon(1e-13));
    const double mu = 0.3;
    CHECK(interpolation_slack(FunctionClass(mu), trip(xi, gi, fi), trip(xj, gj, fj)) ==
          doctest::Approx(convex_gap - 0.5 * mu * (xi - xj) * (xi - xj)).epsilon(1e-13));
  }
}

TEST_CASE("slack: nonnegative on samples of random quadratics in the class") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-3, 3);
  const double mus[] = {0.0, 0.1, 1.0};
  const double Ls[] = {kInf, 2.0, 10.0};
  for (double mu : mus)
    for (double L : Ls) {
      const FunctionClass cls(mu, L);
      for (int rep = 0; rep < 20; ++rep) {
        const double hi = std::isfinite(L) ? L / 2 : 5.0;
        std::uniform_real_distribution<double> A(mu / 2, hi);
        const double a = A(rng), b = U(rng);
        std::vector<InterpolationTriplet> pts;
        for (int i = 0; i < 6; ++i) {
          const double x = U(rng);
          pts.push_back(trip(x, 2 * a * x + b, a * x * x + b * x));
        }
        for (const auto& p : pts)
          for (const auto& q : pts) CHECK(interpolation_slack(cls, p, q) >= -1e-12);
      }
    }
}

TEST_CASE("slack: smooth form matches expanded expression") {
  // independent expansion of the smooth inequality on vectors
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  const double mu = 0.5, L = 4.0;
  for (int k = 0; k < 20; ++k) {
    InterpolationTriplet i, j;
    i.x = Eigen::Vector3d(N(rng), N(rng), N(rng));
    j.x = Eigen::Vector3d(N(rng), N(rng), N(rng));
    i.g = Eigen::Vector3d(N(rng), N(rng), N(rng));
    j.g = Eigen::Vector3d(N(rng), N(rng), N(rng));
    i.f = N(rng);
    j.f = N(rng);
    double dx2 = 0, dg2 = 0, dgdx = 0, gjdx = 0;
    for (int d = 0; d < 3; ++d) {
      const double dx = i.x[d] - j.x[d], dg = i.g[d] - j.g[d];
      dx2 += dx * dx;
      dg2 += dg * dg;
      dgdx += dg * dx;
      gjdx += j.g[d] * dx;
    }
    const double expect =
        i.f - j.f - gjdx - (dg2 / L + mu * dx2 - 2 * mu / L * dgdx) / (2 * (1 - mu / L));
    CHECK(interpolation_slack(FunctionClass(mu, L), i, j) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("function class invariants") {
  CHECK_THROWS(FunctionClass(-1.0));
  CHECK_THROWS(FunctionClass(2.0, 1.0));
  CHECK_THROWS(FunctionClass(kInf));
  CHECK_FALSE(FunctionClass(0.1).smooth());
  CHECK(FunctionClass(0.1, 1.0).smooth());
}

TEST_CASE("profiles: documented values") {
  CHECK(eval_profile(Profile::power_shift(1, -0.5, 1), 3.0) == doctest::Approx(0.5));
  CHECK(eval_profile(Profile::reciprocal(3), 2.0) == doctest::Approx(1.5));
  CHECK(eval_profile_derivative(Profile::reciprocal(3), 2.0) == doctest::Approx(-0.75));
  CHECK(eval_profile_derivative(Profile::exponential(1, 0.2), 0.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(eval_profile(Profile::reciprocal(3), 0.0), std::domain_error);
  CHECK_THROWS_AS(eval_profile(Profile::power_shift(1, -0.5, 0), 0.0), std::domain_error);
  CHECK_THROWS_AS(eval_profile(Profile::power_shift(1, 0.5, 0), -1.0), std::domain_error);
}

TEST_CASE("profiles: exact derivatives agree with central differences") {
  const std::vector<Profile> ps = {
      Profile::constant(2.0),
      Profile::power_shift(1.5, -2.0 / 3.0, 1.0),
      Profile::power_shift(2.0, 4.0 / 3.0, 0.0),
      Profile::reciprocal(3.0),
      Profile::exponential(0.7, -0.3),
      Profile::power_shift(1, 2, 0) * Profile::reciprocal(1.5) + Profile::exponential(1, 0.1),
  };
  for (const auto& p : ps)
    for (double t : {0.3, 1.0, 2.5, 7.0}) {
      const double h = 1e-5;
      const double fd = (p.value(t + h) - p.value(t - h)) / (2 * h);
      CHECK(p.derivative(t) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("profiles: antiderivative") {
  const Profile u = Profile::power_shift(1.0, -0.5, 1.0);
  const Profile U = u.antiderivative_from_zero();
  // 2 (sqrt(1+t) - 1)
  CHECK(U.value(3.0) == doctest::Approx(2.0));
  CHECK(U.value(0.0) == doctest::Approx(0.0));
  CHECK(Profile::exponential(2.0, 0.5).antiderivative_from_zero().value(1.0) ==
        doctest::Approx(4.0 * (std::exp(0.5) - 1.0)));
}

TEST_CASE("flow validation") {
  CHECK_THROWS(validate_flow(DampedOscillator{-0.1}));
  FirstOrderSde s;
  s.gamma = 0.0;
  CHECK_THROWS(validate_flow(s));
  s.gamma = 1.0;
  s.averaging = Averaging::Weighted;
  CHECK_THROWS(validate_flow(s));
  s.u_t = Profile::constant(1.0);
  CHECK_NOTHROW(validate_flow(s));
  CHECK(flow_name(GradientFlow{}) == "gradient_flow");
}

TEST_CASE("ansatz validation") {
  LyapunovAnsatz an;
  an.a_terms = {Profile::constant(1)};
  an.quad = ProfileMatrix(2);
  an.state_basis = {"X-x*"};
  CHECK_THROWS(an.validate());
  an.state_basis = {"X-x*", "Xdot"};
  CHECK_NOTHROW(an.validate());
  CHECK_FALSE(an.time_dependent());
  an.quad.set(0, 1, Profile::reciprocal(1));
  CHECK(an.time_dependent());
}
