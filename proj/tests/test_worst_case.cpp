#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowcert/worst_case.hpp"
#include "oracle.hpp"

#include <cmath>
#include <random>

using namespace flowcert;

namespace {

// f_i >= f_j + <g_j, x_i - x_j> + mu/2 |x_i - x_j|^2
double slack(double mu, const InterpolationTriplet& i, const InterpolationTriplet& j) {
  const Eigen::VectorXd d = i.x - j.x;
  return i.f - j.f - j.g.dot(d) - 0.5 * mu * d.squaredNorm();
}

InterpolationTriplet trip(double x, double g, double f) {
  return {Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, g), f};
}

}  // namespace

TEST_CASE("gradient flow worst case at mu = 0.1 is mu/2 x^2") {
  const double mu = 0.1;
  auto wc = extract_worst_case(GradientFlow{}, FunctionClass(mu), 2 * mu);
  REQUIRE(wc.triplets.size() == 2);
  CHECK(wc.rank == 1);
  CHECK(wc.interpolant_samples.size() == 101);

  auto ev = oracle::jacobi_eigenvalues(oracle::to_mat(wc.gram));
  CHECK(ev.front() >= -1e-8);

  const auto& xt = wc.triplets[0];
  CHECK(xt.f == doctest::Approx(1.0).epsilon(1e-8));  // V = 1
  CHECK(std::abs(xt.g(0) - mu * xt.x(0)) <= 1e-6);
  CHECK(std::abs(xt.f - 0.5 * mu * xt.x(0) * xt.x(0)) <= 1e-6);

  double worst = 0.0;
  for (auto [x, fx] : wc.interpolant_samples) worst = std::max(worst, std::abs(fx - 0.05 * x * x));
  CHECK(worst <= 1e-6);
  // grid is symmetric about x*
  CHECK(wc.interpolant_samples.front().first == doctest::Approx(-wc.interpolant_samples.back().first));

  for (size_t i = 0; i < 2; ++i)
    for (size_t j = 0; j < 2; ++j)
      if (i != j) CHECK(slack(mu, wc.triplets[i], wc.triplets[j]) >= -1e-7);
}

TEST_CASE("factorization round trip") {
  auto wc = extract_worst_case(GradientFlow{}, FunctionClass(0.3), 0.6);
  Eigen::MatrixXd Y = gram_factor(wc.gram);
  CHECK((Y.transpose() * Y - wc.gram).cwiseAbs().maxCoeff() <= 1e-8);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd B(2, 4);
    for (int i = 0; i < B.size(); ++i) B(i) = nd(rng);
    Eigen::MatrixXd G = B.transpose() * B;
    Eigen::MatrixXd F = gram_factor(G);
    CHECK(F.rows() == 2);
    CHECK((F.transpose() * F - G).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("reconstructed instance attains the rate") {
  for (double mu : {0.05, 0.1, 0.5}) {
    auto wc = extract_worst_case(GradientFlow{}, FunctionClass(mu), 2 * mu);
    const auto& tri = wc.triplets;
    const Eigen::VectorXd x0 = tri[0].x;
    // V = f - f*, d/dt V = -|grad f|^2 along the flow; gradient by central differences
    const double h = 1e-5;
    Eigen::VectorXd grad(x0.size());
    for (int k = 0; k < x0.size(); ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(x0.size());
      e(k) = h;
      grad(k) = (eval_interpolant(tri, mu, x0 + e) - eval_interpolant(tri, mu, x0 - e)) / (2 * h);
    }
    const double V = eval_interpolant(tri, mu, x0);
    const double dV = -grad.squaredNorm();
    CHECK(std::abs(dV + 2 * mu * V) <= 1e-4 * 2 * mu * V);
  }
}

TEST_CASE("extract_worst_case errors") {
  CHECK_THROWS_AS(extract_worst_case(GradientFlow{}, FunctionClass(0.1), 0.25), std::runtime_error);
  CHECK_THROWS_AS(extract_worst_case(DampedOscillator{0.2}, FunctionClass(0.01), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(extract_worst_case(GradientFlow{}, FunctionClass(0.1, 1.0), 0.2), std::invalid_argument);
}

TEST_CASE("build_interpolant examples") {
  const FunctionClass cls(0.1);
  {  // two points of 0.05 x^2
    auto s = build_interpolant({trip(0, 0, 0), trip(1, 0.1, 0.05)}, cls);
    CHECK(s.front().first == doctest::Approx(-1.0));
    CHECK(s.back().first == doctest::Approx(1.0));
    for (auto [x, fx] : s) CHECK(fx == doctest::Approx(0.05 * x * x).epsilon(1e-12));
  }
  {  // single triplet
    auto s = build_interpolant({trip(0, 0, 0)}, cls, 11);
    CHECK(s.size() == 11);
    for (auto [x, fx] : s) CHECK(fx == doctest::Approx(0.05 * x * x));
  }
  CHECK_THROWS_AS(build_interpolant({trip(0, 0, 0), trip(1, 0, 0)}, cls), std::invalid_argument);
  CHECK_THROWS_AS(build_interpolant({}, cls), std::invalid_argument);
  CHECK_THROWS_AS(build_interpolant({trip(0, 0, 0)}, FunctionClass(0.1, 2.0)), std::invalid_argument);
}

TEST_CASE("interpolant is mu-strongly convex and matches triplets") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ud(-2, 2);
  const double mu = 0.2;
  for (int trial = 0; trial < 20; ++trial) {
    // samples of 1/2 x^T D x + b^T x with D >= mu I are interpolable
    Eigen::Vector2d D(mu + std::abs(ud(rng)), mu + std::abs(ud(rng))), b(ud(rng), ud(rng));
    std::vector<InterpolationTriplet> tr;
    for (int i = 0; i < 4; ++i) {
      Eigen::Vector2d x(ud(rng), ud(rng));
      Eigen::VectorXd g = D.cwiseProduct(x) + b;
      tr.push_back({x, g, 0.5 * x.dot(D.cwiseProduct(x)) + b.dot(x)});
    }
    for (const auto& t : tr) CHECK(eval_interpolant(tr, mu, t.x) == doctest::Approx(t.f).epsilon(1e-12));
    for (int k = 0; k < 50; ++k) {
      Eigen::Vector2d p(ud(rng), ud(rng)), q(ud(rng), ud(rng));
      const double mid = eval_interpolant(tr, mu, 0.5 * (p + q));
      const double chord = 0.5 * (eval_interpolant(tr, mu, p) + eval_interpolant(tr, mu, q));
      CHECK(mid <= chord - mu / 8 * (p - q).squaredNorm() + 1e-12);
    }
    auto s = build_interpolant(tr, FunctionClass(mu), 21);
    CHECK(s.size() == 21);
    CHECK(s.front().first == doctest::Approx(-s.back().first));
  }
}

TEST_CASE("worst case json") {
  auto wc = extract_worst_case(GradientFlow{}, FunctionClass(0.1), 0.2);
  json j = wc.to_json();
  CHECK(j["rank"] == 1);
  CHECK(j["samples"].size() == 101);
  CHECK(matrix_from_json(j["gram"]).isApprox(wc.gram));
}
