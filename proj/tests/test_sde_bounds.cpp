#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowcert/sde_bounds.hpp"
#include "oracle.hpp"

#include <cmath>
#include <random>

using namespace flowcert;

namespace {

SdeBoundSpec spec_of(SdeFamily fam, double gamma = 1, double tr = 1, double L = 1, double x0 = 1) {
  SdeBoundSpec s;
  s.family = fam;
  s.constants.gamma = gamma;
  s.constants.trace_sigma = tr;
  s.constants.L = L;
  s.constants.x0_dist2 = x0;
  return s;
}

double slope(const SdeBoundSpec& s, double lo, double hi, bool variance_only) {
  auto v = [&](double t) {
    auto b = evaluate_bound(s, t);
    return variance_only ? b.variance_term : b.total();
  };
  return (std::log(v(hi)) - std::log(v(lo))) / (std::log(hi) - std::log(lo));
}

}  // namespace

TEST_CASE("step_only documented points") {
  auto s = spec_of(StepOnly{0.0});
  auto b = step_only_bound(s, 1.0);
  CHECK(b.variance_term == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.init_term == doctest::Approx(0.5));

  auto z = step_only_bound(spec_of(StepOnly{0.3}, 1, 1, 1, 2.5), 0.0);
  CHECK(z.variance_term == 0.0);
  CHECK(z.init_term == 2.5);
}

TEST_CASE("step_only matches the integral it sums") {
  // gamma Tr / (t+1)^(1-a) * int_0^t (L (s+1)^(1-3a) + 1/2 (s+1)^(-2a)) ds
  for (double a : {0.0, 0.2, 0.5, 0.6, 2.0 / 3.0, 0.8, 0.99}) {
    for (double t : {0.5, 3.0, 40.0}) {
      auto s = spec_of(StepOnly{a}, 0.7, 1.3, 2.0, 1.0);
      const double I = oracle::simpson(
          [&](double u) { return 2.0 * std::pow(u + 1, 1 - 3 * a) + 0.5 * std::pow(u + 1, -2 * a); }, 0, t);
      const double ref = 0.7 * 1.3 / std::pow(t + 1, 1 - a) * I;
      CHECK(step_only_bound(s, t).variance_term == doctest::Approx(ref).epsilon(1e-8));
    }
  }
  // alpha = 1: int_0^t log(s+1)/(s+1)^2 = 1 - (1 + log(t+1))/(t+1)
  for (double t : {2.0, 10.0, 1e3}) {
    auto s = spec_of(StepOnly{1.0}, 1, 1, 3.0, 1);
    const double I = 1 - (1 + std::log1p(t)) / (t + 1);
    const double ref = 1.0 / std::log(t) * (3.0 * I + 0.5 * (1 - 1 / (t + 1)));
    CHECK(step_only_bound(s, t).variance_term == doctest::Approx(ref).epsilon(1e-9));
    CHECK(step_only_bound(s, t).init_term == 1.0);
  }
  CHECK_THROWS_AS(step_only_bound(spec_of(StepOnly{1.0}), 1.0), std::domain_error);
  CHECK_THROWS_AS(step_only_bound(spec_of(StepOnly{0.5}), -1.0), std::domain_error);
}

TEST_CASE("step_only at alpha = 2/3 decays like t^-1/3 up to log t") {
  auto s = spec_of(StepOnly{2.0 / 3.0});
  for (double t : {1e6, 1e8}) {
    const double sl = slope(s, t, 10 * t, false);
    CHECK(sl >= -1.0 / 3.0 - 1e-3);
    CHECK(sl <= -1.0 / 3.0 + 1.0 / std::log(t) + 0.01);
  }
}

TEST_CASE("step_only branches are continuous at alpha = 1" * doctest::should_fail()) {
  for (double t : {2.0, 10.0, 100.0}) {
    const double below = step_only_bound(spec_of(StepOnly{1.0 - 1e-7}), t).total();
    const double at = step_only_bound(spec_of(StepOnly{1.0}), t).total();
    CHECK(std::abs(below - at) <= 1e-4 * std::abs(at));
  }
}

TEST_CASE("pr_averaged bound") {
  {  // constant step, a2 = t
    auto s = spec_of(PrAveraged{0.0, 1.0}, 0.3, 2.0, 1, 4.0);
    for (double t : {1.0, 10.0, 1e4}) {
      auto b = pr_averaged_bound(s, t);
      CHECK(b.init_term == doctest::Approx(4.0 / (2 * t)));
      CHECK(b.variance_term == doctest::Approx(0.5 * 2.0 * 0.3).epsilon(1e-9));
    }
  }
  {  // alpha = beta = 1/2: int_0^t ds / sqrt(s (s+1)) = 2 asinh(sqrt t)
    auto s = spec_of(PrAveraged{0.5, 0.5});
    for (double t : {1.0, 50.0, 1e5}) {
      auto b = pr_averaged_bound(s, t);
      CHECK(b.init_term == doctest::Approx(0.5 / std::sqrt(t)));
      CHECK(b.variance_term == doctest::Approx(std::asinh(std::sqrt(t)) / std::sqrt(t)).epsilon(1e-9));
    }
  }
  {  // generic exponents; s = v^(1/beta) gives a smooth integrand
    const double a = 0.3, be = 0.6;
    auto s = spec_of(PrAveraged{a, be}, 1.5, 0.4, 1, 1);
    const double t = 20.0;
    const double I = oracle::simpson([&](double v) { return std::pow(std::pow(v, 1 / be) + 1, -a) / be; }, 0,
                                     std::pow(t, be));
    CHECK(pr_averaged_bound(s, t).variance_term == doctest::Approx(1.5 / (2 * std::pow(t, be)) * I * 0.4).epsilon(1e-7));
  }
}

TEST_CASE("weighted_averaged bound") {
  const double a = 0.3, be = 0.7, t = 30.0;
  auto s = spec_of(WeightedAveraged{a, be}, 0.8, 1.1, 1, 2.0);
  const double U = oracle::simpson([&](double u) { return std::pow(u + 1, -be); }, 0, t);
  const double UH = oracle::simpson([&](double u) { return std::pow(u + 1, -be - a); }, 0, t);
  auto b = weighted_averaged_bound(s, t);
  CHECK(b.init_term == doctest::Approx(2.0 / (2 * U)).epsilon(1e-9));
  CHECK(b.variance_term == doctest::Approx(0.8 / (4 * U) * UH * 1.1).epsilon(1e-9));
  // alpha = beta = 1/2: int u = 2(sqrt(t+1) - 1), int u h = log(t+1)
  auto h = weighted_averaged_bound(spec_of(WeightedAveraged{0.5, 0.5}), t);
  CHECK(h.variance_term == doctest::Approx(std::log1p(t) / (8 * (std::sqrt(t + 1) - 1))));
}

TEST_CASE("acc_diminishing bound") {
  AccDiminishing printed{1.5, 3.0, 0.5, AccForm::Printed};
  auto b = acc_diminishing_bound(spec_of(printed), 100.0);
  CHECK(b.init_term == doctest::Approx(0.225));
  CHECK(b.variance_term == doctest::Approx(std::log(100.0) / 10).epsilon(1e-12));
  CHECK(b.total() == doctest::Approx(0.225 + 0.46052).epsilon(1e-5));

  // admissibility at b = 3, alpha = 3/2: beta = 2 - alpha = alpha - 1 = 1/2 is the edge
  CHECK_NOTHROW(spec_of(AccDiminishing{1.5, 3.0, 0.5}).validate());
  CHECK_THROWS_AS(spec_of(AccDiminishing{1.5, 3.0, 0.5 + 1e-9}).validate(), std::invalid_argument);

  // integral form against simpson
  auto gen = spec_of(AccDiminishing{1.5, 3.0, 0.5}, 2.0, 0.5, 1, 3.0);
  const double t = 40.0;
  const double I = oracle::simpson([](double s) { return std::sqrt(s) * std::pow(s + 1, -1.5); }, 0, t, 200000);
  auto g = acc_diminishing_bound(gen, t);
  CHECK(g.init_term == doctest::Approx(0.25 / std::sqrt(t) * 3.0));
  CHECK(g.variance_term == doctest::Approx(2.0 / (4 * std::sqrt(t)) * I * 0.5).epsilon(1e-6));

  // beta > alpha - 1: variance slope -(alpha - 1)
  auto slow = spec_of(AccDiminishing{1.2, 3.0, 0.5});
  CHECK(slope(slow, 1e7, 1e8, true) == doctest::Approx(-0.2).epsilon(0.02));

  CHECK_THROWS_AS(spec_of(AccDiminishing{1.4, 3.0, 0.5, AccForm::Printed}).validate(), std::invalid_argument);
}

TEST_CASE("construction-time rejection at the boundaries") {
  const double e = 1e-9;
  CHECK_NOTHROW(spec_of(StepOnly{1.0 - e}).validate());
  CHECK_NOTHROW(spec_of(StepOnly{1.0}).validate());
  CHECK_THROWS_AS(spec_of(StepOnly{1.0 + e}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(spec_of(StepOnly{-e}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(step_only_bound(spec_of(StepOnly{1.5}), 2.0), std::invalid_argument);

  CHECK_NOTHROW(spec_of(PrAveraged{0.5, 0.5 - e}).validate());
  CHECK_THROWS_AS(spec_of(PrAveraged{0.5, 0.5 + e}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(spec_of(PrAveraged{0.0, 0.0}).validate(), std::invalid_argument);

  CHECK_NOTHROW(spec_of(WeightedAveraged{0.5, 0.5}).validate());
  CHECK_THROWS_AS(spec_of(WeightedAveraged{0.5 + e, 0.5}).validate(), std::invalid_argument);

  CHECK_THROWS_AS(spec_of(StepOnly{0.5}, 0.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(spec_of(StepOnly{0.5}, 1, -e).validate(), std::invalid_argument);
  CHECK_THROWS_AS(pr_averaged_bound(spec_of(StepOnly{0.5}), 1.0), std::invalid_argument);
}

TEST_CASE("bounds are monotone in gamma and trace") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  const std::vector<SdeFamily> fams = {StepOnly{0.4}, StepOnly{1.0}, PrAveraged{0.3, 0.6}, WeightedAveraged{0.2, 0.5},
                                       AccDiminishing{1.5, 3.0, 0.5}, AccDiminishing{1.5, 3.0, 0.5, AccForm::Printed}};
  for (const auto& fam : fams) {
    for (int k = 0; k < 10; ++k) {
      const double g = u(rng), tr = u(rng), t = 2.0 + 50 * u(rng);
      const auto b0 = evaluate_bound(spec_of(fam, g, tr), t);
      const auto bg = evaluate_bound(spec_of(fam, g * 1.5, tr), t);
      const auto bt = evaluate_bound(spec_of(fam, g, tr * 1.5), t);
      CHECK(bg.variance_term >= b0.variance_term);
      CHECK(bt.variance_term >= b0.variance_term);
      CHECK(bg.init_term == b0.init_term);
    }
  }
}

TEST_CASE("tabulation") {
  auto s = spec_of(StepOnly{0.5});
  auto rows = tabulate_bound(s, {0.0, 1.0, 10.0});
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].t == 1.0);
  CHECK(rows[2].terms.total() == doctest::Approx(step_only_bound(s, 10.0).total()));
  CHECK(s.name() == "step_only(alpha=0.5)");
}
