#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "steinsim/score_model.hpp"

using namespace steinsim;

namespace {

// interior evaluation grid avoiding support boundaries
std::vector<double> interior_grid(const ScoreModel& m, int points) {
  const double lo = std::isfinite(m.support().lo) ? m.support().lo + 0.05 : -8.0;
  const double hi = std::isfinite(m.support().hi) ? m.support().hi - 0.05 : 8.0;
  std::vector<double> g;
  for (int i = 0; i < points; ++i)
    g.push_back(lo + (hi - lo) * (i + 0.5) / points);
  return g;
}

std::vector<ScoreModel> registry() {
  return {ScoreModel::gaussian(0, 1), ScoreModel::gaussian(1, 2), ScoreModel::gamma(5, 1),
          ScoreModel::student_t(5), ScoreModel::rayleigh(2)};
}

}  // namespace

TEST_CASE("density closed forms") {
  CHECK(ScoreModel::gaussian(0, 1).density(0.0) ==
        doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(ScoreModel::rayleigh(2).density(0.0) == 0.0);
  CHECK(ScoreModel::gamma(5, 1).density(1.0) ==
        doctest::Approx(std::exp(-1.0) / 24.0).epsilon(1e-12));
  // outside support
  CHECK(ScoreModel::gamma(5, 1).density(-1.0) == 0.0);
  CHECK(ScoreModel::rayleigh(2).density(-0.1) == 0.0);
}

TEST_CASE("density integrates to one") {
  for (const auto& m : registry()) {
    const double lo = std::isfinite(m.support().lo) ? m.support().lo : -60.0;
    const double hi = std::isfinite(m.support().hi) ? m.support().hi : 60.0;
    const int steps = 400000;
    const double h = (hi - lo) / steps;
    double total = 0.0;  // midpoint rule handles the integrable boundary singularities
    for (int i = 0; i < steps; ++i) total += m.density(lo + (i + 0.5) * h) * h;
    CHECK_MESSAGE(std::abs(total - 1.0) < 1e-6, m.name(), " integral ", total);
  }
}

TEST_CASE("score closed forms") {
  CHECK(ScoreModel::gaussian(0, 1).score(1.5) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(ScoreModel::gamma(5, 1).score(2.0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(ScoreModel::student_t(5).score(0.0) == 0.0);
  CHECK(ScoreModel::gaussian(0, 1).score_deriv(0.77) == doctest::Approx(1.0));
  CHECK(ScoreModel::gamma(5, 1).score_deriv(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ScoreModel::student_t(5).score_deriv(0.0) == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(ScoreModel::rayleigh(2).score(2.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("score matches minus log-density derivative") {
  for (const auto& m : registry()) {
    for (double x : interior_grid(m, 200)) {
      const double h = 1e-5 * std::max(1.0, std::abs(x));
      if (std::isfinite(m.support().lo) && x - h <= m.support().lo) continue;
      const double fd = -(std::log(m.density(x + h)) - std::log(m.density(x - h))) / (2 * h);
      const double s = m.score(x);
      CHECK_MESSAGE(std::abs(s - fd) <= 1e-5 * (1.0 + std::abs(s)), m.name(), " at x=", x);
    }
  }
}

TEST_CASE("score derivative matches finite differences of score") {
  for (const auto& m : registry()) {
    for (double x : interior_grid(m, 200)) {
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      if (std::isfinite(m.support().lo) && x - h <= m.support().lo) continue;
      const double fd = (m.score(x + h) - m.score(x - h)) / (2 * h);
      const double sd = m.score_deriv(x);
      CHECK_MESSAGE(std::abs(sd - fd) <= 1e-4 * (1.0 + std::abs(sd)), m.name(), " at x=", x);
    }
  }
}

TEST_CASE("score evaluation at or outside support boundary is a hard error") {
  CHECK_THROWS_AS((void)ScoreModel::gamma(5, 1).score(0.0), std::domain_error);
  CHECK_THROWS_AS((void)ScoreModel::gamma(5, 1).score(-1.0), std::domain_error);
  CHECK_THROWS_AS((void)ScoreModel::rayleigh(2).score_deriv(0.0), std::domain_error);
  CHECK_NOTHROW((void)ScoreModel::student_t(5).score(-100.0));
}

TEST_CASE("sampling moments and determinism") {
  const std::size_t n = 100000;
  {
    const auto xs = ScoreModel::gaussian(0, 1).sample(7, n);
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
  }
  {
    const auto xs = ScoreModel::gamma(5, 1).sample(7, n);
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= n;
    // mean = shape * scale = 5, stddev = sqrt(5)
    CHECK(std::abs(mean - 5.0) < 5.0 * std::sqrt(5.0) / std::sqrt(double(n)) * 3.0);
  }
  {
    const auto a = ScoreModel::rayleigh(2).sample(123, 1000);
    const auto b = ScoreModel::rayleigh(2).sample(123, 1000);
    CHECK(a == b);
    for (double x : a) CHECK(x > 0.0);
  }
}

TEST_CASE("monte carlo zero-mean score") {
  const std::size_t n = 100000;
  for (const auto& m : registry()) {
    const auto xs = m.sample(99, n);
    double mean = 0, sq = 0;
    for (double x : xs) {
      const double s = m.score(x);
      mean += s;
      sq += s * s;
    }
    mean /= double(n);
    sq /= double(n);
    const double stderr_ = std::sqrt((sq - mean * mean) / double(n));
    CHECK_MESSAGE(std::abs(mean) <= 5.0 * stderr_, m.name(), " mean score ", mean);
  }
}

TEST_CASE("spec string parsing") {
  CHECK(ScoreModel::parse("gaussian:0,1").name() == ScoreModel::gaussian(0, 1).name());
  CHECK(ScoreModel::parse("gamma:5,1").score(2.0) == doctest::Approx(-1.0));
  CHECK(ScoreModel::parse("t:5").score_deriv(0.0) == doctest::Approx(1.2));
  CHECK(ScoreModel::parse("rayleigh:2").density(0.0) == 0.0);
  CHECK_THROWS_AS((void)ScoreModel::parse("cauchy:1"), std::invalid_argument);
  CHECK_THROWS_AS((void)ScoreModel::parse("gamma:-1,1"), std::invalid_argument);
  CHECK_THROWS_AS((void)ScoreModel::parse("gamma:5"), std::invalid_argument);
  CHECK_THROWS_AS((void)ScoreModel::parse(""), std::invalid_argument);
}

TEST_CASE("custom model constructor") {
  // standard normal expressed through the custom hook
  const auto m = ScoreModel::custom(
      {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
      [](double x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); },
      [](double x) { return x; }, [](double) { return 1.0; },
      [](std::mt19937_64& rng) { return std::normal_distribution<double>(0, 1)(rng); },
      "custom-normal");
  CHECK(m.score(1.5) == doctest::Approx(1.5));
  CHECK(m.density(0.0) == doctest::Approx(0.3989422804014327));
  CHECK(m.sample(5, 10).size() == 10);
}

TEST_CASE("moment bound validation") {
  CHECK(MomentBound(2.5).value == 2.5);
  CHECK_THROWS_AS(MomentBound(0.0), std::invalid_argument);
  CHECK_THROWS_AS(MomentBound(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(MomentBound(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}
