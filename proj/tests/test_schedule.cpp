#include <doctest.h>

#include <cmath>

#include "dalab/errors.hpp"
#include "dalab/rng.hpp"
#include "dalab/schedule.hpp"

using namespace dalab;

namespace {

// Literal sum over steps, used as the oracle for the closed form.
double brute_force_budget(std::int64_t b, const AnnealingSchedule& s, std::int64_t m) {
  double sum = 0.0;
  for (std::int64_t t = 1; t <= m; ++t) sum += static_cast<double>(b) * source_ratio_at(s, t);
  return sum;
}

}  // namespace

TEST_CASE("source ratio follows alpha * lambda^(t-1)") {
  CHECK(source_ratio_at({0.9, 0.99}, 1) == 0.9);
  CHECK(source_ratio_at({0.9, 0.9}, 3) == doctest::Approx(0.729).epsilon(1e-15));
  // mpmath at 50 digits: 0.0769449752767133...
  CHECK(std::abs(source_ratio_at({0.95, 0.95}, 50) - 0.076944975276713329) < 1e-15);
  CHECK(std::abs(source_ratio_at({0.95, 0.95}, 50) - 0.0770) < 1e-3);
}

TEST_CASE("target ratio is the exact complement") {
  CHECK(target_ratio_at({0.9, 0.99}, 1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(target_ratio_at({0.9, 0.9}, 3) == doctest::Approx(0.271).epsilon(1e-15));

  SplitMix64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const AnnealingSchedule s(rng.uniform(1e-6, 1.0 - 1e-6), rng.uniform(1e-6, 1.0 - 1e-6));
    const auto t = static_cast<std::int64_t>(1 + rng.below(500));
    CHECK(source_ratio_at(s, t) + target_ratio_at(s, t) == 1.0);
  }
}

TEST_CASE("annealed ratio is strictly decreasing") {
  for (const AnnealingSchedule s : {AnnealingSchedule{0.9, 0.99}, AnnealingSchedule{0.95, 0.95},
                                    AnnealingSchedule{0.5, 0.999}}) {
    double prev = source_ratio_at(s, 1);
    for (std::int64_t t = 2; t <= 5000; ++t) {
      const double r = source_ratio_at(s, t);
      if (prev < 1e-300) break;
      REQUIRE(r < prev);
      prev = r;
    }
  }
}

TEST_CASE("ratio_at dispatches over the four policies") {
  CHECK(ratio_at(MixPolicy::target_only(), 7) == 0.0);
  CHECK(ratio_at(MixPolicy::fixed_ratio(0.5), 100) == 0.5);
  CHECK(ratio_at(MixPolicy::two_phase(10), 10) == 1.0);
  CHECK(ratio_at(MixPolicy::two_phase(10), 11) == 0.0);
  const AnnealingSchedule s(0.9, 0.9);
  CHECK(ratio_at(MixPolicy::annealed(s), 3) == source_ratio_at(s, 3));
  CHECK_THROWS_AS(ratio_at(MixPolicy::target_only(), 0), ConfigError);
}

TEST_CASE("invalid parameters are rejected at construction") {
  CHECK_THROWS_AS(AnnealingSchedule(0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(AnnealingSchedule(1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(AnnealingSchedule(0.5, 1.0), ConfigError);
  CHECK_THROWS_AS(MixPolicy::fixed_ratio(1.5), ConfigError);
  CHECK_THROWS_AS(MixPolicy::two_phase(0), ConfigError);
  CHECK_THROWS_AS(TrainingPlan(0, 10, MixPolicy::target_only()), ConfigError);
  CHECK_THROWS_AS(TrainingPlan(4, 0, MixPolicy::target_only()), ConfigError);
}

TEST_CASE("exact source budget") {
  const auto plan = [](std::int64_t b, double a, double l, std::int64_t m) {
    return TrainingPlan(b, m, MixPolicy::annealed({a, l}));
  };
  CHECK(exact_source_budget(plan(1, 0.5, 0.5, 2)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(exact_source_budget(plan(1, 0.5, 0.5, 1)) == doctest::Approx(0.5).epsilon(1e-15));

  const double big = exact_source_budget(plan(32, 0.9, 0.99, 10000));
  const double approx = approx_source_budget(32, {0.9, 0.99});
  CHECK(std::abs(big - approx) / approx < 1e-6);

  CHECK_THROWS_AS(exact_source_budget(TrainingPlan(4, 4, MixPolicy::fixed_ratio(0.2))),
                  UnsupportedPolicyError);
}

TEST_CASE("closed form matches the literal sum") {
  SplitMix64 rng(11);
  for (int i = 0; i < 40; ++i) {
    const AnnealingSchedule s(rng.uniform(0.01, 0.99), rng.uniform(0.5, 0.999));
    const auto b = static_cast<std::int64_t>(1 + rng.below(64));
    const auto m = static_cast<std::int64_t>(1 + rng.below(10000));
    const double closed = exact_source_budget(TrainingPlan(b, m, MixPolicy::annealed(s)));
    const double brute = brute_force_budget(b, s, m);
    CHECK(std::abs(closed - brute) / brute < 1e-9);
    CHECK(closed <= approx_source_budget(b, s));
  }
}

TEST_CASE("approximate budget and its inverse") {
  CHECK(approx_source_budget(32, {0.9, 0.99}) == doctest::Approx(2880.0).epsilon(1e-12));
  CHECK(approx_source_budget(1, {0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(alpha_for_budget(2880.0, 0.99, 32) == doctest::Approx(0.9).epsilon(1e-12));

  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const AnnealingSchedule s(rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.999));
    const auto b = static_cast<std::int64_t>(1 + rng.below(128));
    const double back = alpha_for_budget(approx_source_budget(b, s), s.lambda(), b);
    CHECK(std::abs(back - s.alpha()) / s.alpha() < 1e-12);
  }
}

TEST_CASE("infeasible budget names the offending alpha") {
  try {
    alpha_for_budget(10000.0, 0.99, 32);
    FAIL("expected InfeasibleBudgetError");
  } catch (const InfeasibleBudgetError& e) {
    CHECK(e.alpha() == doctest::Approx(3.125));
    CHECK(std::string(e.what()).find("3.125") != std::string::npos);
  }
  CHECK_THROWS_AS(alpha_for_budget(0.0, 0.99, 32), ConfigError);
}

TEST_CASE("budget consistency for long runs") {
  for (std::int64_t m : {2000, 3000, 5000, 10000}) {
    const double exact = exact_source_budget(TrainingPlan(32, m, MixPolicy::annealed({0.9, 0.99})));
    const double approx = approx_source_budget(32, {0.9, 0.99});
    CHECK(std::abs(exact - approx) / approx < 0.01);
  }
}
