#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "potforecast/core.hpp"
#include "potforecast/forecaster.hpp"
#include "potforecast/rng.hpp"

namespace potforecast {
namespace {

TEST(LossTest, absolute_and_squared_values) {
  const auto abs_loss = LossFunction::absolute();
  const auto sq_loss = LossFunction::squared();
  EXPECT_DOUBLE_EQ(evaluate_loss(abs_loss, 0.5, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(evaluate_loss(sq_loss, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(evaluate_loss(sq_loss, 0.3, 0.0), 0.09);
  EXPECT_DOUBLE_EQ(evaluate_loss(sq_loss, 0.0, 1.0), 1.0);
}

TEST(LossTest, rejects_domain_violations) {
  const auto loss = LossFunction::absolute();
  EXPECT_THROW(loss(1.5, 1.0), InputError);
  EXPECT_THROW(loss(-0.1, 0.0), InputError);
  EXPECT_THROW(loss(0.5, 0.5), InputError);  // 0.5 is not an outcome
}

TEST(LossTest, bounded_and_midpoint_convex_on_grid) {
  for (const auto& loss : {LossFunction::absolute(), LossFunction::squared()}) {
    for (double b : loss.outcomes()) {
      for (int i = 0; i <= 100; ++i) {
        const double a = i / 100.0;
        const double v = loss(a, b);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        for (int j = i; j <= 100; j += 2) {
          const double c = j / 100.0;
          const double mid = loss((a + c) / 2.0, b);
          EXPECT_LE(mid, (loss(a, b) + loss(c, b)) / 2.0 + kSimplexTolerance) << loss.name() << " a=" << a << " c=" << c;
        }
      }
    }
  }
}

TEST(WeightVectorTest, validates_simplex) {
  EXPECT_NO_THROW(WeightVector({0.25, 0.75}));
  EXPECT_THROW(WeightVector({0.5, 0.6}), InputError);
  EXPECT_THROW(WeightVector({-0.1, 1.1}), InputError);
  EXPECT_THROW(WeightVector(std::vector<double>{}), InputError);
  EXPECT_EQ(WeightVector::uniform(4)[3], 0.25);
}

TEST(CombineAdviceTest, examples) {
  EXPECT_DOUBLE_EQ(combine_advice(WeightVector({1.0, 0.0}), std::vector{0.2, 0.9}), 0.2);
  EXPECT_DOUBLE_EQ(combine_advice(WeightVector({0.5, 0.5}), std::vector{0.0, 1.0}), 0.5);
  EXPECT_NEAR(combine_advice(WeightVector({0.25, 0.75}), std::vector{0.4, 0.8}), 0.7, 1e-15);
  EXPECT_THROW(combine_advice(WeightVector({1.0}), std::vector{0.1, 0.2}), InputError);
}

TEST(RegretIncrementTest, examples) {
  const auto loss = LossFunction::absolute();
  EXPECT_EQ(regret_increment(WeightVector({0.5, 0.5}), std::vector{0.0, 1.0}, 1.0, loss), (std::vector{-0.5, 0.5}));
  EXPECT_EQ(regret_increment(WeightVector({1.0}), std::vector{0.37}, 0.0, loss), (std::vector{0.0}));
  EXPECT_EQ(regret_increment(WeightVector({1.0, 0.0}), std::vector{0.0, 1.0}, 0.0, loss), (std::vector{0.0, -1.0}));
  EXPECT_THROW(regret_increment(WeightVector({1.0, 0.0}), std::vector{0.0, 2.0}, 0.0, loss), InputError);
}

// Random (p, f, b) draws shared by the property tests below.
struct Sample {
  WeightVector p;
  AdviceVector f;
  double b;
};

Sample draw(const CounterRng& rng, std::uint64_t k, std::size_t n, const LossFunction& loss) {
  std::vector<double> w(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (w[i] = -std::log(1.0 - rng.uniform(k * 64 + i)));
  for (double& v : w) v /= s;
  AdviceVector f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = rng.uniform(k * 64 + 32 + i);
  const double b = loss.outcomes()[rng.below(k * 64 + 63, loss.outcomes().size())];
  return {WeightVector(std::move(w)), std::move(f), b};
}

TEST(RegretIncrementTest, jensen_and_bounds_over_random_samples) {
  const CounterRng rng(11);
  for (const auto& loss : {LossFunction::absolute(), LossFunction::squared()}) {
    for (std::uint64_t k = 0; k < 2000; ++k) {
      const auto [p, f, b] = draw(rng, k, 1 + k % 9, loss);
      const auto r = regret_increment(p, f, b, loss);
      EXPECT_LE(dot(p.values(), r), kSimplexTolerance);
      for (double v : r) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(CumulativeRegretTest, examples) {
  const auto loss = LossFunction::absolute();
  EXPECT_EQ(cumulative_regret({}, loss), 0.0);

  RoundRecord r;
  r.advice = {0.0, 1.0};
  r.weights = WeightVector({0.5, 0.5});
  r.prediction = 0.5;
  r.outcome = 1.0;
  EXPECT_DOUBLE_EQ(cumulative_regret(std::vector{r}, loss), 0.5);

  // Forecaster copying expert 1, which is best in hindsight.
  std::vector<RoundRecord> rounds;
  for (int t = 0; t < 5; ++t) {
    RoundRecord c;
    c.advice = {0.9, 0.2};
    c.weights = WeightVector({0.0, 1.0});
    c.prediction = 0.2;
    c.outcome = 0.0;
    rounds.push_back(c);
  }
  EXPECT_EQ(cumulative_regret(rounds, loss), 0.0);
}

TEST(CumulativeRegretTest, equals_scaled_state_maximum) {
  // sqrt(n) max_i X_n^i computed by the forecaster's own recursion.
  const CounterRng rng(5);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const std::size_t n_experts = 1 + k % 6;
    const std::size_t horizon = 1 + (k * 7) % 40;
    const auto loss = k % 2 ? LossFunction::squared() : LossFunction::absolute();
    std::vector<AdviceVector> advice;
    std::vector<double> outcomes;
    for (std::size_t t = 0; t < horizon; ++t) {
      auto s = draw(rng.split(k), t, n_experts, loss);
      advice.push_back(s.f);
      outcomes.push_back(s.b);
    }
    const auto run = run_forecast(Potential::exponential(default_eta(n_experts)), loss, advice, outcomes);
    const double scaled = std::sqrt(static_cast<double>(horizon)) * max_coordinate(run.final_state);
    worst = std::max(worst, std::abs(cumulative_regret(run.rounds, loss) - scaled));
  }
  EXPECT_LE(worst, kIdentityTolerance);
}

TEST(FormatTest, shortest_round_trip) {
  const CounterRng rng(3);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const double v = (rng.uniform(k) - 0.5) * std::pow(10.0, static_cast<double>(k % 40) - 20.0);
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_THROW(parse_double("1.0x"), InputError);
}

}  // namespace
}  // namespace potforecast
