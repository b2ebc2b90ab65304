#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "potforecast/randomized.hpp"

namespace potforecast {
namespace {

TEST(ActionSetTest, tabulates_builtin_losses) {
  const auto a = grid_actions(3, LossFunction::squared());
  EXPECT_EQ(a.actions(), (std::vector{0.0, 0.5, 1.0}));
  EXPECT_DOUBLE_EQ(a.loss(1, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(a.loss(2, 0.0), 1.0);
  EXPECT_THROW(a.loss(0, 0.3), InputError);
}

TEST(ActionSetTest, nonconvex_fixture_is_not_convex) {
  const auto a = nonconvex_fixture();
  // The midpoint action loses more than the average of its neighbours.
  for (double b : a.outcomes()) EXPECT_GT(a.loss(1, b), (a.loss(0, b) + a.loss(2, b)) / 2.0);
}

TEST(ActionSetTest, rejects_bad_tables) {
  EXPECT_THROW(ActionSet("x", {0.0}, {0.0, 1.0}, {{0.0}}), InputError);
  EXPECT_THROW(ActionSet("x", {0.0}, {0.0}, {{1.5}}), InputError);
  EXPECT_THROW(ActionSet("x", {}, {0.0}, {}), InputError);
}

TEST(RandomizedIncrementTest, examples) {
  const auto a = grid_actions(2, LossFunction::absolute());
  EXPECT_EQ(randomized_increment(WeightVector({0.5, 0.5}), 1.0, a), (std::vector{-0.5, 0.5}));
  EXPECT_EQ(randomized_increment(WeightVector({1.0, 0.0}), 0.0, a), (std::vector{0.0, -1.0}));
}

TEST(RandomizedIncrementTest, orthogonal_to_distribution) {
  const CounterRng rng(4);
  const auto a = nonconvex_fixture();
  for (std::uint64_t k = 0; k < 5000; ++k) {
    double u = rng.uniform(3 * k), v = rng.uniform(3 * k + 1) * (1.0 - u);
    const WeightVector p({u, v, 1.0 - u - v});
    const double b = a.outcomes()[rng.below(3 * k + 2, 2)];
    const auto r = randomized_increment(p, b, a);
    EXPECT_LE(std::abs(dot(p.values(), r)), 1e-12);
    for (double x : r) EXPECT_LE(std::abs(x), 1.0);
  }
}

TEST(RngTest, categorical_frequencies) {
  const CounterRng rng(8);
  const WeightVector p({0.1, 0.6, 0.3});
  std::vector<double> count(3, 0.0);
  const std::uint64_t draws = 200000;
  for (std::uint64_t k = 0; k < draws; ++k) count[rng.categorical(k, p)] += 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double se = std::sqrt(p[i] * (1.0 - p[i]) / static_cast<double>(draws));
    EXPECT_NEAR(count[i] / static_cast<double>(draws), p[i], 5.0 * se);
  }
  EXPECT_EQ(rng.categorical(0, WeightVector::vertex(3, 2)), 2U);
}

TEST(RngTest, streams_are_reproducible_and_distinct) {
  const CounterRng a(1), b(1);
  EXPECT_EQ(a.bits(7), b.bits(7));
  EXPECT_NE(a.split(1).bits(7), a.split(2).bits(7));
  EXPECT_NE(a.bits(7), CounterRng(2).bits(7));
}

std::vector<RandomizedRound> play(const ActionSet& actions, std::size_t n, std::uint64_t seed) {
  const Potential P = Potential::exponential(default_eta(actions.size()));
  RandomizedState s(P, actions, n, CounterRng(seed));
  const CounterRng outcomes(seed + 1000);
  std::vector<RandomizedRound> rounds;
  for (std::size_t t = 0; t < n; ++t) {
    auto [next, rec] = randomized_step(s, actions.outcomes()[outcomes.below(t, actions.outcomes().size())]);
    rounds.push_back(std::move(rec));
    s = std::move(next);
  }
  return rounds;
}

TEST(RandomizedStepTest, first_round_is_uniform) {
  const auto a = grid_actions(4, LossFunction::absolute());
  RandomizedState s(Potential::exponential(default_eta(4)), a, 10, CounterRng(0));
  auto [next, rec] = randomized_step(s, 1.0);
  EXPECT_EQ(rec.distribution, WeightVector::uniform(4));
  EXPECT_LT(rec.sampled_action, 4U);
  EXPECT_EQ(rec.sampled_loss, a.loss(rec.sampled_action, 1.0));
  EXPECT_EQ(next.round(), 1U);
}

TEST(RandomizedStepTest, refuses_play_past_horizon) {
  RandomizedState s(Potential::exponential(1.0), nonconvex_fixture(), 1, CounterRng(0));
  s = randomized_step(s, 0.0).first;
  EXPECT_THROW(randomized_step(s, 0.0), SequencingError);
}

TEST(RandomizedRegretTest, single_round_example) {
  RandomizedRound r;
  r.distribution = WeightVector({0.5, 0.5});
  r.outcome = 1.0;
  r.sampled_loss = 1.0;
  const auto a = grid_actions(2, LossFunction::absolute());
  EXPECT_DOUBLE_EQ(expected_regret(std::vector{r}, a), 0.5);
  EXPECT_DOUBLE_EQ(sampled_regret(std::vector{r}, a), 1.0);
}

TEST(RandomizedRegretTest, bound_holds_and_certificates_hold) {
  for (const auto& actions : {nonconvex_fixture(), grid_actions(2, LossFunction::absolute()),
                              grid_actions(5, LossFunction::squared())}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const std::size_t n = 2000;
      const auto rounds = play(actions, n, seed);
      for (const auto& r : rounds) {
        EXPECT_LE(r.blackwell_value, 1e-12);
        EXPECT_LE(r.telescoping_value, 1e-12);
      }
      EXPECT_LE(expected_regret(rounds, actions),
                std::sqrt(2.0 * n * std::log(static_cast<double>(actions.size()))) + 1e-9);
    }
  }
}

TEST(RandomizedRegretTest, resampling_with_own_stream_reproduces_sampled_regret) {
  const auto a = nonconvex_fixture();
  const auto rounds = play(a, 500, 3);
  EXPECT_EQ(resampled_regret(rounds, a, CounterRng(3)), sampled_regret(rounds, a));
}

}  // namespace
}  // namespace potforecast
