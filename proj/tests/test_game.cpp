#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "potforecast/game.hpp"
#include "potforecast/transcript_io.hpp"

namespace potforecast {
namespace {

GameConfig config(std::size_t n, std::size_t experts, AdversaryPolicy adv = AdversaryPolicy::greedy) {
  GameConfig c;
  c.horizon = n;
  c.experts = experts;
  c.adversary = adv;
  return c;
}

TEST(GreedyAdversaryTest, single_expert_ties_to_smallest_outcome) {
  const auto P = Potential::exponential(1.0);
  EXPECT_EQ(greedy_adversary(WeightVector({1.0}), std::vector{0.7}, std::vector{0.0}, LossFunction::absolute(), P, 9),
            0.0);
}

TEST(GreedyAdversaryTest, picks_the_larger_potential_increase) {
  const auto P = Potential::exponential(default_eta(2));
  EXPECT_EQ(greedy_adversary(WeightVector({0.9, 0.1}), std::vector{0.0, 1.0}, std::vector{0.0, 0.0},
                             LossFunction::absolute(), P, 4),
            1.0);
}

TEST(GreedyAdversaryTest, symmetric_position_breaks_tie_downwards) {
  const auto P = Potential::exponential(default_eta(2));
  EXPECT_EQ(greedy_adversary(WeightVector({0.5, 0.5}), std::vector{0.0, 1.0}, std::vector{0.0, 0.0},
                             LossFunction::absolute(), P, 4),
            0.0);
}

TEST(LookaheadAdversaryTest, depth_one_matches_greedy) {
  GameConfig c = config(20, 3, AdversaryPolicy::minimax_lookahead);
  c.lookahead_depth = 1;
  GameConfig g = c;
  g.adversary = AdversaryPolicy::greedy;
  const auto a = run_game(c);
  const auto b = run_game(g);
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t t = 0; t < a.rounds.size(); ++t) EXPECT_EQ(a.rounds[t].outcome, b.rounds[t].outcome);
}

TEST(GameConfigTest, validation) {
  EXPECT_THROW(config(0, 2).validate(), InputError);
  EXPECT_THROW(config(5, 0).validate(), InputError);
  GameConfig c = config(5, 2);
  c.expert_policy = ExpertPolicy::fixed_table;
  EXPECT_THROW(c.validate(), InputError);
  c.advice_table = {{0.0, 1.0, 0.5}};
  EXPECT_THROW(c.validate(), InputError);
  c.advice_table = {{0.0, 1.0}};
  EXPECT_NO_THROW(c.validate());

  GameConfig deep = config(1000000, 2, AdversaryPolicy::minimax_lookahead);
  deep.lookahead_depth = 10;
  EXPECT_THROW(deep.validate(), BudgetExceeded);

  GameConfig nc = config(5, 2);
  nc.mode = GameMode::randomized;
  nc.actions = ActionFixture::nonconvex;
  EXPECT_THROW(nc.validate(), InputError);
}

TEST(ExpertPolicyTest, constant_grid_and_table_cycling) {
  GameConfig c = config(5, 3);
  c.expert_policy = ExpertPolicy::constant_grid;
  EXPECT_EQ(expert_advice(c, 0), (AdviceVector{0.0, 0.5, 1.0}));
  c.expert_policy = ExpertPolicy::fixed_table;
  c.advice_table = {{0.1, 0.2, 0.3}, {0.4, 0.5, 0.6}};
  EXPECT_EQ(expert_advice(c, 3), (AdviceVector{0.4, 0.5, 0.6}));
  c.expert_policy = ExpertPolicy::seeded_random;
  EXPECT_EQ(expert_advice(c, 4), expert_advice(c, 4));
  for (double v : expert_advice(c, 4)) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(RunGameTest, greedy_two_experts_long_run_satisfies_bound) {
  const auto t = run_game(config(10000, 2));
  EXPECT_TRUE(t.bound_satisfied);
  EXPECT_FALSE(t.violation);
  EXPECT_EQ(t.rounds_played, 10000U);
  EXPECT_NEAR(t.bound_value, std::sqrt(2.0 * 10000 * std::log(2.0)), 1e-9);
}

TEST(RunGameTest, single_expert_has_nonpositive_regret) {
  for (auto adv : {AdversaryPolicy::greedy, AdversaryPolicy::oblivious_seeded}) {
    const auto t = run_game(config(100, 1, adv));
    EXPECT_LE(t.final_regret, 0.0);
    EXPECT_TRUE(t.ok());
  }
}

TEST(RunGameTest, identical_seeds_identical_transcripts) {
  GameConfig c = config(300, 4, AdversaryPolicy::oblivious_seeded);
  c.seed = 42;
  EXPECT_EQ(run_game(c), run_game(c));
  GameConfig d = c;
  d.seed = 43;
  EXPECT_NE(run_game(c).rounds, run_game(d).rounds);
}

TEST(RunGameTest, test_matrix_satisfies_bound) {
  for (std::size_t experts : {1U, 2U, 5U, 10U})
    for (std::size_t n : {1U, 10U, 100U, 10000U})
      for (auto adv : {AdversaryPolicy::oblivious_seeded, AdversaryPolicy::greedy, AdversaryPolicy::minimax_lookahead})
        for (const auto& loss : {LossFunction::absolute(), LossFunction::squared()}) {
          GameConfig c = config(n, experts, adv);
          c.loss = loss;
          RunOptions opt;
          opt.keep_rounds = false;
          const auto t = run_game(c, opt);
          EXPECT_TRUE(t.ok()) << "N=" << experts << " n=" << n << " adv=" << to_string(adv) << " " << loss.name();
        }
}

TEST(RunGameTest, broken_constant_stops_with_violation) {
  GameConfig c = config(50, 2);
  c.hessian_constant = 0.0;
  const auto t = run_game(c);
  ASSERT_TRUE(t.violation);
  EXPECT_EQ(t.violation->round, t.rounds.size() - 1);
  EXPECT_LT(t.rounds_played, 50U);
}

TEST(RunGameTest, randomized_modes_satisfy_bound) {
  for (auto fixture : {ActionFixture::grid, ActionFixture::nonconvex})
    for (auto adv : {AdversaryPolicy::greedy, AdversaryPolicy::oblivious_seeded}) {
      GameConfig c = config(3000, 3, adv);
      c.mode = GameMode::randomized;
      c.actions = fixture;
      const auto t = run_game(c);
      EXPECT_TRUE(t.ok()) << to_string(fixture) << " " << to_string(adv);
      EXPECT_EQ(t.randomized_rounds.size(), 3000U);
    }
}

TEST(RunGameTest, regret_over_root_n_stays_bounded) {
  double c_max = 0.0;
  for (std::size_t n : {10U, 100U, 1000U, 10000U}) {
    const auto t = run_game(config(n, 4));
    c_max = std::max(c_max, t.final_regret / std::sqrt(static_cast<double>(n)));
  }
  EXPECT_LE(c_max, std::sqrt(2.0 * std::log(4.0)) + 1e-12);
}

GameTranscript round_trip(const GameTranscript& t) {
  std::stringstream s;
  write_transcript(s, t);
  return parse_transcript(s);
}

TEST(TranscriptTest, round_trip_is_bit_exact) {
  for (auto mode : {GameMode::averaged, GameMode::randomized})
    for (auto loss : {LossFunction::absolute(), LossFunction::squared()}) {
      GameConfig c = config(400, 3, AdversaryPolicy::oblivious_seeded);
      c.mode = mode;
      c.loss = loss;
      c.seed = 7;
      c.eta = 0.8;
      const auto t = run_game(c);
      EXPECT_EQ(round_trip(t), t) << to_string(mode) << " " << loss.name();
    }
  GameConfig table = config(6, 2);
  table.expert_policy = ExpertPolicy::fixed_table;
  table.advice_table = {{0.0, 1.0}, {0.25, 0.125}};
  table.hessian_constant = 0.9;
  const auto t = run_game(table);
  EXPECT_EQ(round_trip(t), t);
}

TEST(TranscriptTest, round_trip_keeps_violations) {
  GameConfig c = config(50, 2);
  c.hessian_constant = 0.0;
  const auto t = run_game(c);
  ASSERT_TRUE(t.violation);
  EXPECT_EQ(round_trip(t), t);
}

TEST(TranscriptTest, line_layout) {
  GameConfig c = config(1, 2);
  c.expert_policy = ExpertPolicy::fixed_table;
  c.advice_table = {{0.0, 1.0}};
  std::stringstream s;
  write_transcript(s, run_game(c));
  std::string header, row;
  std::getline(s, header);
  std::getline(s, row);
  EXPECT_EQ(header.front(), '{');
  EXPECT_EQ(row.rfind("0,0,1,0.5,0.5,0.5,0,0.5,-0.5,", 0), 0U) << row;
}

TEST(TranscriptTest, rejects_malformed_input) {
  std::stringstream empty;
  EXPECT_THROW(parse_transcript(empty), InputError);
  std::stringstream bad_header("{\"horizon\": 2, \"bogus\": 1}\n");
  EXPECT_THROW(parse_transcript(bad_header), InputError);
  std::stringstream short_row("{\"horizon\": 2}\n0,1,2\n");
  EXPECT_THROW(parse_transcript(short_row), InputError);
}

TEST(ConfigJsonTest, strict_schema) {
  GameConfig c;
  EXPECT_THROW(apply_config_json(c, json::parse(R"({"experts": 2, "extra": true})")), InputError);
  EXPECT_THROW(apply_config_json(c, json::parse(R"({"experts": -2})")), InputError);
  EXPECT_THROW(apply_config_json(c, json::parse(R"({"loss": "hinge"})")), InputError);
  EXPECT_THROW(apply_config_json(c, json::parse(R"([1, 2])")), InputError);
  apply_config_json(c, json::parse(R"({"experts": 4, "eta": 0.5, "adversary": "oblivious"})"));
  EXPECT_EQ(c.experts, 4U);
  EXPECT_EQ(c.eta, 0.5);
  EXPECT_EQ(c.adversary, AdversaryPolicy::oblivious_seeded);
}

TEST(ConfigJsonTest, defaults_round_trip) {
  GameConfig c = config(17, 3, AdversaryPolicy::minimax_lookahead);
  c.seed = 123456789012345ULL;
  GameConfig d;
  apply_config_json(d, config_to_json(c));
  EXPECT_EQ(c, d);
}

TEST(SweepTest, empty_list_gives_empty_table) {
  EXPECT_TRUE(sweep(config(10, 2), SweepParameter::eta, std::vector<double>{}).empty());
}

TEST(SweepTest, eta_bound_minimized_near_optimum) {
  const std::vector<double> etas{0.5, 1.0, 1.1774, 2.0};
  const auto rows = sweep(config(200, 4), SweepParameter::eta, etas);
  ASSERT_EQ(rows.size(), etas.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].param, etas[k]);
    EXPECT_LE(rows[k].regret, rows[k].bound + 1e-9);
    if (rows[k].bound < rows[best].bound) best = k;
  }
  // 2.0 is the listed value closest to sqrt(2 ln 4) = 1.6651.
  EXPECT_EQ(etas[best], 2.0);
  GameConfig opt = config(200, 4);
  opt.eta = default_eta(4);
  EXPECT_LT(run_game(opt).bound_value, rows[best].bound);
}

TEST(SweepTest, rows_match_individual_games) {
  const std::vector<double> ns{5, 50, 500};
  const auto rows = sweep(config(1, 3), SweepParameter::horizon, ns);
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const auto t = run_game(config(static_cast<std::size_t>(ns[k]), 3));
    EXPECT_EQ(rows[k].regret, t.final_regret);
    EXPECT_EQ(rows[k].bound, t.bound_value);
  }
}

TEST(SweepTest, rejects_non_integral_counts_and_propagates_errors) {
  EXPECT_THROW(sweep(config(10, 2), SweepParameter::experts, std::vector{2.5}), InputError);
  EXPECT_THROW(sweep(config(10, 2), SweepParameter::horizon, std::vector{0.0}), InputError);
  GameConfig broken = config(50, 2);
  broken.hessian_constant = 0.0;
  EXPECT_THROW(sweep(broken, SweepParameter::eta, std::vector{1.0}), InvariantViolation);
}

}  // namespace
}  // namespace potforecast
