#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <atomic>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/forecaster.hpp"
#include "potforecast/potentials.hpp"
#include "potforecast/randomized.hpp"
#include "potforecast/rng.hpp"

namespace potforecast {

enum class ExpertPolicy { fixed_table, seeded_random, constant_grid };
enum class AdversaryPolicy { oblivious_seeded, greedy, minimax_lookahead };
enum class GameMode { averaged, randomized };
enum class ActionFixture { grid, nonconvex };

// Node budget shared with the minimax module for exhaustive searches.
inline constexpr double kSearchBudget = 1e8;

inline std::string_view to_string(ExpertPolicy p) {
  switch (p) {
    case ExpertPolicy::fixed_table: return "fixed_table";
    case ExpertPolicy::seeded_random: return "seeded_random";
    case ExpertPolicy::constant_grid: return "constant_grid";
  }
  return "?";
}

inline std::string_view to_string(AdversaryPolicy p) {
  switch (p) {
    case AdversaryPolicy::oblivious_seeded: return "oblivious";
    case AdversaryPolicy::greedy: return "greedy";
    case AdversaryPolicy::minimax_lookahead: return "lookahead";
  }
  return "?";
}

inline std::string_view to_string(GameMode m) { return m == GameMode::averaged ? "averaged" : "randomized"; }
inline std::string_view to_string(ActionFixture a) { return a == ActionFixture::grid ? "grid" : "nonconvex"; }

inline ExpertPolicy parse_expert_policy(std::string_view s) {
  if (s == "fixed_table") return ExpertPolicy::fixed_table;
  if (s == "seeded_random") return ExpertPolicy::seeded_random;
  if (s == "constant_grid") return ExpertPolicy::constant_grid;
  throw InputError("unknown expert policy '" + std::string(s) + "'");
}

inline AdversaryPolicy parse_adversary(std::string_view s) {
  if (s == "oblivious" || s == "oblivious_seeded") return AdversaryPolicy::oblivious_seeded;
  if (s == "greedy") return AdversaryPolicy::greedy;
  if (s == "lookahead" || s == "minimax_lookahead") return AdversaryPolicy::minimax_lookahead;
  throw InputError("unknown adversary '" + std::string(s) + "'");
}

inline GameMode parse_mode(std::string_view s) {
  if (s == "averaged") return GameMode::averaged;
  if (s == "randomized") return GameMode::randomized;
  throw InputError("unknown mode '" + std::string(s) + "'");
}

inline ActionFixture parse_actions(std::string_view s) {
  if (s == "grid") return ActionFixture::grid;
  if (s == "nonconvex") return ActionFixture::nonconvex;
  throw InputError("unknown action set '" + std::string(s) + "'");
}

struct GameConfig {
  std::size_t horizon = 1;
  std::size_t experts = 2;
  LossFunction loss = LossFunction::absolute();
  std::optional<double> eta;               // default_eta(experts) when unset
  std::optional<double> hessian_constant;  // eta/2 when unset
  ExpertPolicy expert_policy = ExpertPolicy::seeded_random;
  std::vector<AdviceVector> advice_table;  // rows cycled when shorter than the horizon
  AdversaryPolicy adversary = AdversaryPolicy::greedy;
  std::size_t lookahead_depth = 2;
  std::uint64_t seed = 0;
  GameMode mode = GameMode::averaged;
  ActionFixture actions = ActionFixture::grid;

  double resolved_eta() const { return eta ? *eta : default_eta(experts); }

  Potential potential() const {
    const double e = resolved_eta();
    return Potential::exponential(e, hessian_constant ? *hessian_constant : e / 2.0);
  }

  void validate() const {
    if (horizon == 0) throw InputError("horizon n must be at least 1");
    if (experts == 0) throw InputError("expert count N must be at least 1");
    (void)potential();
    if (expert_policy == ExpertPolicy::fixed_table) {
      if (advice_table.empty()) throw InputError("fixed_table expert policy needs a nonempty advice table");
      for (const auto& row : advice_table) {
        if (row.size() != experts) throw InputError("advice table rows must have one entry per expert");
        check_advice(loss, row);
      }
    }
    if (adversary == AdversaryPolicy::minimax_lookahead) {
      if (lookahead_depth == 0) throw InputError("lookahead depth must be at least 1");
      const double b = static_cast<double>(loss.outcomes().size());
      double per_round = 0.0;
      for (std::size_t k = 1; k <= lookahead_depth; ++k) per_round += std::pow(b, static_cast<double>(k));
      const double work = per_round * static_cast<double>(horizon);
      if (work > kSearchBudget) throw BudgetExceeded(work, kSearchBudget);
    }
    if (mode == GameMode::randomized && actions == ActionFixture::nonconvex) {
      if (experts != 3) throw InputError("the nonconvex action fixture has exactly 3 actions");
    }
  }

  friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

inline ActionSet action_set(const GameConfig& config) {
  if (config.actions == ActionFixture::nonconvex) return nonconvex_fixture();
  return grid_actions(config.experts, config.loss);
}

/// Expert advice at round t. Experts never look at the forecaster's weights.
inline AdviceVector expert_advice(const GameConfig& config, std::size_t t) {
  const std::size_t n = config.experts;
  const double lo = config.loss.lower();
  const double hi = config.loss.upper();
  AdviceVector f(n, lo);
  switch (config.expert_policy) {
    case ExpertPolicy::fixed_table:
      return config.advice_table[t % config.advice_table.size()];
    case ExpertPolicy::seeded_random: {
      const CounterRng rng = CounterRng(config.seed).split(1);
      for (std::size_t i = 0; i < n; ++i) f[i] = lo + (hi - lo) * rng.uniform(t * n + i);
      return f;
    }
    case ExpertPolicy::constant_grid:
      for (std::size_t i = 0; n > 1 && i < n; ++i)
        f[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      return f;
  }
  return f;
}

/// Outcome fixed in advance from the seed alone.
inline double oblivious_outcome(const GameConfig& config, std::size_t t) {
  const auto& b = config.loss.outcomes();
  return b[CounterRng(config.seed).split(2).below(t, b.size())];
}

namespace detail {

// Ties within this margin go to the smaller outcome.
inline constexpr double kTieMargin = 1e-12;

inline RegretVector shifted(std::span<const double> x, std::span<const double> r, double root_n) {
  RegretVector y(x.begin(), x.end());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += r[i] / root_n;
  return y;
}

}  // namespace detail

/// Outcome maximizing the one-step potential Phi(x + r(p,f,b)/sqrt(n)).
inline double greedy_adversary(const WeightVector& p, std::span<const double> f, std::span<const double> x,
                               const LossFunction& loss, const Potential& potential, std::size_t horizon) {
  const double root_n = std::sqrt(static_cast<double>(horizon));
  double best_b = loss.outcomes().front();
  double best = -std::numeric_limits<double>::infinity();
  for (double b : loss.outcomes()) {
    const double v = potential_value(potential, detail::shifted(x, regret_increment(p, f, b, loss), root_n));
    if (v > best + detail::kTieMargin) {
      best = v;
      best_b = b;
    }
  }
  return best_b;
}

namespace detail {

// Largest potential reachable from x at round t within `depth` more rounds,
// with the forecaster playing its weights and the experts their policy.
inline double lookahead_value(const GameConfig& config, const Potential& P, const RegretVector& x, std::size_t t,
                              std::size_t depth, double root_n) {
  if (depth == 0 || t >= config.horizon) return potential_value(P, x);
  const AdviceVector f = expert_advice(config, t);
  const WeightVector p = weights_from_potential(P, x);
  double best = -std::numeric_limits<double>::infinity();
  for (double b : config.loss.outcomes()) {
    const auto next = shifted(x, regret_increment(p, f, b, config.loss), root_n);
    best = std::max(best, lookahead_value(config, P, next, t + 1, depth - 1, root_n));
  }
  return best;
}

}  // namespace detail

/// Exhaustive depth-limited search over future outcomes against the known
/// forecaster and expert policies; depth 1 coincides with greedy.
inline double lookahead_adversary(const GameConfig& config, const RegretVector& x, std::size_t t,
                                  std::span<const double> f) {
  const Potential P = config.potential();
  const double root_n = std::sqrt(static_cast<double>(config.horizon));
  const WeightVector p = weights_from_potential(P, x);
  double best_b = config.loss.outcomes().front();
  double best = -std::numeric_limits<double>::infinity();
  for (double b : config.loss.outcomes()) {
    const auto next = detail::shifted(x, regret_increment(p, f, b, config.loss), root_n);
    const double v = detail::lookahead_value(config, P, next, t + 1, config.lookahead_depth - 1, root_n);
    if (v > best + detail::kTieMargin) {
      best = v;
      best_b = b;
    }
  }
  return best_b;
}

struct GameViolation {
  std::size_t round = 0;
  std::string message;

  friend bool operator==(const GameViolation&, const GameViolation&) = default;
};

struct GameTranscript {
  GameConfig config;
  std::vector<RoundRecord> rounds;                 // averaged mode
  std::vector<RandomizedRound> randomized_rounds;  // randomized mode
  std::size_t rounds_played = 0;
  double final_regret = 0.0;  // expected regret in randomized mode
  double sampled_regret = 0.0;
  double bound_value = 0.0;
  bool bound_satisfied = false;
  double max_blackwell = -std::numeric_limits<double>::infinity();
  double max_telescoping = -std::numeric_limits<double>::infinity();
  std::optional<GameViolation> violation;

  bool ok() const noexcept { return bound_satisfied && !violation; }

  friend bool operator==(const GameTranscript&, const GameTranscript&) = default;
};

/// Folds rounds into regrets, certificate maxima and the first violation.
/// Shared by the simulator and the transcript parser so both produce
/// bit-identical summaries.
class TranscriptAudit {
 public:
  explicit TranscriptAudit(const GameConfig& config)
      : config_(config),
        expected_(config.experts),
        sampled_(config.experts),
        actions_(config.mode == GameMode::randomized ? std::optional<ActionSet>(action_set(config)) : std::nullopt) {}

  // Returns false once a round fails its certificates.
  bool add(const RoundRecord& rec) {
    expected_.add(rec, config_.loss);
    return note(rec.round, rec.blackwell_value, rec.telescoping_value);
  }

  bool add(const RandomizedRound& rec) {
    const ActionSet& a = *actions_;
    std::vector<double> losses(a.size());
    double mixed = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
      losses[j] = a.loss(j, rec.outcome);
      mixed += rec.distribution[j] * losses[j];
    }
    expected_.add(mixed, losses);
    sampled_.add(rec.sampled_loss, losses);
    return note(rec.round, rec.blackwell_value, rec.telescoping_value);
  }

  void finish(GameTranscript& t) const {
    t.rounds_played = played_;
    t.final_regret = expected_.regret();
    t.sampled_regret = config_.mode == GameMode::randomized ? sampled_.regret() : 0.0;
    t.bound_value = bound_constant(config_.potential(), config_.experts) * std::sqrt(static_cast<double>(config_.horizon));
    t.bound_satisfied = t.final_regret <= t.bound_value + kIdentityTolerance;
    t.max_blackwell = max_blackwell_;
    t.max_telescoping = max_telescoping_;
    t.violation = violation_;
  }

 private:
  bool note(std::size_t round, double blackwell, double telescoping) {
    ++played_;
    max_blackwell_ = std::max(max_blackwell_, blackwell);
    max_telescoping_ = std::max(max_telescoping_, telescoping);
    if (!violation_)
      if (auto why = round_violation(blackwell, telescoping)) violation_ = GameViolation{round, *why};
    return !violation_;
  }

  const GameConfig& config_;
  RegretAccumulator expected_;
  RegretAccumulator sampled_;
  std::optional<ActionSet> actions_;
  std::size_t played_ = 0;
  double max_blackwell_ = -std::numeric_limits<double>::infinity();
  double max_telescoping_ = -std::numeric_limits<double>::infinity();
  std::optional<GameViolation> violation_;
};

struct RunOptions {
  // Store rounds in the transcript; turn off for long runs that stream.
  bool keep_rounds = true;
  std::function<void(const RoundRecord&)> on_round;
  std::function<void(const RandomizedRound&)> on_randomized_round;
};

namespace detail {

inline double choose_outcome(const GameConfig& config, const Potential& P, const WeightVector& p,
                             std::span<const double> f, const RegretVector& x, std::size_t t) {
  switch (config.adversary) {
    case AdversaryPolicy::oblivious_seeded:
      return oblivious_outcome(config, t);
    case AdversaryPolicy::greedy:
      return greedy_adversary(p, f, x, config.loss, P, config.horizon);
    case AdversaryPolicy::minimax_lookahead:
      return lookahead_adversary(config, x, t, f);
  }
  return oblivious_outcome(config, t);
}

inline void run_averaged(const GameConfig& config, const RunOptions& opt, GameTranscript& out,
                         TranscriptAudit& audit) {
  const Potential P = config.potential();
  ForecasterState state(P, config.loss, config.horizon, config.experts);
  for (std::size_t t = 0; t < config.horizon; ++t) {
    const AdviceVector f = expert_advice(config, t);
    const Prediction pred = predict(state, f);
    const double b = choose_outcome(config, P, pred.weights, f, state.x(), t);
    auto [next, rec] = observe(state, f, b);
    const bool fine = audit.add(rec);
    if (opt.on_round) opt.on_round(rec);
    if (opt.keep_rounds) out.rounds.push_back(std::move(rec));
    if (!fine) return;
    state = std::move(next);
  }
}

// Outcomes may depend on the distribution but never on the drawn action, so
// every adversary here is oblivious to the forecaster's randomization.
inline void run_randomized(const GameConfig& config, const RunOptions& opt, GameTranscript& out,
                           TranscriptAudit& audit) {
  const Potential P = config.potential();
  const ActionSet actions = action_set(config);
  RandomizedState state(P, actions, config.horizon, CounterRng(config.seed).split(3));
  for (std::size_t t = 0; t < config.horizon; ++t) {
    double b = oblivious_outcome(config, t);
    if (config.adversary != AdversaryPolicy::oblivious_seeded) {
      // Greedy on the expected increment: pick the outcome pushing Phi up most.
      const WeightVector p = weights_from_potential(P, state.x());
      double best = -std::numeric_limits<double>::infinity();
      for (double cand : actions.outcomes()) {
        const auto next = shifted(state.x(), randomized_increment(p, cand, actions), state.sqrt_horizon());
        const double v = potential_value(P, next);
        if (v > best + kTieMargin) {
          best = v;
          b = cand;
        }
      }
    }
    auto [next, rec] = randomized_step(state, b);
    const bool fine = audit.add(rec);
    if (opt.on_randomized_round) opt.on_randomized_round(rec);
    if (opt.keep_rounds) out.randomized_rounds.push_back(std::move(rec));
    if (!fine) return;
    state = std::move(next);
  }
}

}  // namespace detail

/// Plays one game and audits the regret bound and every per-round
/// certificate. A failed certificate stops the game; the transcript then
/// carries the violation and the rounds played so far.
inline GameTranscript run_game(const GameConfig& config, const RunOptions& opt = {}) {
  config.validate();
  GameTranscript out;
  out.config = config;
  TranscriptAudit audit(out.config);
  if (config.mode == GameMode::averaged)
    detail::run_averaged(config, opt, out, audit);
  else
    detail::run_randomized(config, opt, out, audit);
  audit.finish(out);
  return out;
}

enum class SweepParameter { eta, experts, horizon };

inline SweepParameter parse_sweep_parameter(std::string_view s) {
  if (s == "eta") return SweepParameter::eta;
  if (s == "experts" || s == "N") return SweepParameter::experts;
  if (s == "horizon" || s == "n") return SweepParameter::horizon;
  throw InputError("unknown sweep parameter '" + std::string(s) + "' (expected eta, experts or horizon)");
}

struct SweepRow {
  double param = 0.0;
  double regret = 0.0;
  double bound = 0.0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

inline GameConfig with_parameter(GameConfig config, SweepParameter which, double value) {
  auto as_count = [](double v) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e12) throw InputError("sweep value must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  switch (which) {
    case SweepParameter::eta:
      config.eta = value;
      break;
    case SweepParameter::experts:
      config.experts = as_count(value);
      break;
    case SweepParameter::horizon:
      config.horizon = as_count(value);
      break;
  }
  return config;
}

/// One game per value on a small worker pool; rows come back in input order.
inline std::vector<SweepRow> sweep(const GameConfig& base, SweepParameter which, std::span<const double> values) {
  std::vector<GameConfig> configs;
  configs.reserve(values.size());
  for (double v : values) {
    configs.push_back(with_parameter(base, which, v));
    configs.back().validate();
  }
  std::vector<std::optional<GameTranscript>> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < configs.size(); k = next++) {
      try {
        RunOptions opt;
        opt.keep_rounds = false;
        results[k] = run_game(configs[k], opt);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(configs.size(), std::max(1U, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (std::size_t k = 0; k < configs.size(); ++k) {
    if (errors[k]) std::rethrow_exception(errors[k]);
    const GameTranscript& t = *results[k];
    if (t.violation) throw InvariantViolation(t.violation->round, t.violation->message);
    rows.push_back({values[k], t.final_regret, t.bound_value});
  }
  return rows;
}

}  // namespace potforecast
