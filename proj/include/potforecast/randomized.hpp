#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/forecaster.hpp"
#include "potforecast/potentials.hpp"
#include "potforecast/rng.hpp"

namespace potforecast {

/// Finite action set {y_1..y_N} with its loss tabulated against each outcome.
/// No convexity is required: the randomized forecaster only mixes losses.
class ActionSet {
 public:
  ActionSet(std::vector<double> actions, const LossFunction& loss)
      : actions_(std::move(actions)), outcomes_(loss.outcomes()) {
    if (actions_.empty()) throw InputError("action set must be nonempty");
    table_.resize(actions_.size() * outcomes_.size());
    for (std::size_t i = 0; i < actions_.size(); ++i)
      for (std::size_t k = 0; k < outcomes_.size(); ++k) table_[i * outcomes_.size() + k] = loss(actions_[i], outcomes_[k]);
    name_ = loss.name();
  }

  // table[i][k] = l(y_i, outcomes[k]).
  ActionSet(std::string name, std::vector<double> actions, std::vector<double> outcomes,
            const std::vector<std::vector<double>>& table)
      : name_(std::move(name)), actions_(std::move(actions)), outcomes_(std::move(outcomes)) {
    if (actions_.empty() || outcomes_.empty()) throw InputError("action and outcome sets must be nonempty");
    if (table.size() != actions_.size()) throw InputError("loss table needs one row per action");
    for (const auto& row : table) {
      if (row.size() != outcomes_.size()) throw InputError("loss table needs one column per outcome");
      for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("tabulated losses must lie in [0,1]");
        table_.push_back(v);
      }
    }
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return actions_.size(); }
  const std::vector<double>& actions() const noexcept { return actions_; }
  const std::vector<double>& outcomes() const noexcept { return outcomes_; }

  std::size_t outcome_index(double b) const {
    for (std::size_t k = 0; k < outcomes_.size(); ++k)
      if (std::abs(outcomes_[k] - b) <= kSimplexTolerance) return k;
    throw InputError("outcome " + std::to_string(b) + " not in the outcome set");
  }

  double loss(std::size_t action, double b) const { return table_.at(action * outcomes_.size() + outcome_index(b)); }

  friend bool operator==(const ActionSet&, const ActionSet&) = default;

 private:
  std::string name_;
  std::vector<double> actions_;
  std::vector<double> outcomes_;
  std::vector<double> table_;
};

/// Three actions over outcomes {0,1} whose loss is not convex in the action:
/// the middle action is bad against both outcomes.
inline ActionSet nonconvex_fixture() {
  return ActionSet("nonconvex3", {0.0, 0.5, 1.0}, {0.0, 1.0}, {{0.0, 1.0}, {0.9, 0.9}, {1.0, 0.0}});
}

/// Evenly spaced actions i/(N-1) in [0,1] under a built-in loss.
inline ActionSet grid_actions(std::size_t n, const LossFunction& loss) {
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; n > 1 && i < n; ++i)
    y[i] = loss.lower() + (loss.upper() - loss.lower()) * static_cast<double>(i) / static_cast<double>(n - 1);
  return ActionSet(std::move(y), loss);
}

/// r^i(p, b) = sum_j p^j l(y_j, b) - l(y_i, b).
inline std::vector<double> randomized_increment(const WeightVector& p, double b, const ActionSet& actions) {
  if (p.size() != actions.size()) throw InputError("distribution and action set differ in size");
  double mixed = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) mixed += p[j] * actions.loss(j, b);
  std::vector<double> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = mixed - actions.loss(i, b);
  return r;
}

struct RandomizedRound {
  std::size_t round = 0;
  WeightVector distribution;
  std::size_t sampled_action = 0;  // zero-based
  double outcome = 0.0;
  std::vector<double> expected_increment;
  double sampled_loss = 0.0;
  double blackwell_value = 0.0;
  double telescoping_value = 0.0;

  friend bool operator==(const RandomizedRound&, const RandomizedRound&) = default;
};

class RandomizedState {
 public:
  RandomizedState(Potential potential, ActionSet actions, std::size_t horizon, CounterRng rng)
      : setup_(std::make_shared<const Setup>(Setup{std::move(potential), std::move(actions), horizon, rng})),
        x_(setup_->actions.size(), 0.0) {
    if (horizon == 0) throw InputError("horizon must be at least 1");
  }

  const RegretVector& x() const noexcept { return x_; }
  std::size_t round() const noexcept { return round_; }
  std::size_t horizon() const noexcept { return setup_->horizon; }
  bool finished() const noexcept { return round_ >= setup_->horizon; }
  const Potential& potential() const noexcept { return setup_->potential; }
  const ActionSet& actions() const noexcept { return setup_->actions; }
  const CounterRng& rng() const noexcept { return setup_->rng; }
  double sqrt_horizon() const { return std::sqrt(static_cast<double>(setup_->horizon)); }

  RandomizedState advanced(RegretVector next) const {
    RandomizedState s = *this;
    s.x_ = std::move(next);
    ++s.round_;
    return s;
  }

 private:
  struct Setup {
    Potential potential;
    ActionSet actions;
    std::size_t horizon;
    CounterRng rng;
  };

  std::shared_ptr<const Setup> setup_;
  RegretVector x_;
  std::size_t round_ = 0;
};

/// One round of randomized play: distribution from the potential gradient,
/// an action drawn from it (counter = round), and the state moved by the
/// expected regret increment.
inline std::pair<RandomizedState, RandomizedRound> randomized_step(const RandomizedState& state, double b) {
  if (state.finished())
    throw SequencingError("horizon of " + std::to_string(state.horizon()) + " rounds already played");
  const Potential& P = state.potential();
  RandomizedRound rec;
  rec.round = state.round();
  rec.distribution = weights_from_potential(P, state.x());
  rec.outcome = b;
  rec.expected_increment = randomized_increment(rec.distribution, b, state.actions());
  rec.sampled_action = state.rng().categorical(state.round(), rec.distribution);
  rec.sampled_loss = state.actions().loss(rec.sampled_action, b);
  rec.blackwell_value = dot(potential_gradient(P, state.x()), rec.expected_increment);

  const double root_n = state.sqrt_horizon();
  RegretVector next = state.x();
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += rec.expected_increment[i] / root_n;
  rec.telescoping_value = -P.hessian_constant() / static_cast<double>(state.horizon()) + potential_value(P, next) -
                          potential_value(P, state.x());
  return {state.advanced(std::move(next)), std::move(rec)};
}

namespace detail {

template <typename ForecasterLoss>
double randomized_regret(std::span<const RandomizedRound> rounds, const ActionSet& actions, ForecasterLoss&& pick) {
  RegretAccumulator acc(actions.size());
  std::vector<double> losses(actions.size());
  for (const auto& r : rounds) {
    for (std::size_t j = 0; j < actions.size(); ++j) losses[j] = actions.loss(j, r.outcome);
    acc.add(pick(r, losses), losses);
  }
  return acc.regret();
}

}  // namespace detail

/// Distribution-weighted loss minus the best fixed action's loss.
inline double expected_regret(std::span<const RandomizedRound> rounds, const ActionSet& actions) {
  return detail::randomized_regret(rounds, actions, [](const RandomizedRound& r, const std::vector<double>& l) {
    double mixed = 0.0;
    for (std::size_t j = 0; j < l.size(); ++j) mixed += r.distribution[j] * l[j];
    return mixed;
  });
}

/// Loss of the drawn actions minus the best fixed action's loss.
inline double sampled_regret(std::span<const RandomizedRound> rounds, const ActionSet& actions) {
  return detail::randomized_regret(rounds, actions,
                                   [](const RandomizedRound& r, const std::vector<double>&) { return r.sampled_loss; });
}

/// Sampled regret of a replay that keeps the distributions and outcomes but
/// redraws the actions from another generator.
inline double resampled_regret(std::span<const RandomizedRound> rounds, const ActionSet& actions,
                               const CounterRng& rng) {
  return detail::randomized_regret(rounds, actions, [&rng](const RandomizedRound& r, const std::vector<double>& l) {
    return l[rng.categorical(r.round, r.distribution)];
  });
}

}  // namespace potforecast
