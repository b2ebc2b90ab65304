#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/potentials.hpp"

namespace potforecast {

/// Scaled regret state of the potential-based forecaster at some round.
/// A value: observe() returns the successor instead of mutating.
class ForecasterState {
 public:
  ForecasterState(Potential potential, LossFunction loss, std::size_t horizon, std::size_t experts)
      : setup_(std::make_shared<const Setup>(Setup{std::move(potential), std::move(loss), horizon})),
        x_(experts, 0.0) {
    if (horizon == 0) throw InputError("horizon must be at least 1");
    if (experts == 0) throw InputError("expert count must be at least 1");
  }

  const RegretVector& x() const noexcept { return x_; }
  std::size_t round() const noexcept { return round_; }
  std::size_t horizon() const noexcept { return setup_->horizon; }
  std::size_t experts() const noexcept { return x_.size(); }
  bool finished() const noexcept { return round_ >= setup_->horizon; }
  const Potential& potential() const noexcept { return setup_->potential; }
  const LossFunction& loss() const noexcept { return setup_->loss; }
  double sqrt_horizon() const { return std::sqrt(static_cast<double>(setup_->horizon)); }

  ForecasterState advanced(RegretVector next) const {
    ForecasterState s = *this;
    s.x_ = std::move(next);
    ++s.round_;
    return s;
  }

 private:
  struct Setup {
    Potential potential;
    LossFunction loss;
    std::size_t horizon;
  };

  std::shared_ptr<const Setup> setup_;
  RegretVector x_;
  std::size_t round_ = 0;
};

struct Prediction {
  WeightVector weights;
  double prediction = 0.0;
};

inline void require_playable(const ForecasterState& state, std::span<const double> f) {
  if (state.finished())
    throw SequencingError("horizon of " + std::to_string(state.horizon()) + " rounds already played");
  if (f.size() != state.experts())
    throw InputError("expected " + std::to_string(state.experts()) + " advices, got " + std::to_string(f.size()));
  check_advice(state.loss(), f);
}

/// Weights are the normalized potential gradient at the current state; the
/// prediction is the weighted average of the advice.
inline Prediction predict(const ForecasterState& state, std::span<const double> f) {
  require_playable(state, f);
  WeightVector w = weights_from_potential(state.potential(), state.x());
  const double a = combine_advice(w, f);
  return {std::move(w), a};
}

/// Plays one round against outcome b. The record carries the Blackwell value
/// <Phi_x(x_t), r_t> and the per-round change of w(t,x) = c(1-t) + Phi(x).
inline std::pair<ForecasterState, RoundRecord> observe(const ForecasterState& state, std::span<const double> f,
                                                       double b) {
  auto [weights, prediction] = predict(state, f);
  if (!state.loss().is_outcome(b)) throw InputError("outcome " + std::to_string(b) + " not in the outcome set");
  const Potential& P = state.potential();

  RoundRecord rec;
  rec.round = state.round();
  rec.advice.assign(f.begin(), f.end());
  rec.increments = regret_increment(weights, f, b, state.loss());
  rec.weights = std::move(weights);
  rec.prediction = prediction;
  rec.outcome = b;
  rec.blackwell_value = dot(potential_gradient(P, state.x()), rec.increments);

  const double root_n = state.sqrt_horizon();
  RegretVector next = state.x();
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += rec.increments[i] / root_n;
  rec.telescoping_value = -P.hessian_constant() / static_cast<double>(state.horizon()) + potential_value(P, next) -
                          potential_value(P, state.x());
  return {state.advanced(std::move(next)), std::move(rec)};
}

/// First failed per-round certificate, if any.
inline std::optional<std::string> round_violation(double blackwell_value, double telescoping_value) {
  if (!(blackwell_value <= kSimplexTolerance))
    return "Blackwell inequality violated: <grad Phi, r> = " + format_double(blackwell_value);
  if (!(telescoping_value <= kSimplexTolerance))
    return "telescoping inequality violated: w increment = " + format_double(telescoping_value);
  return std::nullopt;
}

inline std::optional<std::string> round_violation(const RoundRecord& rec) {
  return round_violation(rec.blackwell_value, rec.telescoping_value);
}

struct ForecastRun {
  std::vector<RoundRecord> rounds;
  RegretVector final_state;
  double regret = 0.0;
  double bound = 0.0;
  bool bound_satisfied = false;
};

/// Plays the forecaster over fixed advice and outcome streams of equal
/// length n (which is also the horizon). Any failed per-round certificate
/// throws InvariantViolation with the round index.
inline ForecastRun run_forecast(const Potential& potential, const LossFunction& loss,
                                std::span<const AdviceVector> advice, std::span<const double> outcomes) {
  if (advice.size() != outcomes.size())
    throw SequencingError("advice stream has " + std::to_string(advice.size()) + " rounds, outcome stream " +
                          std::to_string(outcomes.size()));
  if (advice.empty()) throw SequencingError("streams must contain at least one round");

  ForecasterState state(potential, loss, advice.size(), advice.front().size());
  ForecastRun run;
  run.rounds.reserve(advice.size());
  RegretAccumulator acc(state.experts());
  for (std::size_t t = 0; t < advice.size(); ++t) {
    auto [next, rec] = observe(state, advice[t], outcomes[t]);
    if (auto why = round_violation(rec)) throw InvariantViolation(t, *why);
    acc.add(rec, loss);
    run.rounds.push_back(std::move(rec));
    state = std::move(next);
  }
  run.final_state = state.x();
  run.regret = acc.regret();
  run.bound = bound_constant(potential, state.experts()) * state.sqrt_horizon();
  run.bound_satisfied = run.regret <= run.bound + kIdentityTolerance;
  return run;
}

}  // namespace potforecast
