#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "potforecast/errors.hpp"

namespace potforecast {

// Simplex membership and one-sided inequality checks.
inline constexpr double kSimplexTolerance = 1e-12;
// Identities between two representations of the same quantity.
inline constexpr double kIdentityTolerance = 1e-9;

using AdviceVector = std::vector<double>;
using RegretVector = std::vector<double>;
using RegretIncrement = std::vector<double>;

/// A point of the probability simplex over N experts (or actions).
class WeightVector {
 public:
  WeightVector() = default;

  explicit WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw InputError("weight vector must be nonempty");
    double sum = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) throw InputError("weights must be finite and nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
      throw InputError("weights must sum to 1 (got " + std::to_string(sum) + ")");
  }

  static WeightVector uniform(std::size_t n) {
    if (n == 0) throw InputError("weight vector must be nonempty");
    return WeightVector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static WeightVector vertex(std::size_t n, std::size_t i) {
    if (i >= n) throw InputError("vertex index out of range");
    std::vector<double> w(n, 0.0);
    w[i] = 1.0;
    return WeightVector(std::move(w));
  }

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> values() const noexcept { return weights_; }
  const std::vector<double>& vector() const noexcept { return weights_; }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> weights_;
};

enum class LossKind { absolute, squared, custom };

/// Bounded loss l: A x B -> [0,1] with A a closed interval and B finite.
class LossFunction {
 public:
  using Callable = std::function<double(double, double)>;

  static LossFunction absolute(double lo = 0.0, double hi = 1.0, std::vector<double> outcomes = {0.0, 1.0}) {
    return LossFunction(LossKind::absolute, "absolute", lo, hi, std::move(outcomes), {});
  }

  static LossFunction squared(double lo = 0.0, double hi = 1.0, std::vector<double> outcomes = {0.0, 1.0}) {
    return LossFunction(LossKind::squared, "squared", lo, hi, std::move(outcomes), {});
  }

  // No convexity is assumed for a custom loss; the forecaster audits the
  // Blackwell inequality at runtime instead.
  static LossFunction custom(std::string name, Callable fn, double lo, double hi, std::vector<double> outcomes) {
    if (!fn) throw InputError("custom loss needs a callable");
    return LossFunction(LossKind::custom, std::move(name), lo, hi, std::move(outcomes), std::move(fn));
  }

  static LossFunction from_name(std::string_view name) {
    if (name == "absolute") return absolute();
    if (name == "squared") return squared();
    throw InputError("unknown loss '" + std::string(name) + "' (expected absolute or squared)");
  }

  LossKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }
  const std::vector<double>& outcomes() const noexcept { return outcomes_; }

  bool in_prediction_domain(double a) const noexcept {
    return a >= lo_ - kSimplexTolerance && a <= hi_ + kSimplexTolerance;
  }

  bool is_outcome(double b) const noexcept {
    return std::any_of(outcomes_.begin(), outcomes_.end(),
                       [b](double o) { return std::abs(o - b) <= kSimplexTolerance; });
  }

  double operator()(double a, double b) const {
    if (!in_prediction_domain(a))
      throw InputError("prediction " + std::to_string(a) + " outside [" + std::to_string(lo_) + ", " +
                       std::to_string(hi_) + "]");
    if (!is_outcome(b)) throw InputError("outcome " + std::to_string(b) + " not in the outcome set");
    a = std::clamp(a, lo_, hi_);
    double value = 0.0;
    switch (kind_) {
      case LossKind::absolute:
        value = std::abs(a - b);
        break;
      case LossKind::squared:
        value = (a - b) * (a - b);
        break;
      case LossKind::custom:
        value = fn_(a, b);
        break;
    }
    if (!(value >= 0.0 && value <= 1.0))
      throw InputError("loss " + name_ + " left [0,1] at a=" + std::to_string(a) + ", b=" + std::to_string(b));
    return value;
  }

  friend bool operator==(const LossFunction& lhs, const LossFunction& rhs) {
    return lhs.kind_ == rhs.kind_ && lhs.name_ == rhs.name_ && lhs.lo_ == rhs.lo_ && lhs.hi_ == rhs.hi_ &&
           lhs.outcomes_ == rhs.outcomes_;
  }

 private:
  LossFunction(LossKind kind, std::string name, double lo, double hi, std::vector<double> outcomes, Callable fn)
      : kind_(kind), name_(std::move(name)), lo_(lo), hi_(hi), outcomes_(std::move(outcomes)), fn_(std::move(fn)) {
    if (!(lo_ <= hi_)) throw InputError("empty prediction domain");
    if (outcomes_.empty()) throw InputError("outcome set must be nonempty");
    std::sort(outcomes_.begin(), outcomes_.end());
    outcomes_.erase(std::unique(outcomes_.begin(), outcomes_.end()), outcomes_.end());
  }

  LossKind kind_;
  std::string name_;
  double lo_;
  double hi_;
  std::vector<double> outcomes_;
  Callable fn_;
};

inline double evaluate_loss(const LossFunction& loss, double a, double b) { return loss(a, b); }

inline void check_advice(const LossFunction& loss, std::span<const double> f) {
  for (double v : f)
    if (!std::isfinite(v) || !loss.in_prediction_domain(v))
      throw InputError("advice " + std::to_string(v) + " outside the prediction domain");
}

/// Forecaster prediction <p, f>.
inline double combine_advice(const WeightVector& p, std::span<const double> f) {
  if (p.size() != f.size())
    throw InputError("dimension mismatch: " + std::to_string(p.size()) + " weights, " + std::to_string(f.size()) +
                     " advices");
  double a = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) a += p[i] * f[i];
  return a;
}

/// r^i = l(<p,f>, b) - l(f^i, b).
inline RegretIncrement regret_increment(const WeightVector& p, std::span<const double> f, double b,
                                        const LossFunction& loss) {
  const double forecaster_loss = loss(combine_advice(p, f), b);
  RegretIncrement r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = forecaster_loss - loss(f[i], b);
  return r;
}

inline double max_coordinate(std::span<const double> x) {
  if (x.empty()) throw InputError("empty vector has no maximum");
  return *std::max_element(x.begin(), x.end());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("dimension mismatch in inner product");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// One round of the averaged (weighted-advice) game.
struct RoundRecord {
  std::size_t round = 0;
  AdviceVector advice;
  WeightVector weights;
  double prediction = 0.0;
  double outcome = 0.0;
  RegretIncrement increments;
  double blackwell_value = 0.0;
  double telescoping_value = 0.0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

// Running forecaster loss and per-expert losses, summed in round order so
// that streamed and stored transcripts give bit-identical regrets.
class RegretAccumulator {
 public:
  explicit RegretAccumulator(std::size_t experts = 0) : expert_losses_(experts, 0.0) {}

  void add(double forecaster_loss, std::span<const double> expert_losses) {
    if (expert_losses_.empty()) expert_losses_.assign(expert_losses.size(), 0.0);
    if (expert_losses.size() != expert_losses_.size()) throw InputError("expert count changed mid-transcript");
    forecaster_loss_ += forecaster_loss;
    for (std::size_t i = 0; i < expert_losses.size(); ++i) expert_losses_[i] += expert_losses[i];
  }

  void add(const RoundRecord& rec, const LossFunction& loss) {
    std::vector<double> expert(rec.advice.size());
    for (std::size_t i = 0; i < rec.advice.size(); ++i) expert[i] = loss(rec.advice[i], rec.outcome);
    add(loss(rec.prediction, rec.outcome), expert);
  }

  // Lowest index wins ties.
  std::size_t best_expert() const {
    return static_cast<std::size_t>(std::min_element(expert_losses_.begin(), expert_losses_.end()) -
                                    expert_losses_.begin());
  }

  double regret() const {
    if (expert_losses_.empty()) return 0.0;
    return forecaster_loss_ - expert_losses_[best_expert()];
  }

  double forecaster_loss() const noexcept { return forecaster_loss_; }
  const std::vector<double>& expert_losses() const noexcept { return expert_losses_; }

 private:
  double forecaster_loss_ = 0.0;
  std::vector<double> expert_losses_;
};

/// Forecaster cumulative loss minus the best expert's cumulative loss.
inline double cumulative_regret(std::span<const RoundRecord> rounds, const LossFunction& loss) {
  RegretAccumulator acc;
  for (const auto& rec : rounds) acc.add(rec, loss);
  return acc.regret();
}

// Shortest decimal that parses back to the same double; locale independent.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InputError("cannot format number");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("not a number: '" + std::string(s) + "'");
  return v;
}

}  // namespace potforecast
