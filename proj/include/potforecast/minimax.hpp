#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/game.hpp"
#include "potforecast/potentials.hpp"
#include "potforecast/randomized.hpp"

namespace potforecast {

/// Nonnegative rational used for grid points, so that every reachable regret
/// state is an exact integer multiple of 1/(D sqrt(n)).
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den) {
    if (den <= 0) throw InputError("rational needs a positive denominator");
    const std::int64_t g = std::gcd(num, den);
    return {num / g, den / g};
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend auto operator<=>(const Rational& a, const Rational& b) { return a.num * b.den <=> b.num * a.den; }
};

/// Accepts "p/q", integers, and plain decimals such as "0.25".
inline Rational parse_rational(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  auto parse_int = [&](std::string_view part) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size())
      throw InputError("not a rational: '" + std::string(s) + "'");
    return v;
  };
  if (const auto slash = s.find('/'); slash != std::string_view::npos)
    return Rational::make(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
  if (const auto dot = s.find('.'); dot != std::string_view::npos) {
    const std::string_view frac = s.substr(dot + 1);
    if (frac.size() > 9) throw InputError("too many decimals in '" + std::string(s) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t whole = dot == 0 ? 0 : parse_int(s.substr(0, dot));
    return Rational::make(whole * den + (frac.empty() ? 0 : parse_int(frac)), den);
  }
  return Rational::make(parse_int(s), 1);
}

/// All points k/m of the simplex with integer k summing to m, in
/// lexicographic order of k.
inline std::vector<std::vector<int>> simplex_grid(std::size_t dimension, int resolution) {
  if (dimension == 0 || resolution <= 0) throw InputError("simplex grid needs dimension and resolution >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> k(dimension, 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i + 1 == dimension) {
      k[i] = left;
      out.push_back(k);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      k[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, resolution);
  return out;
}

/// A desk-scale instance of the worst-case regret game with discretized
/// expert, forecaster and adversary choices.
struct DiscreteGameSpec {
  static constexpr std::size_t kMaxHorizon = 6;
  static constexpr std::size_t kMaxExperts = 3;
  static constexpr std::size_t kMaxAdvicePoints = 5;
  static constexpr std::size_t kMaxOutcomes = 3;
  static constexpr int kMaxResolution = 20;

  std::size_t horizon = 1;
  std::size_t experts = 2;
  std::vector<Rational> advice_grid{{0, 1}, {1, 2}, {1, 1}};
  int simplex_resolution = 20;  // simplex grid step 1/resolution
  std::vector<Rational> outcomes{{0, 1}, {1, 1}};
  LossKind loss = LossKind::absolute;

  LossFunction loss_function() const {
    std::vector<double> b;
    for (const auto& o : outcomes) b.push_back(o.value());
    return loss == LossKind::squared ? LossFunction::squared(0.0, 1.0, b) : LossFunction::absolute(0.0, 1.0, b);
  }

  void validate() const {
    if (horizon == 0 || horizon > kMaxHorizon) throw InputError("minimax horizon must be in [1, 6]");
    if (experts == 0 || experts > kMaxExperts) throw InputError("minimax expert count must be in [1, 3]");
    if (advice_grid.empty() || advice_grid.size() > kMaxAdvicePoints)
      throw InputError("advice grid must have 1 to 5 points");
    if (outcomes.empty() || outcomes.size() > kMaxOutcomes) throw InputError("outcome set must have 1 to 3 points");
    if (simplex_resolution <= 0 || simplex_resolution > kMaxResolution)
      throw InputError("simplex resolution must be in [1, 20]");
    if (loss == LossKind::custom) throw InputError("minimax supports the absolute and squared losses only");
    for (const auto& grid : {advice_grid, outcomes})
      for (const auto& r : grid)
        if (r.num < 0 || r.num > r.den) throw InputError("grid points must lie in [0, 1]");
  }

  friend bool operator==(const DiscreteGameSpec&, const DiscreteGameSpec&) = default;
};

using StateKey = std::array<std::int64_t, DiscreteGameSpec::kMaxExperts>;

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto v : k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Exact regret increments of one round, scaled by the common denominator:
/// increments(f, p, b)[i] * (1/scale) = l(<p,f>,b) - l(f_i,b).
class IncrementTable {
 public:
  explicit IncrementTable(const DiscreteGameSpec& spec) : spec_(spec) {
    spec.validate();
    const std::size_t n = spec.experts;
    std::int64_t lf = 1;
    for (const auto& a : spec.advice_grid) lf = std::lcm(lf, a.den);
    std::int64_t lb = 1;
    for (const auto& b : spec.outcomes) lb = std::lcm(lb, b.den);
    const std::int64_t m = spec.simplex_resolution;
    const std::int64_t q = m * lf * lb;
    scale_ = spec.loss == LossKind::squared ? q * q : q;

    simplex_ = simplex_grid(n, spec.simplex_resolution);
    advice_count_ = 1;
    for (std::size_t i = 0; i < n; ++i) advice_count_ *= spec.advice_grid.size();

    auto scaled_loss = [&](std::int64_t a_q, std::int64_t b_q) {
      const std::int64_t d = a_q - b_q;
      return spec.loss == LossKind::squared ? d * d : (d < 0 ? -d : d);
    };

    table_.resize(advice_count_ * simplex_.size() * spec.outcomes.size());
    std::vector<std::int64_t> f_int(n);  // f_i * lf
    for (std::size_t fi = 0; fi < advice_count_; ++fi) {
      std::size_t code = fi;
      for (std::size_t i = 0; i < n; ++i) {
        const Rational& a = spec.advice_grid[code % spec.advice_grid.size()];
        code /= spec.advice_grid.size();
        f_int[i] = a.num * (lf / a.den);
      }
      for (std::size_t pi = 0; pi < simplex_.size(); ++pi) {
        std::int64_t a_int = 0;  // <p,f> * m * lf
        for (std::size_t i = 0; i < n; ++i) a_int += simplex_[pi][i] * f_int[i];
        for (std::size_t bi = 0; bi < spec.outcomes.size(); ++bi) {
          const Rational& b = spec.outcomes[bi];
          const std::int64_t b_q = b.num * (lb / b.den) * m * lf;
          const std::int64_t forecaster = scaled_loss(a_int * lb, b_q);
          StateKey r{};
          for (std::size_t i = 0; i < n; ++i) r[i] = forecaster - scaled_loss(f_int[i] * m * lb, b_q);
          table_[(fi * simplex_.size() + pi) * spec.outcomes.size() + bi] = r;
        }
      }
    }
  }

  const DiscreteGameSpec& spec() const noexcept { return spec_; }
  std::int64_t scale() const noexcept { return scale_; }
  std::size_t advice_count() const noexcept { return advice_count_; }
  std::size_t simplex_count() const noexcept { return simplex_.size(); }
  std::size_t outcome_count() const noexcept { return spec_.outcomes.size(); }
  std::size_t branching() const noexcept { return table_.size(); }
  const std::vector<std::vector<int>>& simplex() const noexcept { return simplex_; }

  const StateKey& at(std::size_t f, std::size_t p, std::size_t b) const {
    return table_[(f * simplex_.size() + p) * spec_.outcomes.size() + b];
  }

  std::size_t distinct_increments() const {
    std::vector<StateKey> v = table_;
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  }

 private:
  DiscreteGameSpec spec_;
  std::int64_t scale_ = 1;
  std::vector<std::vector<int>> simplex_;
  std::size_t advice_count_ = 1;
  std::vector<StateKey> table_;
};

/// Upper estimate of memoized work: states at level t are bounded by the
/// multisets of t increments and by the integer box [-tD, tD]^N, and every
/// state expands the full branching factor.
inline double memoized_work_estimate(const IncrementTable& table) {
  const auto& spec = table.spec();
  const double k = static_cast<double>(table.distinct_increments());
  const double box_side = static_cast<double>(table.scale());
  double work = 0.0;
  double multisets = 1.0;  // C(k + t - 1, t)
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    if (t > 0) multisets *= (k + static_cast<double>(t) - 1.0) / static_cast<double>(t);
    const double box = std::pow(2.0 * static_cast<double>(t) * box_side + 1.0, static_cast<double>(spec.experts));
    work += std::min(multisets, box) * static_cast<double>(table.branching());
  }
  return work;
}

/// Backward induction of v(t, x) = max_f min_p max_b v(t+1, x + r(p,f,b)/sqrt(n)),
/// v(n, x) = max_i x_i, over the grids of a DiscreteGameSpec. States are
/// origin + s/(D sqrt(n)) with integer s, memoized per level.
class MinimaxSolver {
 public:
  MinimaxSolver(const DiscreteGameSpec& spec, RegretVector origin = {}) : table_(spec), origin_(std::move(origin)) {
    if (origin_.empty()) origin_.assign(spec.experts, 0.0);
    if (origin_.size() != spec.experts) throw InputError("origin has the wrong dimension");
    for (double v : origin_)
      if (!std::isfinite(v)) throw InputError("origin must be finite");
    const double work = memoized_work_estimate(table_);
    if (work > kSearchBudget) throw BudgetExceeded(work, kSearchBudget);
    memo_.resize(spec.horizon + 1);
    root_n_ = std::sqrt(static_cast<double>(spec.horizon));
  }

  const IncrementTable& table() const noexcept { return table_; }
  const RegretVector& origin() const noexcept { return origin_; }

  // (s_i / D) / sqrt(n) with s_i/D a single correctly rounded quotient, so
  // the value depends only on the rational s_i/D and not its representation.
  RegretVector state(const StateKey& s) const {
    RegretVector x = origin_;
    const auto scale = static_cast<double>(table_.scale());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += static_cast<double>(s[i]) / scale / root_n_;
    return x;
  }

  double value(std::size_t t, const StateKey& s = {}) {
    const auto& spec = table_.spec();
    if (t > spec.horizon) throw InputError("round beyond the horizon");
    if (t == spec.horizon) return max_coordinate(state(s));
    auto& level = memo_[t];
    if (auto it = level.find(s); it != level.end()) return it->second;

    double best_f = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < table_.advice_count(); ++f) {
      double best_p = std::numeric_limits<double>::infinity();
      for (std::size_t p = 0; p < table_.simplex_count() && best_p > best_f; ++p) {
        double worst_b = -std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < table_.outcome_count() && worst_b < best_p; ++b)
          worst_b = std::max(worst_b, value(t + 1, add(s, table_.at(f, p, b))));
        best_p = std::min(best_p, worst_b);
      }
      best_f = std::max(best_f, best_p);
    }
    ++expanded_;
    level.emplace(s, best_f);
    return best_f;
  }

  std::size_t expanded() const noexcept { return expanded_; }

  // Memoized values per level; the terminal level is never stored.
  const std::vector<std::unordered_map<StateKey, double, StateKeyHash>>& memo() const noexcept { return memo_; }

  StateKey add(const StateKey& a, const StateKey& b) const {
    StateKey c{};
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = a[i] + b[i];
    return c;
  }

 private:
  IncrementTable table_;
  RegretVector origin_;
  double root_n_ = 1.0;
  std::vector<std::unordered_map<StateKey, double, StateKeyHash>> memo_;
  std::size_t expanded_ = 0;
};

/// v^n(t, x) on the grids of a DiscreteGameSpec.
inline double minimax_value(const DiscreteGameSpec& spec, std::size_t t, const RegretVector& x) {
  if (t == spec.horizon) return max_coordinate(x);
  MinimaxSolver solver(spec, x);
  return solver.value(t);
}

/// Rows `t,x_1..x_N,value` for every memoized state, sorted by t then state.
inline void write_value_table(std::ostream& out, const MinimaxSolver& solver) {
  const std::size_t n = solver.table().spec().experts;
  for (std::size_t t = 0; t < solver.memo().size(); ++t) {
    std::map<StateKey, double> sorted(solver.memo()[t].begin(), solver.memo()[t].end());
    for (const auto& [key, value] : sorted) {
      out << t;
      const RegretVector x = solver.state(key);
      for (std::size_t i = 0; i < n; ++i) out << ',' << format_double(x[i]);
      out << ',' << format_double(value) << '\n';
    }
  }
}

namespace detail {

inline double strategy_worst_case(const IncrementTable& table, const Potential& P, const LossFunction& loss,
                                  const std::vector<AdviceVector>& advice, const RegretVector& x, std::size_t t,
                                  double root_n) {
  const auto& spec = table.spec();
  if (t == spec.horizon) return max_coordinate(x);
  const WeightVector p = weights_from_potential(P, x);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& f : advice)
    for (double b : loss.outcomes()) {
      const auto r = regret_increment(p, f, b, loss);
      RegretVector next = x;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += r[i] / root_n;
      worst = std::max(worst, strategy_worst_case(table, P, loss, advice, next, t + 1, root_n));
    }
  return worst;
}

}  // namespace detail

struct BoundAudit {
  double minimax_value = 0.0;     // grid minimax v^n(0, 0)
  double strategy_value = 0.0;    // worst case of the potential strategy on the grids
  double potential_bound = 0.0;   // c + Phi(0)
  std::size_t states_expanded = 0;

  bool lower_holds() const noexcept { return minimax_value <= strategy_value + kIdentityTolerance; }
  bool upper_holds() const noexcept { return strategy_value <= potential_bound + kIdentityTolerance; }
  bool holds() const noexcept { return lower_holds() && upper_holds(); }
};

/// Checks minimax value <= potential strategy's exhaustive worst case <= c + Phi(0).
/// The middle term keeps the exact sup over the advice and outcome grids but
/// replaces the inf over weights by the potential's weights.
inline BoundAudit bound_audit(const DiscreteGameSpec& spec, const Potential& P) {
  MinimaxSolver solver(spec);
  const auto& table = solver.table();
  const double tree = std::pow(static_cast<double>(table.advice_count() * table.outcome_count()),
                               static_cast<double>(spec.horizon));
  if (tree > kSearchBudget) throw BudgetExceeded(tree, kSearchBudget);

  BoundAudit audit;
  audit.minimax_value = solver.value(0);
  audit.states_expanded = solver.expanded();

  std::vector<AdviceVector> advice;
  for (std::size_t fi = 0; fi < table.advice_count(); ++fi) {
    AdviceVector f(spec.experts);
    std::size_t code = fi;
    for (std::size_t i = 0; i < spec.experts; ++i) {
      f[i] = spec.advice_grid[code % spec.advice_grid.size()].value();
      code /= spec.advice_grid.size();
    }
    advice.push_back(std::move(f));
  }
  const LossFunction loss = spec.loss_function();
  audit.strategy_value = detail::strategy_worst_case(table, P, loss, advice, RegretVector(spec.experts, 0.0), 0,
                                                     std::sqrt(static_cast<double>(spec.horizon)));
  audit.potential_bound = bound_constant(P, spec.experts);
  return audit;
}

struct GEvaluation {
  double value = 0.0;
  std::size_t feasible_points = 0;
  WeightVector minimizer;
};

class InfeasibleGrid : public InputError {
 public:
  InfeasibleGrid() : InputError("no grid point satisfies the Blackwell constraint for this gamma") {}
};

/// Discretized G(gamma, S) = (1/2) min over p in Gamma(gamma) of max over b of
/// <S r(p,b), r(p,b)>, where Gamma(gamma) = {p : <gamma, r(p,b)> <= 0 for all b}
/// and r is the randomized-prediction regret. The grid is the simplex at
/// step 1/resolution plus gamma/<gamma,1> when gamma != 0.
inline GEvaluation evaluate_G_randomized(std::span<const double> gamma, const SquareMatrix& S,
                                         const ActionSet& actions, int resolution) {
  const std::size_t n = actions.size();
  if (gamma.size() != n || S.size() != n) throw InputError("gamma, S and the action set differ in dimension");
  double total = 0.0;
  for (double g : gamma) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InputError("gamma must be nonnegative and finite");
    total += g;
  }
  std::vector<WeightVector> grid;
  for (const auto& k : simplex_grid(n, resolution)) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(k[i]) / static_cast<double>(resolution);
    grid.emplace_back(std::move(w));
  }
  if (total > 0.0) {
    std::vector<double> w(gamma.begin(), gamma.end());
    for (double& v : w) v /= total;
    grid.emplace_back(std::move(w));
  }

  GEvaluation out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& p : grid) {
    bool feasible = true;
    double worst = -std::numeric_limits<double>::infinity();
    for (double b : actions.outcomes()) {
      const auto r = randomized_increment(p, b, actions);
      if (dot(gamma, r) > kSimplexTolerance) {
        feasible = false;
        break;
      }
      worst = std::max(worst, 0.5 * S.quadratic_form(r));
    }
    if (!feasible) continue;
    ++out.feasible_points;
    if (worst < out.value) {
      out.value = worst;
      out.minimizer = p;
    }
  }
  if (out.feasible_points == 0) throw InfeasibleGrid();
  return out;
}

}  // namespace potforecast
