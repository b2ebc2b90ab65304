#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/rng.hpp"

namespace potforecast {

/// A one-dimensional C^2 function given by value and first two derivatives.
struct ScalarFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
};

/// Dense row-major square matrix; only what the Hessian code needs.
class SquareMatrix {
 public:
  explicit SquareMatrix(std::size_t n = 0) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  double quadratic_form(std::span<const double> h) const {
    if (h.size() != n_) throw InputError("dimension mismatch in quadratic form");
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) s += h[i] * (*this)(i, j) * h[j];
    return s;
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// Smooth dominating function Phi of the regret state, together with the
/// constant c bounding (1/2)<Phi_xx(x) h, h> over |h_i| <= 1.
///
/// Two families:
///   exponential:  Phi(x) = (1/eta) ln sum_i exp(eta x_i), with c = eta/2
///   composite:    Phi(x) = psi(sum_i phi(x_i)) with psi concave, phi convex
class Potential {
 public:
  enum class Kind { exponential, composite };

  static Potential exponential(double eta) { return exponential(eta, eta / 2.0); }

  static Potential exponential(double eta, double hessian_constant) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InputError("eta must be positive and finite");
    check_constant(hessian_constant);
    Potential p;
    p.kind_ = Kind::exponential;
    p.eta_ = eta;
    p.c_ = hessian_constant;
    return p;
  }

  static Potential composite(ScalarFunction psi, ScalarFunction phi, double hessian_constant) {
    if (!psi.value || !psi.first || !psi.second || !phi.value || !phi.first || !phi.second)
      throw InputError("composite potential needs value and two derivatives for psi and phi");
    check_constant(hessian_constant);
    Potential p;
    p.kind_ = Kind::composite;
    p.c_ = hessian_constant;
    p.parts_ = std::make_shared<const Parts>(Parts{std::move(psi), std::move(phi)});
    return p;
  }

  // The exponential potential written through the composite interface:
  // psi(s) = ln(s)/eta, phi(x) = exp(eta x). No max-shift, so keep |eta x| < ~700.
  static Potential exponential_as_composite(double eta) {
    if (!(eta > 0.0)) throw InputError("eta must be positive");
    ScalarFunction psi{"log/eta", [eta](double s) { return std::log(s) / eta; },
                       [eta](double s) { return 1.0 / (eta * s); },
                       [eta](double s) { return -1.0 / (eta * s * s); }};
    ScalarFunction phi{"exp", [eta](double x) { return std::exp(eta * x); },
                       [eta](double x) { return eta * std::exp(eta * x); },
                       [eta](double x) { return eta * eta * std::exp(eta * x); }};
    Potential p = composite(std::move(psi), std::move(phi), eta / 2.0);
    p.eta_ = eta;
    return p;
  }

  Kind kind() const noexcept { return kind_; }
  // Learning rate; zero for a composite potential not built from exp.
  double eta() const noexcept { return eta_; }
  double hessian_constant() const noexcept { return c_; }

  Potential with_hessian_constant(double c) const {
    check_constant(c);
    Potential p = *this;
    p.c_ = c;
    return p;
  }

  const ScalarFunction& psi() const { return require_parts().psi; }
  const ScalarFunction& phi() const { return require_parts().phi; }

  friend bool operator==(const Potential& a, const Potential& b) {
    return a.kind_ == b.kind_ && a.eta_ == b.eta_ && a.c_ == b.c_ && a.parts_ == b.parts_;
  }

 private:
  struct Parts {
    ScalarFunction psi;
    ScalarFunction phi;
  };

  Potential() = default;

  static void check_constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InputError("hessian constant must be nonnegative and finite");
  }

  const Parts& require_parts() const {
    if (!parts_) throw InputError("not a composite potential");
    return *parts_;
  }

  Kind kind_ = Kind::exponential;
  double eta_ = 0.0;
  double c_ = 0.0;
  std::shared_ptr<const Parts> parts_;
};

/// Learning rate minimizing eta/2 + ln(N)/eta. For N = 1 the minimizer is 0,
/// which is not a valid rate, so 1 is used.
inline double default_eta(std::size_t experts) {
  if (experts == 0) throw InputError("expert count must be positive");
  if (experts == 1) return 1.0;
  return std::sqrt(2.0 * std::log(static_cast<double>(experts)));
}

namespace detail {

inline void check_finite(std::span<const double> x) {
  if (x.empty()) throw InputError("regret vector must be nonempty");
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("regret vector has a non-finite entry");
}

// softmax(eta * x) with the max shift.
inline std::vector<double> softmax(double eta, std::span<const double> x) {
  const double m = max_coordinate(x);
  std::vector<double> q(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    q[i] = std::exp(eta * (x[i] - m));
    s += q[i];
  }
  for (double& v : q) v /= s;
  return q;
}

inline double phi_sum(const Potential& P, std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += P.phi().value(v);
  return s;
}

}  // namespace detail

inline double potential_value(const Potential& P, std::span<const double> x) {
  detail::check_finite(x);
  if (P.kind() == Potential::Kind::exponential) {
    const double m = max_coordinate(x);
    double s = 0.0;
    for (double v : x) s += std::exp(P.eta() * (v - m));
    return m + std::log(s) / P.eta();
  }
  return P.psi().value(detail::phi_sum(P, x));
}

inline std::vector<double> potential_gradient(const Potential& P, std::span<const double> x) {
  detail::check_finite(x);
  if (P.kind() == Potential::Kind::exponential) return detail::softmax(P.eta(), x);
  const double outer = P.psi().first(detail::phi_sum(P, x));
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = outer * P.phi().first(x[i]);
  return g;
}

/// Normalized gradient. A gradient summing to at most 1e-300 gives uniform
/// weights, which is always admissible since every simplex point satisfies
/// the Blackwell inequality against a zero direction.
inline WeightVector weights_from_potential(const Potential& P, std::span<const double> x) {
  std::vector<double> g = potential_gradient(P, x);
  double s = 0.0;
  for (double& v : g) {
    if (v < 0.0) throw InputError("potential gradient has a negative component (potential not monotone)");
    s += v;
  }
  if (!(s > 1e-300)) return WeightVector::uniform(x.size());
  for (double& v : g) v /= s;
  return WeightVector(std::move(g));
}

/// Exact Hessian Phi_xx(x).
inline SquareMatrix potential_hessian(const Potential& P, std::span<const double> x) {
  detail::check_finite(x);
  const std::size_t n = x.size();
  SquareMatrix H(n);
  if (P.kind() == Potential::Kind::exponential) {
    const auto q = detail::softmax(P.eta(), x);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) H(i, j) = P.eta() * ((i == j ? q[i] : 0.0) - q[i] * q[j]);
    return H;
  }
  const double s = detail::phi_sum(P, x);
  const double d1 = P.psi().first(s);
  const double d2 = P.psi().second(s);
  std::vector<double> dphi(n);
  for (std::size_t i = 0; i < n; ++i) dphi[i] = P.phi().first(x[i]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      H(i, j) = d2 * dphi[i] * dphi[j] + (i == j ? d1 * P.phi().second(x[i]) : 0.0);
  return H;
}

/// <Phi_xx(x) h, h> at a fixed x, prepared once and evaluated for many h.
/// Exponential: eta (sum q_i h_i^2 - (sum q_i h_i)^2) with q = softmax(eta x).
/// Composite: the upper bound psi'(S) sum phi''(x_i) h_i^2, S = sum phi(x_k).
class HessianForm {
 public:
  HessianForm(const Potential& P, std::span<const double> x) : exponential_(P.kind() == Potential::Kind::exponential) {
    detail::check_finite(x);
    if (exponential_) {
      eta_ = P.eta();
      weights_ = detail::softmax(eta_, x);
    } else {
      const double outer = P.psi().first(detail::phi_sum(P, x));
      weights_.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) weights_[i] = outer * P.phi().second(x[i]);
    }
  }

  std::size_t size() const noexcept { return weights_.size(); }

  double operator()(std::span<const double> h) const {
    if (h.size() != weights_.size()) throw InputError("direction has the wrong dimension");
    double second = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      second += weights_[i] * h[i] * h[i];
      first += weights_[i] * h[i];
    }
    return exponential_ ? eta_ * (second - first * first) : second;
  }

 private:
  bool exponential_;
  double eta_ = 0.0;
  std::vector<double> weights_;
};

inline double hessian_quadratic_form(const Potential& P, std::span<const double> x, std::span<const double> h) {
  for (double v : h)
    if (!(std::abs(v) <= 1.0 + kSimplexTolerance)) throw InputError("direction entries must satisfy |h_i| <= 1");
  return HessianForm(P, x)(h);
}

/// c + Phi(0): the constant C in R_n <= C sqrt(n).
inline double bound_constant(const Potential& P, std::size_t experts) {
  const std::vector<double> zero(experts, 0.0);
  return P.hessian_constant() + potential_value(P, zero);
}

struct SupersolutionReport {
  std::size_t points_checked = 0;
  // max over points of g(x) - Phi(x); <= 0 when Phi dominates the max.
  double max_domination_violation = -std::numeric_limits<double>::infinity();
  // max over points and directions of (1/2)<Phi_xx h, h> - c.
  double max_hessian_excess = -std::numeric_limits<double>::infinity();
  double gradient_check_max_relerror = 0.0;
  double min_gradient_component = std::numeric_limits<double>::infinity();
  bool passed = false;

  bool monotone() const noexcept { return min_gradient_component >= -kSimplexTolerance; }
  bool gradient_ok() const noexcept { return gradient_check_max_relerror <= 1e-6; }
};

struct CertifyOptions {
  // Above this dimension the {-1,1}^N vertex scan is refused unless sampled
  // directions are requested.
  std::size_t max_vertex_dimension = 20;
  bool sampled_directions = false;
  std::size_t direction_samples = 4096;
  std::uint64_t seed = 0;
  double finite_difference_step = 1e-6;
  double grid_half_width = 3.0;
};

class VertexScanRefused : public InputError {
 public:
  explicit VertexScanRefused(std::size_t n)
      : InputError("vertex scan over {-1,1}^" + std::to_string(n) +
                   " refused (dimension above limit); use sampled directions") {}
};

/// Central-difference gradient check, infinity-norm relative error.
inline double gradient_relative_error(const Potential& P, std::span<const double> x, double step) {
  const auto g = potential_gradient(P, x);
  std::vector<double> xp(x.begin(), x.end());
  double err = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + step;
    const double up = potential_value(P, xp);
    xp[i] = x[i] - step;
    const double down = potential_value(P, xp);
    xp[i] = x[i];
    err = std::max(err, std::abs((up - down) / (2.0 * step) - g[i]));
    scale = std::max(scale, std::abs(g[i]));
  }
  return scale > 0.0 ? err / scale : err;
}

/// Numerical certificate for the potential conditions: domination of the
/// coordinate max, monotonicity, the Hessian bound on the unit box, and
/// gradient agreement with finite differences. Points are the given samples
/// plus an axis-aligned grid over [-3,3]^N (grid_per_axis = 0 adds none,
/// 1 adds the origin).
inline SupersolutionReport certify_supersolution(const Potential& P, std::span<const RegretVector> samples,
                                                 std::size_t grid_per_axis, const CertifyOptions& opt = {}) {
  if (samples.empty()) throw InputError("certification needs at least one sample point");
  const std::size_t n = samples.front().size();
  if (n == 0) throw InputError("sample points must be nonempty vectors");
  for (const auto& s : samples)
    if (s.size() != n) throw InputError("sample points differ in dimension");
  const bool scan_vertices = !opt.sampled_directions;
  if (scan_vertices && n > opt.max_vertex_dimension) throw VertexScanRefused(n);

  std::vector<RegretVector> points(samples.begin(), samples.end());
  if (grid_per_axis > 0) {
    const double total = std::pow(static_cast<double>(grid_per_axis), static_cast<double>(n));
    if (total > 1e6) throw InputError("grid has too many points (" + std::to_string(total) + ")");
    std::vector<double> axis(grid_per_axis, 0.0);
    if (grid_per_axis > 1)
      for (std::size_t k = 0; k < grid_per_axis; ++k)
        axis[k] = -opt.grid_half_width + 2.0 * opt.grid_half_width * static_cast<double>(k) /
                                             static_cast<double>(grid_per_axis - 1);
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      RegretVector x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = axis[idx[i]];
      points.push_back(std::move(x));
      std::size_t d = 0;
      while (d < n && ++idx[d] == grid_per_axis) idx[d++] = 0;
      if (d == n) break;
    }
  }

  // Directions: all sign vertices with h_0 = +1 (h and -h give the same form),
  // or random sign vectors when the scan is too large.
  std::vector<std::vector<double>> directions;
  if (scan_vertices) {
    const std::uint64_t count = std::uint64_t{1} << (n - 1);
    directions.reserve(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      std::vector<double> h(n, 1.0);
      for (std::size_t i = 1; i < n; ++i) h[i] = (mask >> (i - 1)) & 1U ? -1.0 : 1.0;
      directions.push_back(std::move(h));
    }
  } else {
    const CounterRng rng = CounterRng(opt.seed).split(0x68);
    for (std::size_t k = 0; k < opt.direction_samples; ++k) {
      std::vector<double> h(n);
      for (std::size_t i = 0; i < n; ++i) h[i] = rng.bits(k * n + i) & 1U ? -1.0 : 1.0;
      directions.push_back(std::move(h));
    }
  }

  SupersolutionReport report;
  const double c = P.hessian_constant();
  for (const auto& x : points) {
    report.max_domination_violation =
        std::max(report.max_domination_violation, max_coordinate(x) - potential_value(P, x));
    for (double g : potential_gradient(P, x)) report.min_gradient_component = std::min(report.min_gradient_component, g);
    const HessianForm form(P, x);
    for (const auto& h : directions) report.max_hessian_excess = std::max(report.max_hessian_excess, 0.5 * form(h) - c);
    report.gradient_check_max_relerror =
        std::max(report.gradient_check_max_relerror, gradient_relative_error(P, x, opt.finite_difference_step));
    ++report.points_checked;
  }
  report.passed = report.max_domination_violation <= kSimplexTolerance && report.max_hessian_excess <= kSimplexTolerance;
  return report;
}

/// Seeded standard-normal sample points, as used by the CLI and the tests.
inline std::vector<RegretVector> normal_samples(std::size_t count, std::size_t dimension, std::uint64_t seed) {
  const CounterRng rng = CounterRng(seed).split(0x5a);
  std::vector<RegretVector> out(count, RegretVector(dimension));
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t i = 0; i < dimension; ++i) out[k][i] = rng.normal(k * dimension + i);
  return out;
}

}  // namespace potforecast
