#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace potforecast {

// Input outside a domain, dimension mismatch, malformed config.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Calls made in the wrong order: horizon exhausted, stream length mismatch.
class SequencingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A runtime certificate (Blackwell, telescoping) failed at a specific round.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::size_t round, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round) {}

  std::size_t round() const noexcept { return round_; }

 private:
  std::size_t round_;
};

// Exhaustive computation refused because its estimated size exceeds the budget.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(double required, double budget)
      : std::runtime_error("required work " + std::to_string(required) + " exceeds budget " +
                           std::to_string(budget)),
        required_(required),
        budget_(budget) {}

  double required() const noexcept { return required_; }
  double budget() const noexcept { return budget_; }

 private:
  double required_;
  double budget_;
};

}  // namespace potforecast
