#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfg {

/// Malformed input: bad grid, wrong field length, negative density, bad config.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative solver hit its iteration cap. Carries the residual or update
/// history so callers can log it or retry with different settings.
class NonconvergenceError : public std::runtime_error {
 public:
  NonconvergenceError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace mfg
