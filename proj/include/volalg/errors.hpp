#ifndef VOLALG_ERRORS_HPP
#define VOLALG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace volalg {

/// Caller passed an invalid argument or an inconsistent configuration.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// External data (PWL fixture, IDX file, CSV, checkpoint) is malformed.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The objective has no finite, isolated maximizer: either it grows without
/// bound or its maximum is attained only along an unbounded flat ridge.
struct UnboundedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A Monte-Carlo dual estimate collected no mass (every sample fell at or
/// below the lowered hyperplane).
struct EmptyEstimateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite value. Carries the 1-based step index at
/// which it happened (-1 when the failing call had no step context).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long long step = -1)
      : std::runtime_error(
            step >= 0 ? what + " at step " + std::to_string(step) : what),
        base_(what),
        step_(step) {}
  long long step() const { return step_; }
  const std::string& base() const { return base_; }

 private:
  std::string base_;
  long long step_;
};

}  // namespace volalg

#endif  // VOLALG_ERRORS_HPP
