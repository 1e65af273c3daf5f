#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lmpc {

enum class ErrorCode {
  NumericalFailure,
  Infeasible,
  Unbounded,
  DimensionMismatch,
  DimensionTooLarge,
  UnsupportedDimension,
  EmptyInput,
  DisturbanceOutOfSupport,
  NoConvergence,
  NotContracting,
  IncompleteRollout,
  TreeTooLarge,
  PolicyInfeasible,
  NoFeasiblePoint,
  RolloutDiverged,
  Bootstrap0Infeasible,
  ConfigInvalid,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the receding-horizon policy when the FTOCP has no solution at the
/// realized state.
class PolicyInfeasibleError : public Error {
 public:
  PolicyInfeasibleError(const Eigen::VectorXd& state, const std::string& what)
      : Error(ErrorCode::PolicyInfeasible, what), state_(state) {}

  const Eigen::VectorXd& state() const noexcept { return state_; }

 private:
  Eigen::VectorXd state_;
};

}  // namespace lmpc
