#include "lmpc/errors.hpp"

namespace lmpc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::Unbounded: return "Unbounded";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DisturbanceOutOfSupport: return "DisturbanceOutOfSupport";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotContracting: return "NotContracting";
    case ErrorCode::IncompleteRollout: return "IncompleteRollout";
    case ErrorCode::TreeTooLarge: return "TreeTooLarge";
    case ErrorCode::PolicyInfeasible: return "PolicyInfeasible";
    case ErrorCode::NoFeasiblePoint: return "NoFeasiblePoint";
    case ErrorCode::RolloutDiverged: return "RolloutDiverged";
    case ErrorCode::Bootstrap0Infeasible: return "Bootstrap0Infeasible";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace lmpc
