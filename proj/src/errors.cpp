#include "srs/errors.hpp"

namespace srs {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::BadDim: return "BadDim";
    case ErrorCode::BadTheta: return "BadTheta";
    case ErrorCode::BadIndex: return "BadIndex";
    case ErrorCode::NotLinear: return "NotLinear";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotDifferentiable: return "NotDifferentiable";
    case ErrorCode::NotIdentifiable: return "NotIdentifiable";
    case ErrorCode::NotPds: return "NotPds";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::NoFeasibleScale: return "NoFeasibleScale";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonInvertible: return "NonInvertible";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::BadConstants: return "BadConstants";
  }
  return "Unknown";
}

}  // namespace srs
