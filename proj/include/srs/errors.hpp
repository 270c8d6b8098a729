#ifndef SRS_ERRORS_HPP
#define SRS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace srs {

enum class ErrorCode {
  // input / configuration problems
  BadInput,
  BadDim,
  BadTheta,
  BadIndex,
  NotLinear,
  NotSymmetric,
  NotDifferentiable,
  NotIdentifiable,
  // numerical / solver problems
  NotPds,
  Degenerate,
  NoFeasibleScale,
  RankDeficient,
  NonInvertible,
  NoSolution,
  NoRoot,
  BadConstants,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

  // Input-shaped errors map to CLI exit code 3, everything else to 2.
  bool is_input_error() const {
    switch (code_) {
      case ErrorCode::BadInput:
      case ErrorCode::BadDim:
      case ErrorCode::BadTheta:
      case ErrorCode::BadIndex:
      case ErrorCode::NotLinear:
      case ErrorCode::NotSymmetric:
      case ErrorCode::NotDifferentiable:
      case ErrorCode::NotIdentifiable:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace srs

#endif
