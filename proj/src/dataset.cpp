#include "srs/dataset.hpp"

#include "srs/errors.hpp"

namespace srs {

void Dataset::validate() const {
  if (n < 2) throw Error(ErrorCode::BadInput, "need at least two subjects");
  if (k < 1 || q < 1) throw Error(ErrorCode::BadDim, "k and q must be positive");
  if (static_cast<int>(y.size()) != n || static_cast<int>(X.size()) != n)
    throw Error(ErrorCode::BadDim, "subject count mismatch");
  for (int i = 0; i < n; ++i) {
    if (y[i].size() != k)
      throw Error(ErrorCode::BadDim, "subject " + std::to_string(i + 1) +
                                         ": y has wrong length");
    if (X[i].rows() != k || X[i].cols() != q)
      throw Error(ErrorCode::BadDim, "subject " + std::to_string(i + 1) +
                                         ": X has wrong shape");
  }
}

}  // namespace srs
