#ifndef SRS_DATASET_HPP
#define SRS_DATASET_HPP

#include <vector>

#include "srs/linalg.hpp"

namespace srs {

/// n balanced observations (y_i in R^k, X_i in R^{k x q}).
struct Dataset {
  int n = 0;
  int k = 0;
  int q = 0;
  std::vector<Vector> y;
  std::vector<Matrix> X;

  /// Throws BadDim/BadInput on inconsistent shapes or n < 2.
  void validate() const;
};

}  // namespace srs

#endif
