#ifndef SRS_LINALG_HPP
#define SRS_LINALG_HPP

#include <Eigen/Dense>

namespace srs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// vc(A): stacks the columns of A into a k*m vector.
Vector vec(const Matrix& a);

/// vch(C): column-stacked lower triangle of a symmetric k x k matrix,
/// length k(k+1)/2, ordering (c11,...,ck1,c22,...,ckk).
Vector vech(const Matrix& c);

/// Inverse of vech for a symmetric k x k matrix.
Matrix unvech(const Vector& h, int k);

/// Index of entry (i,j), i >= j, in vech ordering.
int vech_index(int i, int j, int k);

/// Duplication matrix D_k (k^2 x k(k+1)/2): D_k * vech(C) = vec(C).
Matrix duplication_matrix(int k);

/// Commutation matrix K_{k,k} (k^2 x k^2): K * vec(A) = vec(A^T).
Matrix commutation_matrix(int k);

struct EigenSummary {
  Vector eigenvalues;  // sorted descending
  bool pds;
};

/// Eigenvalue summary of a symmetric matrix; flags non-PDS when the
/// smallest eigenvalue falls below `floor` (floor < 0 selects the
/// default 1e-12 * lambda_1). Throws NotSymmetric on asymmetric input.
EigenSummary validate_pds(const Matrix& m, double floor = -1.0);

/// Symmetric square root via eigendecomposition. Throws NotPds.
Matrix sqrt_pds(const Matrix& m);

}  // namespace srs

#endif
