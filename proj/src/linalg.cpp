#include "srs/linalg.hpp"

#include "srs/errors.hpp"

namespace srs {

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Vector vech(const Matrix& c) {
  const int k = static_cast<int>(c.rows());
  Vector h(k * (k + 1) / 2);
  int m = 0;
  for (int j = 0; j < k; ++j)
    for (int i = j; i < k; ++i) h(m++) = c(i, j);
  return h;
}

Matrix unvech(const Vector& h, int k) {
  if (h.size() != k * (k + 1) / 2)
    throw Error(ErrorCode::BadDim, "vech vector has wrong length");
  Matrix c(k, k);
  int m = 0;
  for (int j = 0; j < k; ++j)
    for (int i = j; i < k; ++i) {
      c(i, j) = h(m);
      c(j, i) = h(m);
      ++m;
    }
  return c;
}

int vech_index(int i, int j, int k) {
  if (i < j) std::swap(i, j);
  return j * k - j * (j - 1) / 2 + (i - j);
}

Matrix duplication_matrix(int k) {
  if (k < 1) throw Error(ErrorCode::BadDim, "k must be >= 1");
  Matrix d = Matrix::Zero(k * k, k * (k + 1) / 2);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) d(i + j * k, vech_index(i, j, k)) = 1.0;
  return d;
}

Matrix commutation_matrix(int k) {
  if (k < 1) throw Error(ErrorCode::BadDim, "k must be >= 1");
  Matrix km = Matrix::Zero(k * k, k * k);
  // vec(A^T)[j + i*k] = A(i,j) = vec(A)[i + j*k]
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) km(j + i * k, i + j * k) = 1.0;
  return km;
}

EigenSummary validate_pds(const Matrix& m, double floor) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector lam = es.eigenvalues().reverse();
  if (floor < 0) floor = 1e-12 * std::max(lam(0), 0.0);
  return EigenSummary{lam, lam(lam.size() - 1) >= floor && lam(0) > 0.0};
}

Matrix sqrt_pds(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw Error(ErrorCode::NotPds, "matrix square root requires PDS input");
  return es.operatorSqrt();
}

}  // namespace srs
