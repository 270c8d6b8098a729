#include "srs/structures.hpp"

#include <algorithm>
#include <cmath>

#include "srs/errors.hpp"

namespace srs {

CovarianceStructure::CovarianceStructure(StructureKind kind, int k,
                                         std::vector<Matrix> basis)
    : kind_(kind), k_(k), basis_(std::move(basis)) {
  if (k_ < 1) throw Error(ErrorCode::BadDim, "response dimension k must be >= 1");
  if (kind_ == StructureKind::ar1) {
    l_ = 2;
    return;
  }
  l_ = static_cast<int>(basis_.size());
  basis_mat_.resize(k_ * k_, l_);
  for (int j = 0; j < l_; ++j) basis_mat_.col(j) = vec(basis_[j]);
  // identifiability: L must have full column rank
  Eigen::JacobiSVD<Matrix> svd(basis_mat_);
  const Vector sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-10 * sv(0))
    throw Error(ErrorCode::NotIdentifiable,
                "basis matrix L is rank deficient; theta not identifiable");
}

CovarianceStructure CovarianceStructure::unstructured(int k) {
  std::vector<Matrix> basis;
  basis.reserve(k * (k + 1) / 2);
  for (int j = 0; j < k; ++j)
    for (int i = j; i < k; ++i) {
      Matrix b = Matrix::Zero(k, k);
      b(i, j) = 1.0;
      b(j, i) = 1.0;
      basis.push_back(b);
    }
  CovarianceStructure st(StructureKind::unstructured, k, std::move(basis));
  st.pd_dir_ = vech(Matrix::Identity(k, k));
  return st;
}

CovarianceStructure CovarianceStructure::lmm(const Matrix& z, const Matrix& r) {
  const int k = static_cast<int>(z.rows());
  const int g = static_cast<int>(z.cols());
  if (g < 1) throw Error(ErrorCode::BadDim, "Z needs at least one column");
  if (r.rows() != k || r.cols() != k)
    throw Error(ErrorCode::BadDim, "R must be k x k");
  if (!validate_pds(r).pds)
    throw Error(ErrorCode::NotPds, "error basis R must be PDS");
  std::vector<Matrix> basis;
  basis.reserve(g + 1);
  for (int j = 0; j < g; ++j)
    basis.push_back(z.col(j) * z.col(j).transpose());
  basis.push_back(r);
  CovarianceStructure st(StructureKind::lmm, k, std::move(basis));
  st.pd_dir_ = Vector::Zero(g + 1);
  st.pd_dir_(g) = 1.0;  // the error coordinate, V(dir) = R is PD
  return st;
}

CovarianceStructure CovarianceStructure::compound_symmetry(int k) {
  std::vector<Matrix> basis{Matrix::Ones(k, k), Matrix::Identity(k, k)};
  CovarianceStructure st(StructureKind::compound_symmetry, k, std::move(basis));
  st.pd_dir_ = Vector::Zero(2);
  st.pd_dir_(1) = 1.0;
  return st;
}

CovarianceStructure CovarianceStructure::stationary_banded(int k) {
  std::vector<Matrix> basis;
  basis.reserve(k);
  for (int lag = 0; lag < k; ++lag) {
    Matrix b = Matrix::Zero(k, k);
    for (int s = 0; s < k; ++s)
      for (int t = 0; t < k; ++t)
        if (std::abs(s - t) == lag) b(s, t) = 1.0;
    basis.push_back(b);
  }
  CovarianceStructure st(StructureKind::stationary_banded, k, std::move(basis));
  st.pd_dir_ = Vector::Zero(k);
  st.pd_dir_(0) = 1.0;
  return st;
}

CovarianceStructure CovarianceStructure::ar1(int k) {
  return CovarianceStructure(StructureKind::ar1, k, {});
}

void CovarianceStructure::check_theta(const Vector& theta) const {
  if (theta.size() != l_)
    throw Error(ErrorCode::BadTheta, "theta has wrong length");
  if (kind_ == StructureKind::ar1) {
    if (!(theta(0) > 0.0))
      throw Error(ErrorCode::BadTheta, "ar1 variance must be positive");
    if (!(theta(1) >= -1.0 && theta(1) <= 1.0))
      throw Error(ErrorCode::BadTheta, "ar1 correlation must lie in [-1,1]");
  }
}

Matrix CovarianceStructure::value(const Vector& theta) const {
  check_theta(theta);
  if (kind_ == StructureKind::ar1) {
    Matrix v(k_, k_);
    for (int s = 0; s < k_; ++s)
      for (int t = 0; t < k_; ++t)
        v(s, t) = theta(0) * std::pow(theta(1), std::abs(s - t));
    return v;
  }
  Matrix v = Matrix::Zero(k_, k_);
  for (int j = 0; j < l_; ++j) v += theta(j) * basis_[j];
  return v;
}

Matrix CovarianceStructure::grad(const Vector& theta, int j) const {
  if (j < 0 || j >= l_) throw Error(ErrorCode::BadIndex, "gradient index out of range");
  if (kind_ != StructureKind::ar1) return basis_[j];
  check_theta(theta);
  Matrix g(k_, k_);
  for (int s = 0; s < k_; ++s)
    for (int t = 0; t < k_; ++t) {
      const int p = std::abs(s - t);
      if (j == 0) {
        g(s, t) = std::pow(theta(1), p);
      } else {
        g(s, t) = p == 0 ? 0.0 : theta(0) * p * std::pow(theta(1), p - 1);
      }
    }
  return g;
}

const Matrix& CovarianceStructure::basis_matrix() const {
  if (!linear())
    throw Error(ErrorCode::NotLinear, "ar1 has no linear basis matrix");
  return basis_mat_;
}

const std::vector<Matrix>& CovarianceStructure::basis_list() const {
  if (!linear())
    throw Error(ErrorCode::NotLinear, "ar1 has no linear basis");
  return basis_;
}

Vector CovarianceStructure::scale_theta(const Vector& theta, double alpha) const {
  if (!(alpha > 0.0)) throw Error(ErrorCode::BadInput, "scale must be positive");
  if (theta.size() != l_)
    throw Error(ErrorCode::BadTheta, "theta has wrong length");
  if (kind_ == StructureKind::ar1) {
    Vector out = theta;
    out(0) *= alpha;
    return out;
  }
  return alpha * theta;
}

Vector CovarianceStructure::project_scatter(const Matrix& s) const {
  if (s.rows() != k_ || s.cols() != k_)
    throw Error(ErrorCode::BadDim, "scatter matrix must be k x k");
  if (kind_ == StructureKind::ar1) {
    double var = s.diagonal().mean();
    if (!(var > 0.0)) var = 1e-8;
    double lag1 = 0.0;
    for (int t = 0; t + 1 < k_; ++t) lag1 += s(t, t + 1);
    double rho = k_ > 1 ? lag1 / ((k_ - 1) * var) : 0.0;
    rho = std::clamp(rho, -0.99, 0.99);
    Vector theta(2);
    theta << var, rho;
    return theta;
  }
  return basis_mat_.colPivHouseholderQr().solve(vec(s));
}

Vector CovarianceStructure::repair_pds(Vector theta, double floor_abs) const {
  if (kind_ == StructureKind::ar1) {
    theta(1) = std::clamp(theta(1), -0.995, 0.995);
    if (!(theta(0) > 0.0)) theta(0) = floor_abs > 0 ? floor_abs : 1e-8;
    const double lam_min = validate_pds(value(theta)).eigenvalues.minCoeff();
    if (lam_min < floor_abs) theta(0) *= floor_abs / lam_min;
    return theta;
  }
  const double lam_min = validate_pds(value(theta)).eigenvalues.minCoeff();
  if (lam_min >= floor_abs) return theta;
  const double dir_min = validate_pds(value(pd_dir_)).eigenvalues.minCoeff();
  return theta + ((floor_abs - lam_min) / dir_min) * pd_dir_;
}

const char* structure_kind_name(StructureKind k) {
  switch (k) {
    case StructureKind::unstructured: return "unstructured";
    case StructureKind::lmm: return "lmm";
    case StructureKind::compound_symmetry: return "compound_symmetry";
    case StructureKind::stationary_banded: return "stationary_banded";
    case StructureKind::ar1: return "ar1";
  }
  return "unknown";
}

StructureKind structure_kind_from_name(const std::string& name) {
  if (name == "unstructured") return StructureKind::unstructured;
  if (name == "lmm") return StructureKind::lmm;
  if (name == "compound_symmetry") return StructureKind::compound_symmetry;
  if (name == "stationary_banded") return StructureKind::stationary_banded;
  if (name == "ar1") return StructureKind::ar1;
  throw Error(ErrorCode::BadInput, "unknown structure kind '" + name + "'");
}

}  // namespace srs
