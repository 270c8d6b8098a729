#ifndef SRS_STRUCTURES_HPP
#define SRS_STRUCTURES_HPP

#include <string>
#include <vector>

#include "srs/linalg.hpp"

namespace srs {

enum class StructureKind {
  unstructured,
  lmm,
  compound_symmetry,
  stationary_banded,
  ar1
};

/// The map theta -> V(theta) with gradients. Linear kinds carry the
/// basis matrices L_j and the k^2 x l matrix L = [vec(L_1) ... vec(L_l)],
/// which is rank-checked at construction (identifiability). Immutable.
class CovarianceStructure {
 public:
  static CovarianceStructure unstructured(int k);
  /// Z is k x g (one independent random-effect variance per column),
  /// R the k x k PDS error basis; theta = (sigma_1^2..sigma_g^2, sigma_eps^2).
  static CovarianceStructure lmm(const Matrix& z, const Matrix& r);
  static CovarianceStructure compound_symmetry(int k);
  static CovarianceStructure stationary_banded(int k);
  static CovarianceStructure ar1(int k);

  StructureKind kind() const { return kind_; }
  int k() const { return k_; }
  int l() const { return l_; }
  bool linear() const { return kind_ != StructureKind::ar1; }

  /// V(theta); symmetric by construction, PDS not guaranteed.
  Matrix value(const Vector& theta) const;

  /// dV/dtheta_j, 0-based j (BadIndex outside [0, l)).
  Matrix grad(const Vector& theta, int j) const;

  /// k^2 x l matrix [vec(L_1) ... vec(L_l)]; NotLinear for ar1.
  const Matrix& basis_matrix() const;
  const std::vector<Matrix>& basis_list() const;

  /// theta' with V(theta') = alpha * V(theta), alpha > 0 (scalar closure).
  Vector scale_theta(const Vector& theta, double alpha) const;

  /// Initial theta from a residual scatter matrix S (least squares
  /// projection for linear kinds, moment equations for ar1).
  Vector project_scatter(const Matrix& s) const;

  /// Smallest perturbation along a PD direction (or parameter clamping
  /// for ar1) making lambda_min(V(theta)) >= floor_abs.
  Vector repair_pds(Vector theta, double floor_abs) const;

 private:
  CovarianceStructure(StructureKind kind, int k, std::vector<Matrix> basis);
  void check_theta(const Vector& theta) const;

  StructureKind kind_;
  int k_;
  int l_;
  std::vector<Matrix> basis_;  // empty for ar1
  Matrix basis_mat_;           // k^2 x l, empty for ar1
  Vector pd_dir_;              // theta direction with V PD (linear kinds)
};

const char* structure_kind_name(StructureKind k);
StructureKind structure_kind_from_name(const std::string& name);

}  // namespace srs

#endif
