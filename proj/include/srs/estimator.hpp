#ifndef SRS_ESTIMATOR_HPP
#define SRS_ESTIMATOR_HPP

#include <cstdint>
#include <utility>

#include "srs/dataset.hpp"
#include "srs/errors.hpp"
#include "srs/rho.hpp"
#include "srs/structures.hpp"

namespace srs {

struct SolverConfig {
  int n_subsamples = 500;
  int max_iter = 200;
  double tol = 1e-9;
  double eig_floor = 1e-12;
  std::uint64_t seed = 0;
};

struct SFit {
  Vector beta;
  Vector theta;
  Matrix V;
  double det_V = 0;
  double b0 = 0;
  Vector distances;
  double constraint_residual = 0;
  bool converged = false;
  int iterations = 0;
  int n_subsamples_used = 0;
  std::uint64_t seed = 0;
  // diagnostics, not part of the serialized fit
  double score_norm = 0;
  double det_gap_runner_up = 0;
};

/// Thrown by fit_s when no candidate converged; carries the best partial fit.
class NoSolutionError : public Error {
 public:
  NoSolutionError(const std::string& what, SFit partial)
      : Error(ErrorCode::NoSolution, what), partial_(std::move(partial)) {}
  const SFit& partial() const { return partial_; }

 private:
  SFit partial_;
};

/// sqrt((y - X beta)^T V(theta)^{-1} (y - X beta)) via triangular solve.
double mahalanobis_d(const Vector& y, const Matrix& x, const Vector& beta,
                     const Vector& theta, const CovarianceStructure& st);

/// All n distances at (beta, theta).
Vector mahalanobis_all(const Dataset& data, const Vector& beta,
                       const Vector& theta, const CovarianceStructure& st);

/// Rescales V(theta) by the unique s* > 0 with
/// (1/n) sum rho(d_i(theta')) = b0, theta' = scale_theta(theta, s*).
/// Equality is always enforced (shrinks when the mean is already below b0).
Vector scale_to_constraint(const Dataset& data, const Vector& beta,
                           const Vector& theta, const CovarianceStructure& st,
                           const RhoFunction& rho, double b0);

/// One fixed-point update: u-weighted GLS for beta, weighted basis
/// projection (linear) or damped Gauss-Newton (ar1) for theta, followed
/// by constraint rescaling.
std::pair<Vector, Vector> concentration_step(const Dataset& data,
                                             const Vector& beta,
                                             const Vector& theta,
                                             const CovarianceStructure& st,
                                             const RhoFunction& rho, double b0);

/// The S-estimator: subsampling initialization plus concentration,
/// keeping the smallest-determinant converged candidate. Deterministic
/// given cfg.seed. Throws NoSolutionError when nothing converges.
SFit fit_s(const Dataset& data, const CovarianceStructure& st,
           const RhoFunction& rho, double b0, const SolverConfig& cfg);

/// Gaussian ML comparator (non-robust): alternating GLS for beta and
/// likelihood updates for theta.
std::pair<Vector, Vector> fit_ml_reference(const Dataset& data,
                                           const CovarianceStructure& st);

struct BdpBound {
  double lower_beta = 0;   // ceil(n r)/n
  double exact_theta = 0;  // ceil(n r)/n
  bool valid = false;      // r <= (n - kappa)/(2n)
};

BdpBound bdp_bound(int n, double r, int kappa);

}  // namespace srs

#endif
