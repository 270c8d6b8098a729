#ifndef SRS_INFERENCE_HPP
#define SRS_INFERENCE_HPP

#include <string>

#include "srs/chi_moments.hpp"
#include "srs/dataset.hpp"
#include "srs/rho.hpp"
#include "srs/structures.hpp"

namespace srs {

struct ScoreVector {
  Vector psi_beta;   // u(d) X^T V^{-1} (y - X beta)
  Vector psi_theta;  // length l
};

/// Score function Psi at one observation. Uses the fast linear-structure
/// path when available, the H_j route otherwise.
ScoreVector psi(const Vector& y, const Matrix& x, const Vector& beta,
                const Vector& theta, const CovarianceStructure& st,
                const RhoFunction& rho, double b0);

/// The general-structure route (H_j matrices), valid for any structure;
/// agrees with the linear path on linear structures.
ScoreVector psi_general(const Vector& y, const Matrix& x, const Vector& beta,
                        const Vector& theta, const CovarianceStructure& st,
                        const RhoFunction& rho, double b0);

/// H_j = tr(V^{-1} dV_j) sum_t theta_t dV_t - tr(V^{-1} sum_t theta_t dV_t) dV_j.
Matrix h_matrix(const CovarianceStructure& st, const Vector& theta, int j);

/// Sample score average Lambda_n(xi) = (1/n) sum Psi(s_i, xi), stacked.
Vector lambda_n(const Dataset& data, const Vector& beta, const Vector& theta,
                const CovarianceStructure& st, const RhoFunction& rho,
                double b0);

/// Central finite differences of Lambda_n, step 1e-6 (1 + |component|).
/// Returns the (q+l) x (q+l) Jacobian.
Matrix jacobian_empirical(const Dataset& data, const Vector& beta,
                          const Vector& theta, const CovarianceStructure& st,
                          const RhoFunction& rho, double b0);

/// Closed-form derivative of Lambda at an elliptical distribution:
/// block diagonal with beta block -alpha E[X^T Sigma^{-1} X] and the
/// gamma1/gamma2 theta block (trace form for general structures).
Matrix block_derivative(const CovarianceStructure& st, const Vector& theta_p,
                        const EllipticalConstants& con,
                        const Matrix& e_xt_sinv_x);

/// (1/n) sum X_i^T Sigma^{-1} X_i over a fixed design.
Matrix design_average(const Dataset& data, const Matrix& sigma);

struct InfluenceReport {
  Vector if_beta;
  Vector if_theta;
  Vector if_vec_c;  // chain rule through d vec(V)/d theta
};

/// IF = -D^{-1} Psi(s0, xi_P) with a supplied derivative matrix D.
InfluenceReport influence_empirical(const Vector& y0, const Matrix& x0,
                                    const Vector& beta, const Vector& theta,
                                    const CovarianceStructure& st,
                                    const RhoFunction& rho, double b0,
                                    const Matrix& d);

/// Elliptical closed form (linear structures).
InfluenceReport influence_elliptical(const Vector& y0, const Matrix& x0,
                                     const Vector& beta, const Vector& theta,
                                     const CovarianceStructure& st,
                                     const EllipticalConstants& con,
                                     const Matrix& e_xt_sinv_x);

// Asymptotic covariance formulas.
Matrix asy_cov_lgrg_beta(const EllipticalConstants& con,
                         const Matrix& e_xt_sinv_x);
Matrix asy_cov_cvf_beta(const EllipticalConstants& con, const Matrix& x,
                        const Matrix& sigma);
Matrix asy_cov_lgrg_theta(const CovarianceStructure& st, const Vector& theta_p,
                          const EllipticalConstants& con);
Matrix asy_cov_cvf_theta(const CovarianceStructure& st, const Vector& theta_p,
                         const EllipticalConstants& con);
/// Limiting covariance of vec(V(theta_n)): L acov(theta) L^T.
Matrix asy_cov_vec_c(const CovarianceStructure& st, const Vector& theta_p,
                     const EllipticalConstants& con);

struct SandwichReport {
  Matrix d;     // empirical Jacobian of Lambda_n
  Matrix m;     // average Psi Psi^T
  Matrix acov;  // D^{-1} M D^{-1}
  std::string which = "empirical";
  double condition_d = 0;
  bool ill_conditioned = false;  // condition number above 1e12
};

SandwichReport sandwich_empirical(const Dataset& data, const Vector& beta,
                                  const Vector& theta,
                                  const CovarianceStructure& st,
                                  const RhoFunction& rho, double b0);

/// Mahalanobis residual per subject at the fitted parameters.
Vector standardized_residuals(const Dataset& data, const Vector& beta,
                              const Vector& theta,
                              const CovarianceStructure& st);

}  // namespace srs

#endif
