#ifndef SRS_CHI_MOMENTS_HPP
#define SRS_CHI_MOMENTS_HPP

#include <functional>

#include "srs/rho.hpp"

namespace srs {

/// E[f(||z||)] for z standard normal in R^k, i.e. the chi_k expectation
/// integral f(s) s^{k-1} e^{-s^2/2} / (2^{k/2-1} Gamma(k/2)) ds.
/// Adaptive Gauss-Legendre; absolute accuracy ~1e-10 for bounded f.
/// `split` > 0 inserts a panel boundary there (kink of rho kernels).
double expect_chi(const std::function<double(double)>& f, int k,
                  double split = -1.0);

/// P(chi_k > c) via the regularized upper incomplete gamma Q(k/2, c^2/2).
double chi_tail(int k, double c);

/// Regularized incomplete gamma P(a,x) (lower) and Q(a,x) = 1 - P.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Tuning: returns c0 with b0(c0)/a0(c0) = target_r for the biweight,
/// where b0(c0) = E[rho_{c0}(chi_k)]. Monotone bisection on [0.1, 100].
double tune_cutoff(RhoKind kind, int k, double target_r);

/// All constants of the elliptical (Gaussian radial) theory for a given
/// rho and dimension k, plus the raw spherical expectations they come from.
struct EllipticalConstants {
  int k = 0;
  double c0 = 0, a0 = 0, b0 = 0, r = 0;
  double alpha = 0;              // beta-block derivative factor
  double gamma1 = 0, gamma2 = 0; // theta-block derivative factors
  double sigma1 = 0;             // theta limiting covariance factors
  double sigma2 = 0;             //   (denominator E[rho' s]^2 form)
  double sigma2_main_text = 0;   //   variant with denominator E[rho'^2]^2
  double e_rho1_sq = 0;          // E[rho'(s)^2]
  double e_rho1_s = 0;           // E[rho'(s) s]
  double e_rho_centered_sq = 0;  // E[(rho(s)-b0)^2]
  double e_u2_s4 = 0;            // E[u(s)^2 s^4]
};

EllipticalConstants constants_for(const RhoFunction& rho, int k);

}  // namespace srs

#endif
