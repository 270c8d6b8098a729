#include "srs/chi_moments.hpp"

#include <cmath>
#include <limits>

#include "srs/errors.hpp"

namespace srs {

namespace {

// 15-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr int kGlN = 15;
constexpr double kGlX[kGlN] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272,
    -0.7244177313601701, -0.5709721726085388, -0.3941513470775634,
    -0.2011940939974345, 0.0,                 0.2011940939974345,
    0.3941513470775634,  0.5709721726085388,  0.7244177313601701,
    0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGlW[kGlN] = {
    0.0307532419961173, 0.0703660474881081, 0.1071592204671719,
    0.1395706779261543, 0.1662692058169939, 0.1861610000155622,
    0.1984314853271116, 0.2025782419255613, 0.1984314853271116,
    0.1861610000155622, 0.1662692058169939, 0.1395706779261543,
    0.1071592204671719, 0.0703660474881081, 0.0307532419961173};

double gl_panel(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < kGlN; ++i) s += kGlW[i] * f(c + h * kGlX[i]);
  return h * s;
}

double adaptive_gl(const std::function<double(double)>& f, double a, double b,
                   double tol, int depth) {
  const double whole = gl_panel(f, a, b);
  const double mid = 0.5 * (a + b);
  const double left = gl_panel(f, a, mid);
  const double right = gl_panel(f, mid, b);
  if (std::fabs(left + right - whole) <= tol || depth >= 48)
    return left + right;
  return adaptive_gl(f, a, mid, 0.5 * tol, depth + 1) +
         adaptive_gl(f, mid, b, 0.5 * tol, depth + 1);
}

// log of the chi_k density normalization: 2^{k/2-1} Gamma(k/2)
double log_chi_norm(int k) {
  return (0.5 * k - 1.0) * std::log(2.0) + std::lgamma(0.5 * k);
}

}  // namespace

double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw Error(ErrorCode::BadInput, "gamma_p domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) {
    // series representation
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  return 1.0 - gamma_q(a, x);
}

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw Error(ErrorCode::BadInput, "gamma_q domain");
  if (x < a + 1.0) return 1.0 - gamma_p(a, x);
  // Lentz continued fraction
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double chi_tail(int k, double c) {
  if (k <= 0) throw Error(ErrorCode::BadDim, "k must be positive");
  if (c <= 0.0) return 1.0;
  return gamma_q(0.5 * k, 0.5 * c * c);
}

double expect_chi(const std::function<double(double)>& f, int k, double split) {
  if (k <= 0) throw Error(ErrorCode::BadDim, "k must be positive");
  const double lnorm = log_chi_norm(k);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    return f(s) * std::exp((k - 1) * std::log(s) - 0.5 * s * s - lnorm);
  };
  // density mass beyond sqrt(k) + 16 is below 1e-30
  const double upper = std::sqrt(static_cast<double>(k)) + 16.0;
  const double tol = 1e-12;
  if (split > 0.0 && split < upper) {
    return adaptive_gl(integrand, 0.0, split, tol, 0) +
           adaptive_gl(integrand, split, upper, tol, 0);
  }
  return adaptive_gl(integrand, 0.0, upper, tol, 0);
}

double tune_cutoff(RhoKind kind, int k, double target_r) {
  if (kind != RhoKind::biweight)
    throw Error(ErrorCode::NotDifferentiable,
                "cutoff tuning is defined for the biweight only");
  if (k <= 0) throw Error(ErrorCode::BadDim, "k must be positive");
  if (!(target_r > 0.0 && target_r < 1.0))
    throw Error(ErrorCode::BadInput, "target ratio must lie in (0,1)");

  auto ratio = [&](double c) {
    const RhoFunction rho = RhoFunction::biweight(c);
    const double b0 =
        expect_chi([&](double s) { return rho.rho(s); }, k, c);
    return b0 / rho.a0();
  };

  // b0/a0 decreases in c0: 1 near c0 = 0, -> 0 as c0 grows
  double lo = 0.1, hi = 100.0;
  double rlo = ratio(lo), rhi = ratio(hi);
  if (!(rhi <= target_r && target_r <= rlo))
    throw Error(ErrorCode::NoRoot, "target breakdown ratio not achievable on [0.1, 100]");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double rm = ratio(mid);
    if (std::fabs(rm - target_r) < 1e-10 || hi - lo < 1e-12) return mid;
    if (rm > target_r)
      lo = mid;
    else
      hi = mid;
  }
  const double c0 = 0.5 * (lo + hi);
  if (std::fabs(ratio(c0) - target_r) > 1e-8)
    throw Error(ErrorCode::NoRoot, "bisection did not reach tolerance");
  return c0;
}

EllipticalConstants constants_for(const RhoFunction& rho, int k) {
  if (!rho.differentiable())
    throw Error(ErrorCode::NotDifferentiable,
                "asymptotic constants need a twice-differentiable rho");
  EllipticalConstants c;
  c.k = k;
  c.c0 = rho.c0();
  c.a0 = rho.a0();
  const double cut = rho.c0();

  // kernels vanish beyond c0 except rho itself, which contributes the
  // exact constant tail a0 * P(chi_k > c0)
  auto e_cut = [&](const std::function<double(double)>& f) {
    return expect_chi(f, k, cut);
  };
  c.b0 = e_cut([&](double s) { return s < cut ? rho.rho(s) : 0.0; }) +
         rho.a0() * chi_tail(k, cut);
  c.r = c.b0 / c.a0;
  const double b0 = c.b0;

  c.alpha = e_cut([&](double s) {
    return (1.0 - 1.0 / k) * rho.u(s) + rho.rho2(s) / k;
  });
  const double e_r2s2_r1s = e_cut([&](double s) {
    return rho.rho2(s) * s * s + (k + 1) * rho.rho1(s) * s;
  });
  c.gamma1 = e_r2s2_r1s / (k + 2);
  c.gamma2 = e_cut([&](double s) {
    return 2.0 * rho.rho2(s) * s * s + k * rho.rho1(s) * s;
  }) / (2.0 * k * (k + 2));

  c.e_rho1_sq = e_cut([&](double s) { return rho.rho1(s) * rho.rho1(s); });
  c.e_rho1_s = e_cut([&](double s) { return rho.rho1(s) * s; });
  c.e_rho_centered_sq =
      e_cut([&](double s) {
        const double d = rho.rho(s) - b0;
        return s < cut ? d * d : 0.0;
      }) +
      (rho.a0() - b0) * (rho.a0() - b0) * chi_tail(k, cut);
  c.e_u2_s4 = e_cut([&](double s) {
    const double us = rho.u(s);
    return us * us * s * s * s * s;
  });

  c.sigma1 = k * (k + 2) * c.e_u2_s4 / (e_r2s2_r1s * e_r2s2_r1s);
  // supplement-derived denominator (E[rho'(s) s])^2; the main-text variant
  // with (E[rho'(s)^2])^2 is kept for side-by-side reporting
  c.sigma2 = -2.0 / k * c.sigma1 +
             4.0 * c.e_rho_centered_sq / (c.e_rho1_s * c.e_rho1_s);
  c.sigma2_main_text = -2.0 / k * c.sigma1 +
                       4.0 * c.e_rho_centered_sq / (c.e_rho1_sq * c.e_rho1_sq);
  return c;
}

}  // namespace srs
