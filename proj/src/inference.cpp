#include "srs/inference.hpp"

#include <cmath>

#include "srs/errors.hpp"

namespace srs {

namespace {

struct Solved {
  Matrix v;
  Eigen::LLT<Matrix> llt;

  explicit Solved(const Matrix& m) : v(m), llt(m) {
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::NotPds, "V(theta) is not positive definite");
  }

  Matrix inv() const { return llt.solve(Matrix::Identity(v.rows(), v.cols())); }
};

}  // namespace

Matrix h_matrix(const CovarianceStructure& st, const Vector& theta, int j) {
  const Solved sv(st.value(theta));
  Matrix sum_t = Matrix::Zero(st.k(), st.k());
  for (int t = 0; t < st.l(); ++t) sum_t += theta(t) * st.grad(theta, t);
  const Matrix dvj = st.grad(theta, j);
  const double tr_j = sv.llt.solve(dvj).trace();
  const double tr_sum = sv.llt.solve(sum_t).trace();
  return tr_j * sum_t - tr_sum * dvj;
}

ScoreVector psi_general(const Vector& y, const Matrix& x, const Vector& beta,
                        const Vector& theta, const CovarianceStructure& st,
                        const RhoFunction& rho, double b0) {
  const Solved sv(st.value(theta));
  const Vector r = y - x * beta;
  const Vector vir = sv.llt.solve(r);
  const double d = std::sqrt(r.dot(vir));
  const double u = rho.u(d);
  const double rho_c = rho.rho(d) - b0;

  ScoreVector out;
  out.psi_beta = u * x.transpose() * vir;
  out.psi_theta.resize(st.l());
  Matrix sum_t = Matrix::Zero(st.k(), st.k());
  for (int t = 0; t < st.l(); ++t) sum_t += theta(t) * st.grad(theta, t);
  const double tr_sum = sv.llt.solve(sum_t).trace();
  for (int j = 0; j < st.l(); ++j) {
    const Matrix dvj = st.grad(theta, j);
    const double tr_j = sv.llt.solve(dvj).trace();
    const Matrix hj = tr_j * sum_t - tr_sum * dvj;
    out.psi_theta(j) = u * vir.dot(hj * vir) - tr_j * rho_c;
  }
  return out;
}

ScoreVector psi(const Vector& y, const Matrix& x, const Vector& beta,
                const Vector& theta, const CovarianceStructure& st,
                const RhoFunction& rho, double b0) {
  if (!st.linear()) return psi_general(y, x, beta, theta, st, rho, b0);

  const Solved sv(st.value(theta));
  const Vector r = y - x * beta;
  const Vector vir = sv.llt.solve(r);
  const double d = std::sqrt(r.dot(vir));
  const RhoDerivs rd = rho.derivs(d, b0);

  ScoreVector out;
  out.psi_beta = rd.u * x.transpose() * vir;
  // Psi_theta,j = -tr(L_j V^{-1} Psi_V V^{-1}) with
  // Psi_V = k u(d) r r^T - v(d) V
  const Matrix psi_v =
      st.k() * rd.u * r * r.transpose() - rd.v * sv.v;
  const Matrix mid = sv.llt.solve(sv.llt.solve(psi_v).transpose());
  const auto& basis = st.basis_list();
  out.psi_theta.resize(st.l());
  for (int j = 0; j < st.l(); ++j)
    out.psi_theta(j) = -(basis[j].transpose() * mid).trace();
  return out;
}

Vector lambda_n(const Dataset& data, const Vector& beta, const Vector& theta,
                const CovarianceStructure& st, const RhoFunction& rho,
                double b0) {
  Vector acc = Vector::Zero(data.q + st.l());
  for (int i = 0; i < data.n; ++i) {
    const ScoreVector sv = psi(data.y[i], data.X[i], beta, theta, st, rho, b0);
    acc.head(data.q) += sv.psi_beta;
    acc.tail(st.l()) += sv.psi_theta;
  }
  return acc / data.n;
}

Matrix jacobian_empirical(const Dataset& data, const Vector& beta,
                          const Vector& theta, const CovarianceStructure& st,
                          const RhoFunction& rho, double b0) {
  const int q = data.q, l = st.l(), p = q + l;
  Matrix d(p, p);
  Vector xi(p);
  xi << beta, theta;
  for (int j = 0; j < p; ++j) {
    const double h = 1e-6 * (1.0 + std::fabs(xi(j)));
    Vector xp = xi, xm = xi;
    xp(j) += h;
    xm(j) -= h;
    const Vector fp =
        lambda_n(data, xp.head(q), xp.tail(l), st, rho, b0);
    const Vector fm =
        lambda_n(data, xm.head(q), xm.tail(l), st, rho, b0);
    d.col(j) = (fp - fm) / (2.0 * h);
  }
  return d;
}

Matrix design_average(const Dataset& data, const Matrix& sigma) {
  const Solved sv(sigma);
  Matrix acc = Matrix::Zero(data.q, data.q);
  for (int i = 0; i < data.n; ++i)
    acc.noalias() += data.X[i].transpose() * sv.llt.solve(data.X[i]);
  return acc / data.n;
}

Matrix block_derivative(const CovarianceStructure& st, const Vector& theta_p,
                        const EllipticalConstants& con,
                        const Matrix& e_xt_sinv_x) {
  const int q = static_cast<int>(e_xt_sinv_x.rows());
  const int l = st.l();
  Matrix d = Matrix::Zero(q + l, q + l);
  d.topLeftCorner(q, q) = -con.alpha * e_xt_sinv_x;

  const Solved sv(st.value(theta_p));
  if (st.linear()) {
    const auto& basis = st.basis_list();
    Matrix a(l, l);
    Vector b(l);
    std::vector<Matrix> wb(l);
    for (int j = 0; j < l; ++j) {
      wb[j] = sv.llt.solve(sv.llt.solve(basis[j]).transpose());
      b(j) = sv.llt.solve(basis[j]).trace();
    }
    for (int j = 0; j < l; ++j)
      for (int s = j; s < l; ++s) {
        a(j, s) = (wb[j].transpose() * basis[s]).trace();
        a(s, j) = a(j, s);
      }
    d.bottomRightCorner(l, l) =
        con.gamma1 * a - con.gamma2 * b * b.transpose();
  } else {
    // general-structure trace form, alpha1 = gamma1/k, alpha2 = gamma1/k - gamma2
    const double a1 = con.gamma1 / st.k();
    const double a2 = con.gamma1 / st.k() - con.gamma2;
    const Matrix sinv = sv.inv();
    for (int j = 0; j < l; ++j) {
      const Matrix hj = h_matrix(st, theta_p, j);
      const double tr_j = (sinv * st.grad(theta_p, j)).trace();
      for (int s = 0; s < l; ++s) {
        const Matrix dvs = st.grad(theta_p, s);
        const double tr_s = (sinv * dvs).trace();
        d(q + j, q + s) =
            -a1 * (sinv * dvs * sinv * hj).trace() + a2 * tr_s * tr_j;
      }
    }
  }
  return d;
}

namespace {

Matrix dvec_dtheta(const CovarianceStructure& st, const Vector& theta) {
  if (st.linear()) return st.basis_matrix();
  Matrix j(st.k() * st.k(), st.l());
  for (int t = 0; t < st.l(); ++t) j.col(t) = vec(st.grad(theta, t));
  return j;
}

}  // namespace

InfluenceReport influence_empirical(const Vector& y0, const Matrix& x0,
                                    const Vector& beta, const Vector& theta,
                                    const CovarianceStructure& st,
                                    const RhoFunction& rho, double b0,
                                    const Matrix& d) {
  const int q = static_cast<int>(beta.size()), l = st.l();
  Eigen::FullPivLU<Matrix> lu(d);
  if (!lu.isInvertible())
    throw Error(ErrorCode::NonInvertible, "derivative matrix is singular");
  const ScoreVector sv = psi(y0, x0, beta, theta, st, rho, b0);
  Vector stacked(q + l);
  stacked << sv.psi_beta, sv.psi_theta;
  const Vector iff = -lu.solve(stacked);
  InfluenceReport rep;
  rep.if_beta = iff.head(q);
  rep.if_theta = iff.tail(l);
  rep.if_vec_c = dvec_dtheta(st, theta) * rep.if_theta;
  return rep;
}

InfluenceReport influence_elliptical(const Vector& y0, const Matrix& x0,
                                     const Vector& beta, const Vector& theta,
                                     const CovarianceStructure& st,
                                     const EllipticalConstants& con,
                                     const Matrix& e_xt_sinv_x) {
  if (!st.linear())
    throw Error(ErrorCode::NotLinear,
                "closed-form influence needs a linear structure");
  if (!(con.gamma1 > 0.0) || !(con.alpha > 0.0))
    throw Error(ErrorCode::BadConstants, "need alpha > 0 and gamma1 > 0");

  const int k = st.k(), l = st.l();
  const RhoFunction rho = RhoFunction::biweight(con.c0);
  const Solved sv(st.value(theta));
  const Vector r = y0 - x0 * beta;
  const Vector sir = sv.llt.solve(r);
  const double d0 = std::sqrt(r.dot(sir));
  const double u0 = rho.u(d0);

  InfluenceReport rep;
  rep.if_beta = (u0 / con.alpha) *
                e_xt_sinv_x.ldlt().solve(x0.transpose() * sir);

  const auto& basis = st.basis_list();
  Matrix a(l, l);
  Vector rhs(l);
  const Matrix outer = sir * sir.transpose();  // Sigma^{-1} r r^T Sigma^{-1}
  for (int j = 0; j < l; ++j) {
    const Matrix wbj = sv.llt.solve(sv.llt.solve(basis[j]).transpose());
    rhs(j) = (basis[j].transpose() * outer).trace();
    for (int s = j; s < l; ++s) {
      a(j, s) = (wbj.transpose() * basis[s]).trace();
      a(s, j) = a(j, s);
    }
  }
  const double gk = con.gamma1 - k * con.gamma2;
  rep.if_theta = (k * u0 / con.gamma1) * a.ldlt().solve(rhs) +
                 (-u0 * d0 * d0 / con.gamma1 +
                  (rho.rho(d0) - con.b0) / gk) *
                     theta;
  rep.if_vec_c = st.basis_matrix() * rep.if_theta;
  return rep;
}

Matrix asy_cov_lgrg_beta(const EllipticalConstants& con,
                         const Matrix& e_xt_sinv_x) {
  Eigen::FullPivLU<Matrix> lu(e_xt_sinv_x);
  if (!lu.isInvertible())
    throw Error(ErrorCode::RankDeficient, "E[X^T Sigma^{-1} X] is singular");
  const double f = con.e_rho1_sq / (con.k * con.alpha * con.alpha);
  return f * lu.inverse();
}

Matrix asy_cov_cvf_beta(const EllipticalConstants& con, const Matrix& x,
                        const Matrix& sigma) {
  Eigen::FullPivLU<Matrix> lu(x.transpose() * x);
  if (!lu.isInvertible())
    throw Error(ErrorCode::RankDeficient, "X^T X is singular");
  const Matrix xtx_inv = lu.inverse();
  const double f = con.e_rho1_sq / (con.k * con.alpha * con.alpha);
  return f * xtx_inv * x.transpose() * sigma * x * xtx_inv;
}

Matrix asy_cov_lgrg_theta(const CovarianceStructure& st, const Vector& theta_p,
                          const EllipticalConstants& con) {
  if (!st.linear())
    throw Error(ErrorCode::NotLinear, "theta covariance needs a linear structure");
  const Solved sv(st.value(theta_p));
  const auto& basis = st.basis_list();
  const int l = st.l();
  Matrix a(l, l);
  for (int j = 0; j < l; ++j) {
    const Matrix wbj = sv.llt.solve(sv.llt.solve(basis[j]).transpose());
    for (int s = j; s < l; ++s) {
      a(j, s) = (wbj.transpose() * basis[s]).trace();
      a(s, j) = a(j, s);
    }
  }
  return 2.0 * con.sigma1 * a.inverse() +
         con.sigma2 * theta_p * theta_p.transpose();
}

Matrix asy_cov_cvf_theta(const CovarianceStructure& st, const Vector& theta_p,
                         const EllipticalConstants& con) {
  if (!st.linear())
    throw Error(ErrorCode::NotLinear, "theta covariance needs a linear structure");
  const Matrix sigma = st.value(theta_p);
  const auto& basis = st.basis_list();
  const int l = st.l();
  Matrix ltl(l, l), mid(l, l);
  for (int j = 0; j < l; ++j)
    for (int s = 0; s < l; ++s) {
      ltl(j, s) = (basis[j].transpose() * basis[s]).trace();
      // (L^T (Sigma x Sigma) L)_{js} = tr(L_j Sigma L_s Sigma)
      mid(j, s) = (basis[j] * sigma * basis[s] * sigma).trace();
    }
  const Matrix ltl_inv = ltl.inverse();
  return 2.0 * con.sigma1 * ltl_inv * mid * ltl_inv +
         con.sigma2 * theta_p * theta_p.transpose();
}

Matrix asy_cov_vec_c(const CovarianceStructure& st, const Vector& theta_p,
                     const EllipticalConstants& con) {
  const Matrix acov = asy_cov_lgrg_theta(st, theta_p, con);
  const Matrix& lmat = st.basis_matrix();
  return lmat * acov * lmat.transpose();
}

SandwichReport sandwich_empirical(const Dataset& data, const Vector& beta,
                                  const Vector& theta,
                                  const CovarianceStructure& st,
                                  const RhoFunction& rho, double b0) {
  SandwichReport rep;
  rep.d = jacobian_empirical(data, beta, theta, st, rho, b0);
  const int p = data.q + st.l();
  rep.m = Matrix::Zero(p, p);
  for (int i = 0; i < data.n; ++i) {
    const ScoreVector sv = psi(data.y[i], data.X[i], beta, theta, st, rho, b0);
    Vector stacked(p);
    stacked << sv.psi_beta, sv.psi_theta;
    rep.m.noalias() += stacked * stacked.transpose();
  }
  rep.m /= data.n;

  Eigen::JacobiSVD<Matrix> svd(rep.d, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector s = svd.singularValues();
  rep.condition_d = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1)
                                        : std::numeric_limits<double>::infinity();
  rep.ill_conditioned = !(rep.condition_d < 1e12);
  if (!std::isfinite(rep.condition_d))
    throw Error(ErrorCode::NonInvertible, "empirical derivative is singular");
  const Matrix d_inv = svd.solve(Matrix::Identity(p, p));
  rep.acov = d_inv * rep.m * d_inv.transpose();
  return rep;
}

Vector standardized_residuals(const Dataset& data, const Vector& beta,
                              const Vector& theta,
                              const CovarianceStructure& st) {
  const Solved sv(st.value(theta));
  Vector res(data.n);
  for (int i = 0; i < data.n; ++i) {
    const Vector r = data.y[i] - data.X[i] * beta;
    res(i) = std::sqrt(r.dot(sv.llt.solve(r)));
  }
  return res;
}

}  // namespace srs
