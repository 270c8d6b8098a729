#include "srs/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "srs/inference.hpp"
#include "srs/rng.hpp"

namespace srs {

namespace {

struct FactoredV {
  Matrix v;
  Eigen::LLT<Matrix> llt;
  double det;

  explicit FactoredV(const Matrix& m) : v(m), llt(m) {
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::NotPds, "V(theta) is not positive definite");
    double d = 1.0;
    const auto& l = llt.matrixLLT();
    for (int i = 0; i < l.rows(); ++i) d *= l(i, i) * l(i, i);
    det = d;
  }

  double dist(const Vector& r) const {
    Vector w = r;
    llt.matrixL().solveInPlace(w);
    return w.norm();
  }
};

Vector all_distances(const Dataset& data, const Vector& beta,
                     const FactoredV& fv) {
  Vector d(data.n);
  for (int i = 0; i < data.n; ++i)
    d(i) = fv.dist(data.y[i] - data.X[i] * beta);
  return d;
}

double mean_rho_scaled(const Vector& d, const RhoFunction& rho, double s) {
  const double inv = 1.0 / std::sqrt(s);
  double sum = 0.0;
  for (int i = 0; i < d.size(); ++i) sum += rho.rho(d(i) * inv);
  return sum / d.size();
}

// Unique s* with mean rho(d_i / sqrt(s*)) = b0; the mean is non-increasing
// in s. Geometric bisection.
double solve_constraint_scale(const Vector& d, const RhoFunction& rho,
                              double b0) {
  if (d.maxCoeff() <= 0.0)
    throw Error(ErrorCode::Degenerate, "all residuals are zero (exact fit)");
  auto g = [&](double s) { return mean_rho_scaled(d, rho, s) - b0; };
  double lo = 1.0, hi = 1.0;
  if (g(1.0) > 0.0) {
    while (g(hi) > 0.0) {
      hi *= 4.0;
      if (hi > 1e12)
        throw Error(ErrorCode::NoFeasibleScale,
                    "constraint mean stays above b0 for scales up to 1e12");
    }
  } else {
    while (g(lo) < 0.0) {
      lo *= 0.25;
      if (lo < 1e-280)
        throw Error(ErrorCode::Degenerate, "constraint scale collapsed");
    }
  }
  double mid = std::sqrt(lo * hi);
  for (int it = 0; it < 400; ++it) {
    mid = std::sqrt(lo * hi);
    const double gm = g(mid);
    if (std::fabs(gm) <= 1e-10) return mid;
    if (gm > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  if (std::fabs(g(mid)) > 1e-9)
    throw Error(ErrorCode::NoFeasibleScale, "constraint bisection stalled");
  return mid;
}

// Hard-rejection scaling: smallest s with at most floor(n b0 / a0)
// distances outside the cutoff (the MVE cylinder).
double mve_scale(const Vector& d, const RhoFunction& rho, double b0) {
  const int n = static_cast<int>(d.size());
  const int allowed_out = static_cast<int>(std::floor(n * b0 / rho.a0()));
  const int m = n - allowed_out;  // points that must be inside
  std::vector<double> s(d.data(), d.data() + n);
  std::nth_element(s.begin(), s.begin() + (m - 1), s.end());
  const double dm = s[m - 1];
  if (dm <= 0.0)
    throw Error(ErrorCode::Degenerate, "covering distance is zero");
  return (dm / rho.c0()) * (dm / rho.c0());
}

struct Candidate {
  Vector beta;
  Vector theta;
  double det = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

double rel_change(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
}

}  // namespace

double mahalanobis_d(const Vector& y, const Matrix& x, const Vector& beta,
                     const Vector& theta, const CovarianceStructure& st) {
  FactoredV fv(st.value(theta));
  return fv.dist(y - x * beta);
}

Vector mahalanobis_all(const Dataset& data, const Vector& beta,
                       const Vector& theta, const CovarianceStructure& st) {
  FactoredV fv(st.value(theta));
  return all_distances(data, beta, fv);
}

Vector scale_to_constraint(const Dataset& data, const Vector& beta,
                           const Vector& theta, const CovarianceStructure& st,
                           const RhoFunction& rho, double b0) {
  FactoredV fv(st.value(theta));
  const Vector d = all_distances(data, beta, fv);
  const double s = rho.kind() == RhoKind::hard_rejection
                       ? mve_scale(d, rho, b0)
                       : solve_constraint_scale(d, rho, b0);
  return st.scale_theta(theta, s);
}

std::pair<Vector, Vector> concentration_step(const Dataset& data,
                                             const Vector& beta,
                                             const Vector& theta,
                                             const CovarianceStructure& st,
                                             const RhoFunction& rho,
                                             double b0) {
  const int q = data.q;
  const int ssz = data.k;
  FactoredV fv(st.value(theta));
  const Vector d = all_distances(data, beta, fv);

  Vector u(data.n), v(data.n);
  double u_d2 = 0.0;
  for (int i = 0; i < data.n; ++i) {
    const RhoDerivs rd = rho.derivs(d(i), b0);
    u(i) = rd.u;
    v(i) = rd.v;
    u_d2 += rd.u * d(i) * d(i);
  }
  if (u_d2 <= 1e-12)
    throw Error(ErrorCode::Degenerate, "all weights vanished or exact fit");

  // beta: u-weighted GLS
  Matrix a = Matrix::Zero(q, q);
  Vector rhs = Vector::Zero(q);
  for (int i = 0; i < data.n; ++i) {
    if (u(i) == 0.0) continue;
    Matrix vx = fv.llt.solve(data.X[i]);  // V^{-1} X_i
    a.noalias() += u(i) * data.X[i].transpose() * vx;
    rhs.noalias() += u(i) * vx.transpose() * data.y[i];
  }
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    if (es.eigenvalues().minCoeff() <=
        1e-13 * std::max(es.eigenvalues().maxCoeff(), 0.0))
      throw Error(ErrorCode::RankDeficient,
                  "weighted normal matrix is singular (weights removed too "
                  "many subjects)");
  }
  const Vector beta_new = a.ldlt().solve(rhs);

  Vector theta_new;
  if (st.linear()) {
    // theta solves sum Psi_theta = 0 at the current weights:
    // (L^T W L) theta = L^T W vec(S_u), W = V^{-1} (x) V^{-1}
    Matrix su = Matrix::Zero(ssz, ssz);
    double v_sum = 0.0;
    for (int i = 0; i < data.n; ++i) {
      const Vector r = data.y[i] - data.X[i] * beta_new;
      if (u(i) != 0.0) su.noalias() += u(i) * r * r.transpose();
      v_sum += v(i);
    }
    if (std::fabs(v_sum) <= 1e-14)
      throw Error(ErrorCode::Degenerate, "v-weights sum to zero");
    su *= static_cast<double>(ssz) / v_sum;

    const auto& basis = st.basis_list();
    const int l = st.l();
    // V^{-1} L_j V^{-1} once per basis element
    std::vector<Matrix> wb(l);
    for (int j = 0; j < l; ++j)
      wb[j] = fv.llt.solve(fv.llt.solve(basis[j]).transpose());
    Matrix m(l, l);
    Vector c(l);
    for (int j = 0; j < l; ++j) {
      c(j) = (wb[j].transpose() * su).trace();
      for (int s = j; s < l; ++s) {
        m(j, s) = (wb[j].transpose() * basis[s]).trace();
        m(s, j) = m(j, s);
      }
    }
    Eigen::LLT<Matrix> mllt(m);
    if (mllt.info() != Eigen::Success)
      throw Error(ErrorCode::RankDeficient, "projected normal matrix singular");
    theta_new = mllt.solve(c);
  } else {
    // general structure: one damped Gauss-Newton step on the score
    auto score = [&](const Vector& th) {
      Vector g = Vector::Zero(st.l());
      for (int i = 0; i < data.n; ++i) {
        const ScoreVector sv =
            psi_general(data.y[i], data.X[i], beta_new, th, st, rho, b0);
        g += sv.psi_theta;
      }
      return Vector(g / data.n);
    };
    const Vector g0 = score(theta);
    const int l = st.l();
    Matrix jac(l, l);
    for (int j = 0; j < l; ++j) {
      const double h = 1e-6 * (1.0 + std::fabs(theta(j)));
      Vector tp = theta, tm = theta;
      tp(j) += h;
      tm(j) -= h;
      jac.col(j) = (score(tp) - score(tm)) / (2.0 * h);
    }
    Vector delta = jac.fullPivLu().solve(-g0);
    theta_new = theta + delta;
    bool feasible = false;
    for (int h = 0; h < 20 && !feasible; ++h) {
      try {
        FactoredV probe(st.value(theta_new));
        feasible = true;
      } catch (const Error&) {
        delta *= 0.5;
        theta_new = theta + delta;
      }
    }
    if (!feasible)
      throw Error(ErrorCode::Degenerate, "theta step left the feasible set");
  }

  theta_new = scale_to_constraint(data, beta_new, theta_new, st, rho, b0);
  return {beta_new, theta_new};
}

namespace {

double det_of(const CovarianceStructure& st, const Vector& theta) {
  return FactoredV(st.value(theta)).det;
}

double score_norm_at(const Dataset& data, const Vector& beta,
                     const Vector& theta, const CovarianceStructure& st,
                     const RhoFunction& rho, double b0) {
  Vector acc = Vector::Zero(data.q + st.l());
  for (int i = 0; i < data.n; ++i) {
    const ScoreVector sv = psi(data.y[i], data.X[i], beta, theta, st, rho, b0);
    acc.head(data.q) += sv.psi_beta;
    acc.tail(st.l()) += sv.psi_theta;
  }
  return acc.norm() / data.n;
}

// Elemental start: stacked least squares for beta, scatter projection
// for theta, eigen-floored and rescaled onto the constraint.
bool elemental_start(const Dataset& data, const CovarianceStructure& st,
                     const RhoFunction& rho, double b0,
                     const SolverConfig& cfg, Rng& rng, int msub,
                     Vector& beta0, Vector& theta0) {
  const int n = data.n, k = data.k, q = data.q;
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int j = 0; j < msub; ++j)
    std::swap(idx[j], idx[j + static_cast<int>(rng.below(n - j))]);

  Matrix bmat(msub * k, q);
  Vector brhs(msub * k);
  for (int j = 0; j < msub; ++j) {
    bmat.middleRows(j * k, k) = data.X[idx[j]];
    brhs.segment(j * k, k) = data.y[idx[j]];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(bmat);
  if (qr.rank() < q) return false;
  beta0 = qr.solve(brhs);

  Matrix scatter = Matrix::Zero(k, k);
  for (int j = 0; j < msub; ++j) {
    const Vector r = data.y[idx[j]] - data.X[idx[j]] * beta0;
    scatter.noalias() += r * r.transpose();
  }
  scatter /= msub;

  try {
    Vector th = st.project_scatter(scatter);
    const double lam1 = std::max(validate_pds(st.value(th)).eigenvalues(0), 0.0);
    th = st.repair_pds(th, cfg.eig_floor * std::max(lam1, 1.0));
    theta0 = scale_to_constraint(data, beta0, th, st, rho, b0);
  } catch (const Error&) {
    return false;
  }
  return true;
}

SFit assemble_fit(const Dataset& data, const CovarianceStructure& st,
                  const RhoFunction& rho, double b0, const SolverConfig& cfg,
                  const Candidate& win, int used, double det_gap) {
  SFit fit;
  fit.beta = win.beta;
  fit.theta = win.theta;
  fit.V = st.value(win.theta);
  FactoredV fv(fit.V);
  fit.det_V = fv.det;
  fit.b0 = b0;
  fit.distances = all_distances(data, win.beta, fv);
  fit.constraint_residual = mean_rho_scaled(fit.distances, rho, 1.0) - b0;
  fit.iterations = win.iterations;
  fit.n_subsamples_used = used;
  fit.seed = cfg.seed;
  fit.det_gap_runner_up = det_gap;
  if (rho.differentiable()) {
    fit.score_norm =
        score_norm_at(data, win.beta, win.theta, st, rho, b0);
    const double xi_norm =
        std::sqrt(win.beta.squaredNorm() + win.theta.squaredNorm());
    fit.converged = win.converged &&
                    std::fabs(fit.constraint_residual) <= 1e-9 &&
                    fit.score_norm <= 1e-6 * (1.0 + xi_norm);
  } else {
    fit.score_norm = 0.0;
    fit.converged = win.converged;
  }
  return fit;
}

}  // namespace

SFit fit_s(const Dataset& data, const CovarianceStructure& st,
           const RhoFunction& rho, double b0, const SolverConfig& cfg) {
  data.validate();
  if (data.k != st.k())
    throw Error(ErrorCode::BadDim, "dataset and structure disagree on k");
  if (!(b0 > 0.0 && b0 < rho.a0()))
    throw Error(ErrorCode::BadInput, "need 0 < b0 < a0");

  const int q = data.q, l = st.l();
  int msub = static_cast<int>(std::ceil(static_cast<double>(q + l) / data.k)) + 1;
  msub = std::min(std::max(msub, 2), data.n);

  const bool mve_mode = !rho.differentiable();

  std::vector<Candidate> cands;
  cands.reserve(cfg.n_subsamples);
  int used = 0;
  for (int c = 0; c < cfg.n_subsamples; ++c) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(c));
    Candidate cand;
    if (!elemental_start(data, st, rho, b0, cfg, rng, msub, cand.beta,
                         cand.theta))
      continue;
    ++used;

    if (mve_mode) {
      // no derivatives: candidates are judged by determinant only
      cand.det = det_of(st, cand.theta);
      cand.converged = true;
      cands.push_back(std::move(cand));
      continue;
    }

    double det = det_of(st, cand.theta);
    for (int it = 1; it <= cfg.max_iter; ++it) {
      Vector beta_p, theta_p;
      try {
        std::tie(beta_p, theta_p) =
            concentration_step(data, cand.beta, cand.theta, st, rho, b0);
      } catch (const Error&) {
        break;
      }
      double det_p = det_of(st, theta_p);
      bool accepted = det_p <= det * (1.0 + 1e-14);
      if (!accepted) {
        for (int h = 1; h <= 10 && !accepted; ++h) {
          const double w = std::ldexp(1.0, -h);  // 2^-h
          const Vector beta_b = cand.beta + w * (beta_p - cand.beta);
          Vector theta_b = cand.theta + w * (theta_p - cand.theta);
          try {
            theta_b = scale_to_constraint(data, beta_b, theta_b, st, rho, b0);
          } catch (const Error&) {
            continue;
          }
          const double det_b = det_of(st, theta_b);
          if (det_b <= det * (1.0 + 1e-14)) {
            beta_p = beta_b;
            theta_p = theta_b;
            det_p = det_b;
            accepted = true;
          }
        }
      }
      if (!accepted) break;  // damping exhausted, candidate stops

      const bool settled = rel_change(beta_p, cand.beta) < cfg.tol &&
                           rel_change(theta_p, cand.theta) < cfg.tol &&
                           std::fabs(det_p - det) < cfg.tol * (1.0 + det);
      cand.beta = beta_p;
      cand.theta = theta_p;
      det = det_p;
      cand.iterations = it;
      if (settled) {
        cand.converged = true;
        break;
      }
    }
    cand.det = det;
    cands.push_back(std::move(cand));
  }

  if (cands.empty())
    throw Error(ErrorCode::NoSolution, "no usable subsample candidate");

  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.det != b.det) return a.det < b.det;
    return a.theta.norm() < b.theta.norm();
  };

  int win = -1, second = -1;
  for (int i = 0; i < static_cast<int>(cands.size()); ++i) {
    if (!cands[i].converged) continue;
    if (win < 0 || better(cands[i], cands[win])) {
      second = win;
      win = i;
    } else if (second < 0 || better(cands[i], cands[second])) {
      second = i;
    }
  }

  if (win < 0) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(cands.size()); ++i)
      if (cands[i].det < cands[best].det) best = i;
    SFit partial = assemble_fit(data, st, rho, b0, cfg, cands[best], used,
                                std::numeric_limits<double>::infinity());
    partial.converged = false;
    throw NoSolutionError("no subsample candidate converged", partial);
  }

  const double gap = second >= 0
                         ? cands[second].det - cands[win].det
                         : std::numeric_limits<double>::infinity();
  return assemble_fit(data, st, rho, b0, cfg, cands[win], used, gap);
}

std::pair<Vector, Vector> fit_ml_reference(const Dataset& data,
                                           const CovarianceStructure& st) {
  data.validate();
  const int n = data.n, k = data.k, q = data.q;

  // start from stacked OLS and the residual scatter
  Matrix bmat(n * k, q);
  Vector brhs(n * k);
  for (int i = 0; i < n; ++i) {
    bmat.middleRows(i * k, k) = data.X[i];
    brhs.segment(i * k, k) = data.y[i];
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(bmat);
  if (qr.rank() < q)
    throw Error(ErrorCode::RankDeficient, "stacked design is rank deficient");
  Vector beta = qr.solve(brhs);

  auto scatter_at = [&](const Vector& b) {
    Matrix s = Matrix::Zero(k, k);
    for (int i = 0; i < n; ++i) {
      const Vector r = data.y[i] - data.X[i] * b;
      s.noalias() += r * r.transpose();
    }
    return Matrix(s / n);
  };

  Vector theta = st.project_scatter(scatter_at(beta));
  theta = st.repair_pds(theta, 1e-10);

  auto loglik = [&](const Vector& b, const Vector& th) {
    FactoredV fv(st.value(th));
    double acc = -0.5 * n * std::log(fv.det);
    for (int i = 0; i < n; ++i) {
      const double d = fv.dist(data.y[i] - data.X[i] * b);
      acc -= 0.5 * d * d;
    }
    return acc;
  };

  for (int it = 0; it < 500; ++it) {
    FactoredV fv(st.value(theta));
    // GLS for beta
    Matrix a = Matrix::Zero(q, q);
    Vector rhs = Vector::Zero(q);
    for (int i = 0; i < n; ++i) {
      Matrix vx = fv.llt.solve(data.X[i]);
      a.noalias() += data.X[i].transpose() * vx;
      rhs.noalias() += vx.transpose() * data.y[i];
    }
    const Vector beta_new = a.ldlt().solve(rhs);

    Vector theta_new;
    if (st.linear()) {
      // ML fixed point: (L^T W L) theta = L^T W vec(S)
      const Matrix s = scatter_at(beta_new);
      const auto& basis = st.basis_list();
      const int l = st.l();
      std::vector<Matrix> wb(l);
      for (int j = 0; j < l; ++j)
        wb[j] = fv.llt.solve(fv.llt.solve(basis[j]).transpose());
      Matrix m(l, l);
      Vector c(l);
      for (int j = 0; j < l; ++j) {
        c(j) = (wb[j].transpose() * s).trace();
        for (int t = j; t < l; ++t) {
          m(j, t) = (wb[j].transpose() * basis[t]).trace();
          m(t, j) = m(j, t);
        }
      }
      theta_new = m.ldlt().solve(c);
      try {
        FactoredV check(st.value(theta_new));
      } catch (const Error&) {
        theta_new = st.repair_pds(theta_new, 1e-10);
      }
    } else {
      // damped Newton with numeric derivatives on the profile likelihood
      const int l = st.l();
      Vector g(l);
      Matrix h(l, l);
      const double f0 = loglik(beta_new, theta);
      Vector step(l);
      for (int j = 0; j < l; ++j) step(j) = 1e-5 * (1.0 + std::fabs(theta(j)));
      auto safe_ll = [&](Vector th) {
        th = st.repair_pds(th, 1e-12);
        return loglik(beta_new, th);
      };
      for (int j = 0; j < l; ++j) {
        Vector tp = theta, tm = theta;
        tp(j) += step(j);
        tm(j) -= step(j);
        g(j) = (safe_ll(tp) - safe_ll(tm)) / (2.0 * step(j));
        h(j, j) = (safe_ll(tp) - 2.0 * f0 + safe_ll(tm)) / (step(j) * step(j));
      }
      for (int j = 0; j < l; ++j)
        for (int t = j + 1; t < l; ++t) {
          Vector tpp = theta, tpm = theta, tmp = theta, tmm = theta;
          tpp(j) += step(j); tpp(t) += step(t);
          tpm(j) += step(j); tpm(t) -= step(t);
          tmp(j) -= step(j); tmp(t) += step(t);
          tmm(j) -= step(j); tmm(t) -= step(t);
          h(j, t) = (safe_ll(tpp) - safe_ll(tpm) - safe_ll(tmp) + safe_ll(tmm)) /
                    (4.0 * step(j) * step(t));
          h(t, j) = h(j, t);
        }
      Vector delta = (-h).fullPivLu().solve(g);
      if (!delta.allFinite()) delta = g;  // gradient fallback
      theta_new = theta + delta;
      for (int half = 0; half < 30; ++half) {
        Vector cand = st.repair_pds(theta_new, 1e-12);
        if (safe_ll(cand) >= f0 - 1e-12) {
          theta_new = cand;
          break;
        }
        delta *= 0.5;
        theta_new = theta + delta;
      }
      theta_new = st.repair_pds(theta_new, 1e-12);
    }

    const double db = rel_change(beta_new, beta);
    const double dt = rel_change(theta_new, theta);
    beta = beta_new;
    theta = theta_new;
    if (db < 1e-10 && dt < 1e-10) return {beta, theta};
  }
  throw Error(ErrorCode::NoSolution, "ML reference fit did not converge");
}

BdpBound bdp_bound(int n, double r, int kappa) {
  if (n < 2 || kappa < 1 || kappa >= n)
    throw Error(ErrorCode::BadInput, "need n >= 2 and 1 <= kappa < n");
  if (!(r > 0.0 && r < 1.0))
    throw Error(ErrorCode::BadInput, "need 0 < r < 1");
  BdpBound b;
  b.lower_beta = std::ceil(n * r) / n;
  b.exact_theta = b.lower_beta;
  b.valid = r <= static_cast<double>(n - kappa) / (2.0 * n);
  return b;
}

}  // namespace srs
