#include "srs/rho.hpp"

#include <cmath>

#include "srs/errors.hpp"

namespace srs {

RhoFunction::RhoFunction(RhoKind kind, double c0, double a0)
    : kind_(kind), c0_(c0), a0_(a0) {
  if (!(c0 > 0.0)) throw Error(ErrorCode::BadInput, "cutoff c0 must be positive");
}

RhoFunction RhoFunction::biweight(double c0) {
  return RhoFunction(RhoKind::biweight, c0, c0 * c0 / 6.0);
}

RhoFunction RhoFunction::hard_rejection(double c0) {
  return RhoFunction(RhoKind::hard_rejection, c0, 1.0);
}

namespace {
// clamp signed zeros / denormal noise from distance computations
inline double clean_abs(double s) {
  s = std::fabs(s);
  return s < 1e-300 ? 0.0 : s;
}
}  // namespace

double RhoFunction::rho(double s) const {
  s = clean_abs(s);
  if (kind_ == RhoKind::hard_rejection) return s <= c0_ ? 0.0 : 1.0;
  if (s >= c0_) return a0_;
  const double c2 = c0_ * c0_;
  const double s2 = s * s;
  return s2 / 2.0 - s2 * s2 / (2.0 * c2) + s2 * s2 * s2 / (6.0 * c2 * c2);
}

double RhoFunction::rho1(double s) const {
  if (kind_ != RhoKind::biweight)
    throw Error(ErrorCode::NotDifferentiable, "hard rejection has no derivative");
  s = clean_abs(s);
  if (s > c0_) return 0.0;
  const double t = 1.0 - (s / c0_) * (s / c0_);
  return s * t * t;
}

double RhoFunction::rho2(double s) const {
  if (kind_ != RhoKind::biweight)
    throw Error(ErrorCode::NotDifferentiable, "hard rejection has no derivative");
  s = clean_abs(s);
  if (s > c0_) return 0.0;
  const double t = (s / c0_) * (s / c0_);
  return (1.0 - t) * (1.0 - 5.0 * t);
}

double RhoFunction::u(double s) const {
  if (kind_ != RhoKind::biweight)
    throw Error(ErrorCode::NotDifferentiable, "hard rejection has no derivative");
  s = clean_abs(s);
  if (s > c0_) return 0.0;
  const double t = 1.0 - (s / c0_) * (s / c0_);
  return t * t;  // continuous limit u(0) = 1
}

RhoDerivs RhoFunction::derivs(double s, double b0) const {
  const double us = u(s);
  return RhoDerivs{rho1(s), rho2(s), us,
                   us * s * s - rho(s) + b0};
}

const char* rho_kind_name(RhoKind k) {
  return k == RhoKind::biweight ? "biweight" : "hard_rejection";
}

RhoKind rho_kind_from_name(const std::string& name) {
  if (name == "biweight") return RhoKind::biweight;
  if (name == "hard_rejection") return RhoKind::hard_rejection;
  throw Error(ErrorCode::BadInput, "unknown rho kind '" + name + "'");
}

}  // namespace srs
