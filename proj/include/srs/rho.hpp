#ifndef SRS_RHO_HPP
#define SRS_RHO_HPP

#include <string>

namespace srs {

enum class RhoKind { biweight, hard_rejection };

struct RhoDerivs {
  double rho1;  // rho'(s)
  double rho2;  // rho''(s)
  double u;     // rho'(s)/s, continuous at 0
  double v;     // u(s) s^2 - rho(s) + b0
};

/// Bounded rho function with cutoff c0: non-decreasing on [0,c0] and
/// constant a0 = rho(c0) beyond. Immutable; safe for shared reads.
class RhoFunction {
 public:
  static RhoFunction biweight(double c0);        // a0 = c0^2/6
  static RhoFunction hard_rejection(double c0);  // a0 = 1

  RhoKind kind() const { return kind_; }
  double c0() const { return c0_; }
  double a0() const { return a0_; }

  double rho(double s) const;

  /// First/second derivative and the weight kernels; biweight only
  /// (hard rejection throws NotDifferentiable). b0 enters through v.
  RhoDerivs derivs(double s, double b0) const;

  double rho1(double s) const;
  double rho2(double s) const;
  double u(double s) const;

  bool differentiable() const { return kind_ == RhoKind::biweight; }

 private:
  RhoFunction(RhoKind kind, double c0, double a0);
  RhoKind kind_;
  double c0_;
  double a0_;
};

const char* rho_kind_name(RhoKind k);
RhoKind rho_kind_from_name(const std::string& name);

}  // namespace srs

#endif
