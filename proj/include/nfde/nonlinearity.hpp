#pragma once

#include <span>
#include <utility>

#include "nfde/report.hpp"

namespace nfde {

enum class NonlinearityKind { linear, pure_power, two_power };

// F(r) = a r^{m_lo} + b r^{m_hi}, odd extension for r < 0.
// The linear kind (m = 1) exists for solver consistency tests only;
// it violates the band 0 < mu0 and is rejected by the estimate layer.
class Nonlinearity {
 public:
  static Nonlinearity pure_power(double m);
  static Nonlinearity two_power(double m_lo, double m_hi, double a, double b);
  static Nonlinearity linear();
  static Nonlinearity from_json(const json& j);

  // Copy with an overridden (mu0, mu1) band; used to probe the checks.
  Nonlinearity with_declared_band(double mu0, double mu1) const;

  NonlinearityKind kind() const { return kind_; }
  bool is_linear() const { return kind_ == NonlinearityKind::linear; }
  double m_lo() const { return m_lo_; }
  double m_hi() const { return m_hi_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double mu0() const { return mu0_; }
  double mu1() const { return mu1_; }
  double m0() const { return 1.0 / (1.0 - mu0_); }
  double m1() const { return 1.0 / (1.0 - mu1_); }
  // (a1/a0)^{a0} >= 1 and (a0/a1)^{a1} <= 1 with a_i = m_i.
  double kappa_upper() const;
  double kappa_lower() const;

  double value(double r) const;
  double derivative(double r) const;
  double second_derivative(double r) const;
  double inverse(double v) const;
  // r with F'(r) = z, z >= 0.
  double derivative_inverse(double z) const;

  double legendre(double z) const;
  double legendre_derivative(double z) const;
  double legendre_second_derivative(double z) const;

  json to_json() const;

 private:
  Nonlinearity() = default;
  void compute_band();

  NonlinearityKind kind_ = NonlinearityKind::pure_power;
  double m_lo_ = 2, m_hi_ = 2, a_ = 1, b_ = 0;
  double mu0_ = 0.5, mu1_ = 0.5;
};

double eval_F(const Nonlinearity& nl, double r);
double eval_Fprime(const Nonlinearity& nl, double r);
double eval_Finv(const Nonlinearity& nl, double v);
double legendre(const Nonlinearity& nl, double z);

CheckReport check_N1(const Nonlinearity& nl, std::span<const double> r_grid, double tol = 1e-6);

struct Envelope {
  double lower;
  double upper;
};
Envelope envelope_bounds(const Nonlinearity& nl, double r, double r0);
// Same sandwich for F*, exponents m/(m-1) swapped as in the dual table row.
Envelope legendre_envelope_bounds(const Nonlinearity& nl, double z, double z0);

CheckReport young_check(const Nonlinearity& nl, double a, double b, double eps);

double theta(const Nonlinearity& nl, int i, double gamma, int N, double s);

}  // namespace nfde
