#include "nfde/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace nfde {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite input");
}

// Solves log g(e^rho) = log target for increasing g with log-slope in [slo, shi] > 0.
double solve_log_monotone(const std::function<double(double)>& g, double target, double rho_lo,
                          double rho_hi, double slope_lo) {
  const double lt = std::log(target);
  double rho = 0.5 * (rho_lo + rho_hi);
  for (int it = 0; it < 200; ++it) {
    const double r = std::exp(rho);
    const double val = g(r);
    const double f = std::log(val) - lt;
    if (f > 0) rho_hi = rho; else rho_lo = rho;
    if (f == 0.0 || rho_hi - rho_lo < 1e-15 * std::max(1.0, std::abs(rho))) break;
    // Newton step on the log-log map, slope bounded below by slope_lo.
    const double h = 1e-7 * std::max(1.0, std::abs(rho));
    const double slope = std::max(slope_lo, (std::log(g(std::exp(rho + h))) - std::log(g(std::exp(rho - h)))) / (2 * h));
    double next = rho - f / slope;
    if (!(next > rho_lo && next < rho_hi)) next = 0.5 * (rho_lo + rho_hi);
    if (std::abs(next - rho) < 1e-16 * std::max(1.0, std::abs(rho))) { rho = next; break; }
    rho = next;
  }
  return std::exp(rho);
}

}  // namespace

Nonlinearity Nonlinearity::pure_power(double m) {
  if (!std::isfinite(m) || !(m > 1.0)) throw ConfigError("pure power requires finite m > 1");
  Nonlinearity nl;
  nl.kind_ = NonlinearityKind::pure_power;
  nl.m_lo_ = nl.m_hi_ = m;
  nl.a_ = 1.0;
  nl.b_ = 0.0;
  nl.mu0_ = nl.mu1_ = (m - 1.0) / m;
  return nl;
}

Nonlinearity Nonlinearity::two_power(double m_lo, double m_hi, double a, double b) {
  if (!std::isfinite(m_lo) || !std::isfinite(m_hi) || !(m_lo > 1.0) || !(m_hi > 1.0))
    throw ConfigError("two-power requires finite exponents > 1");
  if (m_lo > m_hi) throw ConfigError("two-power requires m_lo <= m_hi");
  if (!(a >= 0.0) || !(b >= 0.0) || !(a + b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw ConfigError("two-power requires coefficients a, b >= 0 with a + b > 0");
  Nonlinearity nl;
  nl.kind_ = NonlinearityKind::two_power;
  nl.m_lo_ = m_lo;
  nl.m_hi_ = m_hi;
  nl.a_ = a;
  nl.b_ = b;
  nl.compute_band();
  return nl;
}

Nonlinearity Nonlinearity::linear() {
  Nonlinearity nl;
  nl.kind_ = NonlinearityKind::linear;
  nl.m_lo_ = nl.m_hi_ = 1.0;
  nl.a_ = 1.0;
  nl.b_ = 0.0;
  nl.mu0_ = nl.mu1_ = 0.0;
  return nl;
}

Nonlinearity Nonlinearity::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("nonlinearity: missing kind");
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "pure_power") return pure_power(j.at("m").get<double>());
    if (kind == "two_power")
      return two_power(j.at("m_lo").get<double>(), j.at("m_hi").get<double>(), j.value("a", 1.0),
                       j.value("b", 1.0));
    if (kind == "linear") return linear();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("nonlinearity: ") + e.what());
  }
  throw ConfigError("nonlinearity: unknown kind '" + kind + "'");
}

Nonlinearity Nonlinearity::with_declared_band(double mu0, double mu1) const {
  if (!(mu0 > 0.0) || !(mu0 <= mu1) || !(mu1 < 1.0)) throw ConfigError("band requires 0 < mu0 <= mu1 < 1");
  Nonlinearity nl = *this;
  nl.mu0_ = mu0;
  nl.mu1_ = mu1;
  return nl;
}

void Nonlinearity::compute_band() {
  const double p = m_lo_, q = m_hi_;
  if (a_ == 0.0 || b_ == 0.0 || p == q) {
    const double m = (b_ == 0.0) ? p : (a_ == 0.0 ? q : p);
    mu0_ = mu1_ = (m - 1.0) / m;
    return;
  }
  // F F''/F'^2 depends only on x = r^{q-p}.
  auto ratio = [&](double x) {
    return (a_ + b_ * x) * (a_ * p * (p - 1) + b_ * q * (q - 1) * x) / std::pow(a_ * p + b_ * q * x, 2);
  };
  double lo = std::min((p - 1) / p, (q - 1) / q), hi = std::max((p - 1) / p, (q - 1) / q);
  constexpr int kSamples = 20001;
  auto at = [&](int k) { return -16.0 + 32.0 * k / (kSamples - 1); };  // log10 x
  int k_lo = -1, k_hi = -1;
  for (int k = 0; k < kSamples; ++k) {
    const double v = ratio(std::pow(10.0, at(k)));
    if (v < lo) lo = v, k_lo = k;
    if (v > hi) hi = v, k_hi = k;
  }
  // Polish interior extrema; a grid maximum alone undershoots by ~1e-7.
  constexpr int bits = std::numeric_limits<double>::digits;
  if (k_lo > 0 && k_lo < kSamples - 1) {
    const auto r = boost::math::tools::brent_find_minima([&](double e) { return ratio(std::pow(10.0, e)); },
                                                         at(k_lo - 1), at(k_lo + 1), bits);
    lo = std::min(lo, r.second);
  }
  if (k_hi > 0 && k_hi < kSamples - 1) {
    const auto r = boost::math::tools::brent_find_minima([&](double e) { return -ratio(std::pow(10.0, e)); },
                                                         at(k_hi - 1), at(k_hi + 1), bits);
    hi = std::max(hi, -r.second);
  }
  mu0_ = lo;
  mu1_ = hi;
}

double Nonlinearity::kappa_upper() const {
  const double a0 = m0(), a1 = m1();
  return std::pow(a1 / a0, a0);
}

double Nonlinearity::kappa_lower() const {
  const double a0 = m0(), a1 = m1();
  return std::pow(a0 / a1, a1);
}

double Nonlinearity::value(double r) const {
  require_finite(r, "F");
  if (kind_ == NonlinearityKind::linear) return r;
  const double x = std::abs(r);
  double v = a_ * std::pow(x, m_lo_);
  if (b_ != 0.0) v += b_ * std::pow(x, m_hi_);
  return r < 0 ? -v : v;
}

double Nonlinearity::derivative(double r) const {
  require_finite(r, "F'");
  if (kind_ == NonlinearityKind::linear) return 1.0;
  const double x = std::abs(r);
  if (x == 0.0) return 0.0;
  double v = a_ * m_lo_ * std::pow(x, m_lo_ - 1);
  if (b_ != 0.0) v += b_ * m_hi_ * std::pow(x, m_hi_ - 1);
  return v;
}

double Nonlinearity::second_derivative(double r) const {
  require_finite(r, "F''");
  if (kind_ == NonlinearityKind::linear) return 0.0;
  const double x = std::abs(r);
  if (x == 0.0) return m_lo_ >= 2.0 ? (m_lo_ == 2.0 ? 2 * a_ : 0.0) : std::numeric_limits<double>::infinity();
  double v = a_ * m_lo_ * (m_lo_ - 1) * std::pow(x, m_lo_ - 2);
  if (b_ != 0.0) v += b_ * m_hi_ * (m_hi_ - 1) * std::pow(x, m_hi_ - 2);
  return r < 0 ? -v : v;
}

double Nonlinearity::inverse(double v) const {
  require_finite(v, "F^{-1}");
  if (v < 0) return -inverse(-v);
  if (v == 0.0) return 0.0;
  if (kind_ == NonlinearityKind::linear) return v;
  if (b_ == 0.0) return std::pow(v / a_, 1.0 / m_lo_);
  if (a_ == 0.0) return std::pow(v / b_, 1.0 / m_hi_);
  // a r^p <= F, b r^q <= F bound the root from above; (a+b) max(r^p, r^q) >= F from below.
  const double up = std::min(std::pow(v / a_, 1.0 / m_lo_), std::pow(v / b_, 1.0 / m_hi_));
  const double c = v / (a_ + b_);
  const double down = std::min(std::pow(c, 1.0 / m_lo_), std::pow(c, 1.0 / m_hi_));
  double r = solve_log_monotone([this](double x) { return value(x); }, v, std::log(down) - 1e-12,
                                std::log(up) + 1e-12, m_lo_);
  // Final Newton polish in the linear variable.
  for (int it = 0; it < 3; ++it) {
    const double d = derivative(r);
    if (d <= 0) break;
    r -= (value(r) - v) / d;
  }
  return r;
}

double Nonlinearity::derivative_inverse(double z) const {
  require_finite(z, "(F')^{-1}");
  if (kind_ == NonlinearityKind::linear) throw DomainError("(F')^{-1} undefined for the linear kind");
  if (z < 0) throw DomainError("(F')^{-1} requires z >= 0");
  if (z == 0.0) return 0.0;
  const double p = m_lo_, q = m_hi_;
  if (b_ == 0.0) return std::pow(z / (a_ * p), 1.0 / (p - 1));
  if (a_ == 0.0) return std::pow(z / (b_ * q), 1.0 / (q - 1));
  const double up = std::min(std::pow(z / (a_ * p), 1.0 / (p - 1)), std::pow(z / (b_ * q), 1.0 / (q - 1)));
  const double c = z / (a_ * p + b_ * q);
  const double down = std::min(std::pow(c, 1.0 / (p - 1)), std::pow(c, 1.0 / (q - 1)));
  double r = solve_log_monotone([this](double x) { return derivative(x); }, z, std::log(down) - 1e-12,
                                std::log(up) + 1e-12, p - 1);
  for (int it = 0; it < 3; ++it) {
    const double d2 = second_derivative(r);
    if (!(d2 > 0) || !std::isfinite(d2)) break;
    r -= (derivative(r) - z) / d2;
  }
  return r;
}

double Nonlinearity::legendre(double z) const {
  require_finite(z, "F*");
  if (z < 0) return legendre(-z);
  if (z == 0.0) return 0.0;
  const double r = derivative_inverse(z);
  // z r - F(r) with z = F'(r), written without cancellation.
  double v = a_ * (m_lo_ - 1) * std::pow(r, m_lo_);
  if (b_ != 0.0) v += b_ * (m_hi_ - 1) * std::pow(r, m_hi_);
  return v;
}

double Nonlinearity::legendre_derivative(double z) const {
  if (z < 0) return -legendre_derivative(-z);
  return derivative_inverse(z);
}

double Nonlinearity::legendre_second_derivative(double z) const {
  const double r = derivative_inverse(std::abs(z));
  return 1.0 / second_derivative(r);
}

json Nonlinearity::to_json() const {
  json j;
  switch (kind_) {
    case NonlinearityKind::linear: j["kind"] = "linear"; break;
    case NonlinearityKind::pure_power: j["kind"] = "pure_power"; j["m"] = m_lo_; break;
    case NonlinearityKind::two_power:
      j["kind"] = "two_power";
      j["m_lo"] = m_lo_;
      j["m_hi"] = m_hi_;
      j["a"] = a_;
      j["b"] = b_;
      break;
  }
  j["mu0"] = mu0_;
  j["mu1"] = mu1_;
  return j;
}

double eval_F(const Nonlinearity& nl, double r) { return nl.value(r); }
double eval_Fprime(const Nonlinearity& nl, double r) { return nl.derivative(r); }
double eval_Finv(const Nonlinearity& nl, double v) { return nl.inverse(v); }
double legendre(const Nonlinearity& nl, double z) { return nl.legendre(z); }

CheckReport check_N1(const Nonlinearity& nl, std::span<const double> r_grid, double tol) {
  CheckReport rep("N1_band", tol);
  constexpr double kStep = 1e-5;
  const double mu0 = nl.mu0(), mu1 = nl.mu1();
  const bool dual = !nl.is_linear();
  double prev = 0.0;
  double worst_primal_fd = 1e300, worst_primal_ratio = 1e300, worst_dual_fd = 1e300, worst_dual_ratio = 1e300;
  for (double r : r_grid) {
    if (!(r > 0) || r <= prev) throw DomainError("check_N1: grid must be positive and increasing");
    prev = r;
    auto q = [&](double x) { return nl.value(x) / nl.derivative(x); };
    const double d = (q(r * (1 + kStep)) - q(r * (1 - kStep))) / (2 * r * kStep);
    const double m_fd = std::min(d - (1 - mu1), (1 - mu0) - d);
    const double f1 = nl.derivative(r);
    const double ratio = nl.value(r) * nl.second_derivative(r) / (f1 * f1);
    const double m_ratio = nl.is_linear() ? 0.0 : std::min(ratio - mu0, mu1 - ratio);
    double margin = std::min(m_fd, m_ratio);
    worst_primal_fd = std::min(worst_primal_fd, m_fd);
    worst_primal_ratio = std::min(worst_primal_ratio, m_ratio);
    if (dual) {
      const double z = f1;
      auto qs = [&](double x) { return nl.legendre(x) / nl.legendre_derivative(x); };
      const double ds = (qs(z * (1 + kStep)) - qs(z * (1 - kStep))) / (2 * z * kStep);
      const double md = std::min(ds - mu0, mu1 - ds);
      const double g1 = nl.legendre_derivative(z);
      const double rs = nl.legendre(z) * nl.legendre_second_derivative(z) / (g1 * g1);
      const double mr = std::min(rs - (1 - mu1), (1 - mu0) - rs);
      worst_dual_fd = std::min(worst_dual_fd, md);
      worst_dual_ratio = std::min(worst_dual_ratio, mr);
      margin = std::min({margin, md, mr});
    }
    std::ostringstream loc;
    loc << "r=" << r;
    rep.record(margin, loc.str());
  }
  rep.details = {{"mu0", mu0},
                 {"mu1", mu1},
                 {"fd_step", kStep},
                 {"primal_fd_margin", worst_primal_fd},
                 {"primal_ratio_margin", worst_primal_ratio},
                 {"dual_checked", dual}};
  if (dual) {
    rep.details["dual_fd_margin"] = worst_dual_fd;
    rep.details["dual_ratio_margin"] = worst_dual_ratio;
  }
  rep.finalize();
  return rep;
}

Envelope envelope_bounds(const Nonlinearity& nl, double r, double r0) {
  if (!(r0 > 0) || !std::isfinite(r0)) throw DomainError("envelope_bounds: r0 must be positive");
  if (!(r >= 0)) throw DomainError("envelope_bounds: r must be nonnegative");
  if (r == 0) return {0.0, 0.0};
  const double f0 = nl.value(r0), x = r / r0;
  if (r >= r0) return {f0 * std::pow(x, nl.m0()), f0 * std::pow(x, nl.m1())};
  return {f0 * nl.kappa_lower() * std::pow(x, nl.m1()), f0 * nl.kappa_upper() * std::pow(x, nl.m0())};
}

Envelope legendre_envelope_bounds(const Nonlinearity& nl, double z, double z0) {
  if (!(z0 > 0) || !std::isfinite(z0)) throw DomainError("legendre_envelope_bounds: z0 must be positive");
  if (!(z >= 0)) throw DomainError("legendre_envelope_bounds: z must be nonnegative");
  if (z == 0) return {0.0, 0.0};
  const double g0 = nl.legendre(z0), x = z / z0;
  const double p0 = nl.m0() / (nl.m0() - 1), p1 = nl.m1() / (nl.m1() - 1);
  if (z >= z0) return {g0 * std::pow(x, p1), g0 * std::pow(x, p0)};
  return {g0 * nl.kappa_lower() * std::pow(x, p0), g0 * nl.kappa_upper() * std::pow(x, p1)};
}

CheckReport young_check(const Nonlinearity& nl, double a, double b, double eps) {
  if (!(eps > 0)) throw DomainError("young_check: eps must be positive");
  CheckReport rep("young", 1e-12);
  const double lhs = a * b;
  const double rhs = eps * nl.value(a) + eps * nl.legendre(b / eps);
  std::ostringstream loc;
  loc << "a=" << a << ",b=" << b << ",eps=" << eps;
  rep.record(relative_margin(lhs, rhs), loc.str());
  rep.details = {{"lhs", lhs}, {"rhs", rhs}};
  rep.finalize();
  return rep;
}

double theta(const Nonlinearity& nl, int i, double gamma, int N, double s) {
  const double m = (i == 0) ? nl.m0() : nl.m1();
  return 1.0 / (2 * s + (N + gamma) * (m - 1));
}

}  // namespace nfde
