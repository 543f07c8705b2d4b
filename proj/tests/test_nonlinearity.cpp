#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nfde/nonlinearity.hpp"

using namespace nfde;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = lo * std::pow(hi / lo, double(k) / (n - 1));
  return g;
}

double brute_legendre(const Nonlinearity& nl, double z) {
  // Dense r-grid maximisation refined around the best point.
  double best_r = 0, best = 0;
  const double hi = 4 * nl.derivative_inverse(z) + 1;
  for (int k = 0; k <= 200000; ++k) {
    const double r = hi * k / 200000.0;
    const double v = z * r - nl.value(r);
    if (v > best) { best = v; best_r = r; }
  }
  double a = std::max(0.0, best_r - hi / 200000.0), b = best_r + hi / 200000.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
    if (z * m1 - nl.value(m1) < z * m2 - nl.value(m2)) a = m1; else b = m2;
  }
  const double r = 0.5 * (a + b);
  return std::max(best, z * r - nl.value(r));
}

}  // namespace

TEST_CASE("pure power evaluation") {
  const auto nl = Nonlinearity::pure_power(2);
  CHECK(eval_F(nl, 3) == doctest::Approx(9));
  CHECK(nl.mu0() == 0.5);
  CHECK(nl.mu1() == 0.5);
  CHECK(eval_Fprime(nl, 3) == doctest::Approx(6));
  CHECK(eval_F(nl, 4) / eval_Fprime(nl, 4) == doctest::Approx((1 - nl.mu0()) * 4));
  CHECK(eval_Fprime(nl, 0) == 0);
  CHECK(eval_F(nl, -2) == doctest::Approx(-4));
  CHECK(eval_Fprime(nl, -2) == doctest::Approx(4));
  CHECK(eval_Finv(nl, 9) == doctest::Approx(3));
  CHECK(eval_Finv(nl, 0) == 0);
  CHECK_THROWS_AS(eval_F(nl, NAN), DomainError);
  CHECK_THROWS_AS(eval_Finv(nl, INFINITY), DomainError);
  CHECK_THROWS_AS(Nonlinearity::pure_power(1.0), ConfigError);
}

TEST_CASE("two-power evaluation and band") {
  const auto nl = Nonlinearity::two_power(2, 3, 1, 1);
  CHECK(eval_F(nl, 1) == doctest::Approx(2));
  CHECK(eval_Fprime(nl, 1) == doctest::Approx(5));
  const double r = eval_Finv(nl, 2);
  CHECK(r == doctest::Approx(1).epsilon(1e-14));
  for (double v : {1e-9, 0.3, 7.0, 1e6}) CHECK(std::abs(eval_F(nl, eval_Finv(nl, v)) - v) <= 1e-13 * std::max(1.0, v));
  CHECK(nl.mu0() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(nl.mu1() == doctest::Approx(2.0 / 3).epsilon(1e-9));
  CHECK(nl.kappa_upper() >= 1);
  CHECK(nl.kappa_lower() <= 1);
  CHECK(nl.kappa_upper() == doctest::Approx(std::pow(3.0 / 2.0, 2.0)));
  CHECK(nl.kappa_lower() == doctest::Approx(std::pow(2.0 / 3.0, 3.0)));
}

TEST_CASE("Legendre transform") {
  const auto sq = Nonlinearity::pure_power(2);
  CHECK(legendre(sq, 2) == doctest::Approx(1));
  CHECK(legendre(sq, 0) == 0);
  const auto cube = Nonlinearity::pure_power(3);
  CHECK(legendre(cube, 3) == doctest::Approx(brute_legendre(cube, 3)).epsilon(1e-8));
  CHECK(legendre(cube, 3) == doctest::Approx(2.0));
  const auto tp = Nonlinearity::two_power(2, 3, 1, 1);
  for (double z : {0.01, 0.5, 3.0, 40.0}) {
    CHECK(legendre(tp, z) == doctest::Approx(brute_legendre(tp, z)).epsilon(1e-8));
    CHECK(legendre(sq, z) == doctest::Approx(brute_legendre(sq, z)).epsilon(1e-8));
  }
  // Scaling identity of the transform of eps F.
  const double eps = 0.3, z = 1.7;
  const auto scaled = Nonlinearity::two_power(2, 3, eps, eps);
  CHECK(legendre(scaled, z) == doctest::Approx(eps * legendre(tp, z / eps)).epsilon(1e-12));
  // Convexity and derivative identities.
  CHECK(tp.legendre_derivative(3.0) == doctest::Approx(tp.derivative_inverse(3.0)));
  CHECK(tp.legendre_second_derivative(3.0) > 0);
}

TEST_CASE("Fenchel inequality and equality") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-6, 6);
  for (const auto& nl : {Nonlinearity::pure_power(1.5), Nonlinearity::pure_power(2), Nonlinearity::pure_power(3),
                         Nonlinearity::two_power(2, 3, 1, 1), Nonlinearity::two_power(1.5, 4, 0.5, 2)}) {
    int bad = 0;
    for (int k = 0; k < 10000; ++k) {
      const double r = std::pow(10.0, U(rng) / 2), z = std::pow(10.0, U(rng) / 2);
      if (z * r > (nl.value(r) + nl.legendre(z)) * (1 + 1e-10)) ++bad;
      const double zz = nl.derivative(r);
      if (std::abs(zz * r - nl.value(r) - nl.legendre(zz)) > 1e-10 * zz * r) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("check_N1") {
  const auto grid = log_grid(1e-3, 1e3, 301);
  const auto sq = Nonlinearity::pure_power(2);
  auto rep = check_N1(sq, grid);
  CHECK(rep.pass);
  CHECK(rep.samples == grid.size());
  CHECK(rep.worst_margin > -1e-8);
  CHECK(check_N1(Nonlinearity::two_power(2, 3, 1, 1), log_grid(1e-6, 1e6, 400)).pass);
  const auto wrong = sq.with_declared_band(0.9, 0.9);
  const auto bad = check_N1(wrong, grid);
  CHECK_FALSE(bad.pass);
  CHECK(bad.violations == grid.size());
  CHECK_THROWS_AS(check_N1(sq, std::vector<double>{1.0, 0.5}), DomainError);
}

TEST_CASE("envelope bounds") {
  const auto sq = Nonlinearity::pure_power(2);
  auto e = envelope_bounds(sq, 3, 1.5);
  CHECK(e.lower == doctest::Approx(9));
  CHECK(e.upper == doctest::Approx(9));
  e = envelope_bounds(sq, 0.5, 1.5);
  CHECK(e.lower == doctest::Approx(0.25));
  CHECK(e.upper == doctest::Approx(0.25));
  const auto tp = Nonlinearity::two_power(2, 3, 1, 1);
  e = envelope_bounds(tp, 2, 1);
  CHECK(e.lower == doctest::Approx(8));
  CHECK(e.upper == doctest::Approx(16));
  CHECK(e.lower <= eval_F(tp, 2));
  CHECK(eval_F(tp, 2) <= e.upper);
  e = envelope_bounds(tp, 0, 1);
  CHECK(e.lower == 0);
  CHECK(e.upper == 0);
  CHECK_THROWS_AS(envelope_bounds(tp, 1, 0), DomainError);
}

TEST_CASE("table rows on sampled pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-4, 4);
  for (const auto& nl : {Nonlinearity::pure_power(1.5), Nonlinearity::pure_power(3),
                         Nonlinearity::two_power(2, 3, 1, 1), Nonlinearity::two_power(1.5, 4, 0.5, 2)}) {
    int bad = 0;
    for (int k = 0; k < 10000; ++k) {
      const double r = std::pow(10.0, U(rng)), r0 = std::pow(10.0, U(rng));
      const auto e = envelope_bounds(nl, r, r0);
      const double f = nl.value(r);
      if (f < e.lower * (1 - 1e-10) || f > e.upper * (1 + 1e-10)) ++bad;
      const auto d = legendre_envelope_bounds(nl, r, r0);
      const double g = nl.legendre(r);
      if (g < d.lower * (1 - 1e-10) || g > d.upper * (1 + 1e-10)) ++bad;
    }
    CHECK(bad == 0);
  }
}

TEST_CASE("Young inequality") {
  const auto sq = Nonlinearity::pure_power(2);
  CHECK(young_check(sq, 0, 3, 0.7).pass);
  const auto eq = young_check(sq, 1, 1, 0.5);
  CHECK(eq.pass);
  CHECK(std::abs(eq.worst_margin) < 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3, 3);
  int bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const double a = std::pow(10.0, U(rng)), b = std::pow(10.0, U(rng)), eps = std::pow(10.0, U(rng));
    if (!young_check(Nonlinearity::two_power(2, 3, 1, 1), a, b, eps).pass) ++bad;
    if (!young_check(sq, a, b, eps).pass) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("theta exponents") {
  const auto sq = Nonlinearity::pure_power(2);
  CHECK(theta(sq, 0, 0.5, 1, 0.5) == doctest::Approx(0.4));
  CHECK((1 + 0.5) * (2 - 1) * theta(sq, 1, 0.5, 1, 0.5) == doctest::Approx(0.6));
  const auto near_one = Nonlinearity::pure_power(1 + 1e-9);
  CHECK(theta(near_one, 0, 0.5, 2, 0.25) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("two-power band is sharp, not just a grid extremum") {
  const auto nl = Nonlinearity::two_power(1.5, 4, 0.5, 2);
  double lo = 1, hi = 0;
  for (int k = -600000; k <= 600000; ++k) {
    const double x = std::pow(10.0, k / 100000.0);
    const double q = nl.value(x) * nl.second_derivative(x) / std::pow(nl.derivative(x), 2);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  CHECK(nl.mu1() >= hi - 1e-13);
  CHECK(nl.mu1() - hi < 1e-9);
  CHECK(nl.mu0() <= lo + 1e-13);
}
