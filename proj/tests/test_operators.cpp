#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <Eigen/Eigenvalues>

#include "nfde/operators.hpp"

using namespace nfde;

namespace {

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

// Green function of the restricted fractional Laplacian on (-1, 1), by quadrature of
// int_0^{r0} t^{s-1} (1+t)^{-1/2} dt after the substitution t = w/(1-w).
double rfl_green_oracle(double x, double y, double s) {
  const double d = std::abs(x - y);
  const double r0 = (1 - x * x) * (1 - y * y) / (d * d);
  const double w0 = r0 / (1 + r0);
  const double kappa = std::tgamma(0.5) / (std::pow(2.0, 2 * s) * std::sqrt(M_PI) * std::pow(std::tgamma(s), 2));
  static boost::math::quadrature::tanh_sinh<double> integrator;
  const double I = integrator.integrate([s](double w) { return std::pow(w, s - 1) * std::pow(1 - w, -0.5 - s); },
                                        0.0, w0);
  return kappa * std::pow(d, 2 * s - 1) * I;
}

}  // namespace

TEST_CASE("domain grid invariants") {
  const auto d = Domain::interval(2.0, 10);
  CHECK(d.weight() * d.size() == doctest::Approx(d.measure()).epsilon(1e-12));
  for (int i = 0; i < d.size(); ++i) CHECK(d.distance_to_boundary(i) >= 0.5 * d.hx() - 1e-15);
  const auto r = Domain::rectangle(1.0, 2.0, 5, 7);
  CHECK(r.weight() * r.size() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.node(5 + 3)[1] == doctest::Approx(1.5 * r.hy()));
  CHECK_THROWS_AS(Domain::interval(1.0, 4096), ConfigError);
  CHECK_THROWS_AS(Domain::rectangle(1.0, 1.0, 65, 8), ConfigError);
}

TEST_CASE("laplacian spectrum") {
  const auto d = Domain::interval(M_PI, 256);
  const auto op = build_laplacian(d);
  CHECK(op.lambda1() == doctest::Approx(1.0).epsilon(0.01));
  CHECK((op.matrix() - op.matrix().transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(op.matrix());
  CHECK((es.eigenvalues() - op.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9 * op.eigenvalues().maxCoeff());
  const Mat residual = op.matrix() * op.eigenvectors() - op.eigenvectors() * op.eigenvalues().asDiagonal();
  CHECK(max_abs(residual) <= 1e-10 * op.eigenvalues().maxCoeff());
  for (int k = 1; k < op.eigenvalues().size(); ++k) CHECK(op.eigenvalues()[k] > op.eigenvalues()[k - 1]);

  const auto small = build_laplacian(Domain::interval(1.0, 2));
  const double h2 = 0.25;
  CHECK(small.matrix()(0, 0) * h2 == doctest::Approx(3));
  CHECK(small.matrix()(0, 1) * h2 == doctest::Approx(-1));
  CHECK(small.eigenvalues()[0] * h2 == doctest::Approx(2));
  CHECK(small.eigenvalues()[1] * h2 == doctest::Approx(4));
}

TEST_CASE("spectral power and spectral function") {
  const auto d = Domain::interval(M_PI, 128);
  const auto lap = build_laplacian(d);
  const auto s1 = build_spectral_power(d, 1.0);
  CHECK(max_abs(s1.matrix() - lap.matrix()) <= 1e-10 * max_abs(lap.matrix()));
  const auto half = build_spectral_power(d, 0.5);
  CHECK(half.gamma() == 0.5);
  CHECK(half.lambda1() == doctest::Approx(std::sqrt(lap.lambda1())).epsilon(1e-12));
  CHECK(build_spectral_power(Domain::interval(M_PI, 1024), 0.5).lambda1() == doctest::Approx(1.0).epsilon(1e-5));
  const Mat res = half.matrix() * half.eigenvectors() - half.eigenvectors() * half.eigenvalues().asDiagonal();
  CHECK(max_abs(res) <= 1e-10 * half.eigenvalues().maxCoeff());

  const auto quarter = build_spectral_power(d, 0.25);
  const auto sum = build_spectral_function(d, SpectralFunction::power_sum({{1.0, 0.5}, {1.0, 0.25}}));
  CHECK(max_abs(sum.matrix() - half.matrix() - quarter.matrix()) <= 1e-12 * max_abs(sum.matrix()));
  CHECK(sum.gamma() == 1.0);
  const auto lin = build_spectral_function(d, SpectralFunction::power_sum({{1.0, 1.0}}));
  CHECK(max_abs(lin.matrix() - lap.matrix()) <= 1e-10 * max_abs(lap.matrix()));
  const auto one = build_spectral_function(d, SpectralFunction::constant(1.0));
  CHECK(max_abs(one.matrix() - Mat::Identity(128, 128)) <= 1e-12);
  CHECK(max_abs(one.green() * d.weight() - Mat::Identity(128, 128)) <= 1e-12);
  CHECK_THROWS_AS(build_spectral_power(d, 1.5), ConfigError);
  SpectralFunction bad;
  bad.g = [](double l) { return 1.0 - l; };
  CHECK_THROWS_AS(build_spectral_function(d, bad), ConfigError);
  const auto tab = build_spectral_function(d, SpectralFunction::table({1.0, 10.0, 1e6}, {1.0, 3.0, 500.0}));
  CHECK(tab.eigenvalues().minCoeff() > 0);
}

TEST_CASE("green matrix identities") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N01;
  const auto d1 = Domain::interval(1.0, 64);
  const auto d2 = Domain::rectangle(1.0, 1.5, 12, 10);
  for (const auto& op : {build_laplacian(d1), build_spectral_power(d1, 0.3), build_rfl(d1, 0.4),
                         build_spectral_power(d2, 0.5), build_laplacian(d2)}) {
    const Mat& K = op.green();
    const double w = op.domain().weight();
    CHECK(max_abs(K - K.transpose()) <= 1e-12 * max_abs(K));
    CHECK(K.minCoeff() >= -1e-12);
    CHECK(max_abs(op.matrix() - op.matrix().transpose()) <= 1e-12 * max_abs(op.matrix()));
    CHECK(op.eigenvalues().minCoeff() > 0);
    for (int k = 0; k < 20; ++k) {
      const Vec f = Vec::NullaryExpr(op.domain().size(), [&] { return N01(rng); });
      CHECK((op.matrix() * (K * f * w) - f).lpNorm<Eigen::Infinity>() <= 1e-10 * f.lpNorm<Eigen::Infinity>());
      CHECK((K * (op.matrix() * f) * w - f).lpNorm<Eigen::Infinity>() <= 1e-10 * f.lpNorm<Eigen::Infinity>());
      CHECK((op.apply(f) - op.matrix() * f).lpNorm<Eigen::Infinity>() <= 1e-10 * max_abs(op.matrix()) * f.lpNorm<Eigen::Infinity>());
      CHECK((op.apply_inverse(f) - K * f * w).lpNorm<Eigen::Infinity>() <= 1e-10 * f.lpNorm<Eigen::Infinity>());
    }
    CHECK(green_row_sum_bound(op) > 0);
    CHECK(std::isfinite(green_row_sum_bound(op)));
  }
}

TEST_CASE("kernel positivity and resolvent positivity") {
  for (int n : {64, 256}) {
    const auto d = Domain::interval(1.0, n);
    for (const auto& op : {build_laplacian(d), build_spectral_power(d, 0.25), build_spectral_power(d, 0.75),
                           build_rfl(d, 0.25), build_rfl(d, 0.75),
                           build_spectral_function(d, SpectralFunction::power_sum({{1.0, 0.5}, {1.0, 0.25}}))}) {
      CHECK(op.green().minCoeff() >= -1e-12);
      if (n == 64) {
        for (double h : {1e-4, 1e-2, 1.0}) {
          Mat M = h * op.matrix();
          M.diagonal().array() += 1.0;
          CHECK(Mat(M.inverse()).minCoeff() >= -1e-12);
        }
      }
    }
  }
}

TEST_CASE("classical green function oracle") {
  const auto d = Domain::interval(1.0, 256);
  const auto op = build_laplacian(d);
  double worst = 0;
  for (int i = 3; i < 253; ++i)
    for (int j = 3; j < 253; ++j) {
      const double x = d.x(i), y = d.x(j);
      const double g = std::min(x, y) * (1 - std::max(x, y));
      worst = std::max(worst, std::abs(op.green()(i, j) - g) / g);
    }
  CHECK(worst < 0.01);
  // Exact kernel row integral x(1-x)/2 peaks at 1/8.
  CHECK(green_row_sum_bound(op) == doctest::Approx(0.125).epsilon(0.02));
}

TEST_CASE("first eigenpair") {
  const auto d = Domain::interval(M_PI, 256);
  const auto fe = first_eigenpair(build_laplacian(d));
  CHECK(fe.lambda1 == doctest::Approx(1.0).epsilon(0.01));
  CHECK(fe.phi1.minCoeff() > 0);
  CHECK(fe.phi1.squaredNorm() * d.weight() == doctest::Approx(1.0));
  const Vec sinx = d.sample([](double x, double) { return std::sin(x); });
  CHECK(std::abs(fe.phi1.dot(sinx)) / (fe.phi1.norm() * sinx.norm()) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fe.ratio_max / fe.ratio_min < 3.0);
}

TEST_CASE("restricted fractional laplacian") {
  const auto d = Domain::interval(1.0, 128);
  const auto op = build_rfl(d, 0.3);
  CHECK((op.matrix() * Vec::Ones(128)).minCoeff() > 0);
  Mat off = op.matrix();
  off.diagonal().setZero();
  CHECK(off.maxCoeff() <= 0);
  CHECK_THROWS_AS(build_rfl(Domain::rectangle(1, 1, 8, 8), 0.5), ConfigError);
  CHECK_THROWS_AS(build_rfl(d, 1.0), ConfigError);

  // Approach to -u'' as s grows, on sin(pi x).
  const Vec u = d.sample([](double x, double) { return std::sin(M_PI * x); });
  const Vec target = M_PI * M_PI * u;
  double prev = 1e300;
  for (double s : {0.6, 0.8, 0.9, 0.95}) {
    const Vec Au = build_rfl(d, s).matrix() * u;
    const double err = (Au - target).segment(16, 96).lpNorm<Eigen::Infinity>() / target.maxCoeff();
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("restricted fractional green oracle") {
  const int n = 1024;
  const double s = 0.25;
  const auto d = Domain::interval(2.0, n);
  const auto op = build_rfl(d, s);
  double worst = 0;
  const int band = 3, stride = 8;
  for (int i = band; i < n - band; i += stride)
    for (int j = band; j < n - band; j += stride) {
      if (std::abs(i - j) <= band) continue;
      const double g = rfl_green_oracle(d.x(i) - 1, d.x(j) - 1, s);
      worst = std::max(worst, std::abs(op.green()(i, j) - g) / g);
    }
  MESSAGE("rfl green worst relative error " << worst);
  CHECK(worst < 0.05);
  // Closed form cross-check of the quadrature oracle.
  const double x = 0.3, y = -0.2, dd = 0.5;
  const double r0 = (1 - x * x) * (1 - y * y) / (dd * dd);
  const double kappa = 1.0 / (std::pow(2.0, 2 * s) * std::pow(std::tgamma(s), 2));
  CHECK(rfl_green_oracle(x, y, s) ==
        doctest::Approx(kappa * std::pow(dd, 2 * s - 1) * boost::math::beta(s, 0.5 - s, r0 / (1 + r0))).epsilon(1e-10));
}

TEST_CASE("heat kernel subordination") {
  const auto d = Domain::interval(1.0, 256);
  const auto sfl = build_spectral_power(d, 0.5);
  const auto sub = heat_kernel_subordination(d, 0.5);
  CHECK(sub.accurate);
  CHECK(max_abs(sub.K - sub.K.transpose()) <= 1e-12 * max_abs(sub.K));
  double worst = 0;
  for (int i = 3; i < 253; ++i)
    for (int j = 3; j < 253; ++j)
      worst = std::max(worst, std::abs(sub.K(i, j) - sfl.green()(i, j)) / sfl.green()(i, j));
  MESSAGE("subordination worst relative error " << worst);
  CHECK(worst < 0.005);
  const auto lap = build_laplacian(d);
  const auto sub1 = heat_kernel_subordination(d, 1.0);
  CHECK(max_abs(sub1.K - lap.green()) <= 1e-4 * max_abs(lap.green()));
  CHECK_FALSE(heat_kernel_subordination(d, 0.5, 16).accurate);
}

TEST_CASE("kernel bounds") {
  const auto d = Domain::interval(1.0, 512);
  const auto op = build_spectral_power(d, 0.25);
  const auto k1 = check_kernel_bounds(op, KernelHypothesis::K1);
  const auto k2 = check_kernel_bounds(op, KernelHypothesis::K2);
  CHECK(k1.pass);
  CHECK(k2.pass);
  CHECK(k1.regime == "power");
  CHECK(std::isfinite(k1.c1));
  CHECK(k2.c0 > 0);
  const auto zero = check_kernel_bounds(Mat::Zero(64, 64), Domain::interval(1.0, 64), 0.25, 0.25, KernelHypothesis::K2);
  CHECK_FALSE(zero.pass);
  CHECK(zero.c0 == 0.0);
  const auto lap = build_laplacian(Domain::interval(1.0, 128));
  CHECK(check_kernel_bounds(lap, KernelHypothesis::K2).pass);
  const auto fb = check_kernel_bounds(lap, KernelHypothesis::K1);
  CHECK(fb.regime == "bounded_kernel_fallback");
  CHECK(fb.pass);
  CHECK(fb.to_json().at("excluded_band") == 3);
}
