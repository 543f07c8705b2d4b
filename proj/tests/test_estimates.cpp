#include <doctest.h>

#include <cmath>

#include "nfde/estimates.hpp"

using namespace nfde;

namespace {

Vec bump(const Domain& d, double height, double c = 0.5, double w = 0.3) {
  return d.sample([=](double x, double) {
    const double r = (x - c) / w;
    return std::abs(r) < 1 ? height * std::exp(1 - 1 / (1 - r * r)) : 0.0;
  });
}

std::vector<double> log_times(double a, double b, int n, bool with_zero = true) {
  std::vector<double> t;
  if (with_zero) t.push_back(0.0);
  for (int k = 0; k <= n; ++k) t.push_back(a * std::pow(b / a, double(k) / n));
  return t;
}

struct Run {
  Domain d = Domain::interval(1.0, 64);
  DiscreteOperator op = build_spectral_power(d, 0.5);
  Nonlinearity nl = Nonlinearity::pure_power(2);
  BoundaryWeight w = BoundaryWeight::make(d, 0.5);
};

Trajectory evolve_with(const Run& r, const Vec& u0, double dt, double T = 1.0) {
  StepperConfig cfg;
  cfg.dt = dt;
  cfg.keep_all_steps = true;
  const auto ts = log_times(0.01, T, 20);
  return evolve(r.op, r.nl, u0, ts, cfg);
}

}  // namespace

TEST_CASE("constants follow the closed forms") {
  const auto nl = Nonlinearity::pure_power(2);
  ConstantInputs in;
  in.N = 1;
  in.s = 0.5;
  in.gamma = 0.5;
  in.c2 = 0.3;
  in.c1 = 1.0;
  in.C_omega = 2.0;
  in.lambda1 = 3.0;
  in.phi_l1 = 0.5;
  const auto c = constants_from(in, nl);
  CHECK(c.K1 == doctest::Approx(8 * 0.3));
  // kappa = kappa_bar = 1: K0 = (F*(K1)/F(1))^{(m-1)/m}
  CHECK(c.K0 == doctest::Approx(std::pow(nl.legendre(c.K1), 0.5)));
  CHECK(c.theta[0] == doctest::Approx(1.0 / (1.0 + 1.5)));
  for (int i = 0; i < 2; ++i) CHECK((in.N + in.gamma) * (c.m(i) - 1) * c.theta[i] < 1);

  SUBCASE("monotone in c2") {
    auto prev = c;
    for (double c2 : {0.31, 0.5, 1.0, 4.0}) {
      in.c2 = c2;
      const auto nx = constants_from(in, nl);
      CHECK(nx.K1 >= prev.K1);
      CHECK(nx.K2 >= prev.K2);
      CHECK(nx.K6 >= prev.K6);
      CHECK(nx.K7 >= prev.K7);
      prev = nx;
    }
  }
  SUBCASE("two-power monotone in c2") {
    const auto tp = Nonlinearity::two_power(1.5, 3.0, 1.0, 1.0);
    auto prev = constants_from(in, tp);
    for (double c2 : {0.31, 0.5, 1.0, 4.0}) {
      in.c2 = c2;
      const auto nx = constants_from(in, tp);
      CHECK(nx.K1 >= prev.K1);
      CHECK(nx.K2 >= prev.K2);
      prev = nx;
    }
  }
  CHECK_THROWS_AS(constants_from(in, Nonlinearity::linear()), DomainError);
}

TEST_CASE("c2 for the classical interval matches the closed-form row integral") {
  const auto d = Domain::interval(1.0, 256);
  const auto op = build_laplacian(d);
  const auto c = compute_constants(op, Nonlinearity::pure_power(2));
  // max_x int_0^1 G(x,y) dy = max x(1-x)/2 = 1/8
  CHECK(std::abs(c.in.c2 - 0.125) / 0.125 < 0.02);
  CHECK(c.in.C_omega >= 1.0);
  CHECK_FALSE(c.tau1.has_value());
}

TEST_CASE("monotonicity check") {
  Run r;
  SUBCASE("zero trajectory") {
    const auto tr = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
    const auto rep = check_monotonicity(tr, r.nl);
    CHECK(rep.pass);
    CHECK(rep.violations == 0);
  }
  SUBCASE("run and counterexample") {
    auto tr = evolve_with(r, bump(r.d, 10), 1e-3);
    CHECK(check_monotonicity(tr, r.nl).pass);
    const std::size_t k = tr.times.size() / 2;
    tr.states[k] *= 0.5;
    const auto bad = check_monotonicity(tr, r.nl);
    CHECK_FALSE(bad.pass);
    std::ostringstream want;
    want << "t=" << tr.times[k] << ",";
    CHECK(bad.location.find(want.str()) != std::string::npos);
  }
}

TEST_CASE("pointwise Green estimates and decay of the Green potential") {
  Run r;
  const auto zero = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
  CHECK(check_pointwise_green(zero, r.op, r.nl).pass);
  const auto tr = evolve_with(r, bump(r.d, 10), 1e-3);
  const auto rep = check_pointwise_green(tr, r.op, r.nl);
  CHECK(rep.pass);
  CHECK(rep.details["triples"].get<std::size_t>() > 1000);
}

TEST_CASE("absolute bounds") {
  Run r;
  const auto zero = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
  const auto c0 = compute_constants(r.op, r.nl, &zero);
  CHECK(check_absolute_bounds(zero, r.nl, c0).pass);
  const auto tr = evolve_with(r, bump(r.d, 100), 1e-3);
  const auto c = compute_constants(r.op, r.nl, &tr);
  const auto rep = check_absolute_bounds(tr, r.nl, c);
  CHECK(rep.pass);
  REQUIRE(c.tau1.has_value());
  CHECK(*c.tau1 <= c.K0);
  // The bound is independent of the datum: tightening K1 by 100x must break it.
  auto tight = c;
  tight.K1 /= 100;
  tight.K2 /= 100;
  CHECK_FALSE(check_absolute_bounds(tr, r.nl, tight).pass);
}

TEST_CASE("smoothing in all modes") {
  Run r;
  const auto tr = evolve_with(r, bump(r.d, 10), 1e-3);
  const auto c = compute_constants(r.op, r.nl, &tr);
  for (auto m : {SmoothingMode::instantaneous, SmoothingMode::small, SmoothingMode::large, SmoothingMode::backward}) {
    CAPTURE(to_string(m));
    CHECK(check_smoothing(tr, r.d, r.nl, r.w, c, m).pass);
    const auto zero = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
    CHECK(check_smoothing(zero, r.d, r.nl, r.w, c, m).pass);
  }
  SUBCASE("backward with h = t reduces to twice the forward form") {
    Trajectory t2;
    t2.dt = 1e-3;
    const Vec u = bump(r.d, 1);
    t2.times = {0.5, 1.0};
    t2.states = {u, u};
    const double L = r.d.weighted_l1(u, r.w.values);
    const int i = 0.5 >= std::pow(L, 2 * 0.5 / 1.5) ? 1 : 0;
    const double forward = c.K7 * std::pow(L, c.theta[i]) / std::pow(0.5, 1.5 * c.theta[i]);
    // Scale the sample so that it sits between the forward bound and twice it.
    const double target = 1.5 * forward;
    t2.states[0] = u * (target / u.maxCoeff());
    t2.states[1] = u * (L / r.d.weighted_l1(u, r.w.values));
    auto rep = check_smoothing(t2, r.d, r.nl, r.w, c, SmoothingMode::backward);
    CHECK(rep.pass);
    t2.states[0] = u * (2.5 * forward / u.maxCoeff());
    rep = check_smoothing(t2, r.d, r.nl, r.w, c, SmoothingMode::backward);
    CHECK_FALSE(rep.pass);
  }
}

TEST_CASE("weighted L1 ordering") {
  Run r;
  const Vec u0 = bump(r.d, 10);
  const auto tu = evolve_with(r, u0, 1e-3);
  const auto c = compute_constants(r.op, r.nl, &tu);
  SUBCASE("v = 0") {
    const auto tv = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
    CHECK(check_weighted_l1(tu, tv, r.op, r.w, c).pass);
  }
  SUBCASE("u0 = v0") {
    const auto rep = check_weighted_l1(tu, tu, r.op, r.w, c);
    CHECK(rep.pass);
    CHECK(rep.worst_margin == 0.0);
  }
  SUBCASE("half datum") {
    const auto tv = evolve_with(r, Vec(u0 / 2), 1e-3);
    const auto rep = check_weighted_l1(tu, tv, r.op, r.w, c);
    CHECK(rep.pass);
    CHECK(rep.details["fitted_C"].get<double>() <= c.in.C_omega);
    CHECK(rep.details["holder_triples"].get<std::size_t>() > 0);
    CHECK_THROWS_AS(check_weighted_l1(tv, tu, r.op, r.w, c), DomainError);
  }
}

TEST_CASE("weak dual residual") {
  Run r;
  const auto psis = default_test_functions(r.op, 2, 11);
  CHECK(psis.size() == 3);
  SUBCASE("zero trajectory") {
    const auto tr = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
    const auto rep = check_weak_dual_residual(tr, r.op, r.nl, psis);
    CHECK(rep.pass);
    CHECK(rep.details["max_abs_residual"].get<double>() == 0.0);
  }
  SUBCASE("exact linear solution is first order") {
    const auto lin = Nonlinearity::linear();
    const Vec u0 = bump(r.d, 1);
    double res[2];
    for (int l = 0; l < 2; ++l) {
      Trajectory tr;
      tr.dt = 1e-2 / (1 << l);
      const long steps = std::lround(1.0 / tr.dt);
      for (long k = 0; k <= steps; ++k) {
        tr.step_times.push_back(k * tr.dt);
        tr.step_states.push_back(linear_semigroup(r.op, u0, k * tr.dt));
      }
      for (long k : {steps / 10, steps}) {
        tr.times.push_back(k * tr.dt);
        tr.states.push_back(tr.step_states[k]);
        tr.step_indices.push_back(k);
      }
      res[l] = check_weak_dual_residual(tr, r.op, lin, psis).details["max_abs_residual"].get<double>();
    }
    CHECK(res[0] / res[1] == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("nonlinear run halves with dt") {
    const Vec u0 = bump(r.d, 10);
    const auto a = check_weak_dual_residual(evolve_with(r, u0, 1e-3), r.op, r.nl, psis);
    const auto b = check_weak_dual_residual(evolve_with(r, u0, 5e-4), r.op, r.nl, psis);
    CHECK(a.pass);
    CHECK(b.pass);
    const double ratio = a.details["max_abs_residual"].get<double>() / b.details["max_abs_residual"].get<double>();
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
  }
  SUBCASE("requires sub-step states") {
    StepperConfig cfg;
    const auto ts = log_times(0.01, 0.1, 3);
    const auto tr = evolve(r.op, r.nl, bump(r.d, 1), ts, cfg);
    CHECK_THROWS_AS(check_weak_dual_residual(tr, r.op, r.nl, psis), DomainError);
  }
}

TEST_CASE("F(u) integrability") {
  Run r;
  const auto zero = evolve_with(r, Vec::Zero(r.d.size()), 1e-3);
  const auto c = compute_constants(r.op, r.nl, &zero);
  auto rep = check_f_integrability(zero, r.d, r.nl, r.w, c);
  CHECK(rep.pass);
  CHECK(rep.details["total"].get<double>() == 0.0);
  CHECK(rep.details["tail_exponent"].get<double>() == doctest::Approx(2.0));
  const auto tr = evolve_with(r, bump(r.d, 10), 2e-3, 4.0);
  rep = check_f_integrability(tr, r.d, r.nl, r.w, c);
  CHECK(rep.pass);
  CHECK(rep.details["tail_samples"].get<std::size_t>() > 0);
  CHECK(rep.details["finite"].get<bool>());
}

TEST_CASE("reports are deterministic and carry convergence") {
  Run r;
  const auto tr = evolve_with(r, bump(r.d, 10), 1e-3);
  const auto c = compute_constants(r.op, r.nl, &tr);
  const auto a = check_smoothing(tr, r.d, r.nl, r.w, c, SmoothingMode::instantaneous).to_json().dump();
  const auto b = check_smoothing(tr, r.d, r.nl, r.w, c, SmoothingMode::instantaneous).to_json().dump();
  CHECK(a == b);
  auto coarse = check_monotonicity(tr, r.nl);
  const auto fine = check_monotonicity(evolve_with(r, bump(r.d, 10), 5e-4), r.nl);
  mark_converged(coarse, fine);
  REQUIRE(coarse.converged.has_value());
  CHECK(*coarse.converged);
  CHECK(coarse.to_json()["converged"].get<bool>());
}
