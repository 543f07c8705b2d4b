#include "nfde/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

namespace nfde {

StepperConfig StepperConfig::from_json(const json& j) {
  StepperConfig c;
  try {
    c.dt = j.value("dt", c.dt);
    c.newton_tol = j.value("newton_tol", c.newton_tol);
    c.max_newton_iters = j.value("max_newton_iters", c.max_newton_iters);
    c.jacobian_eps = j.value("jacobian_eps", c.jacobian_eps);
    c.backtrack = j.value("backtrack", c.backtrack);
    c.max_halvings = j.value("max_halvings", c.max_halvings);
    c.max_fixed_point_iters = j.value("max_fixed_point_iters", c.max_fixed_point_iters);
    c.keep_all_steps = j.value("keep_all_steps", c.keep_all_steps);
    c.dense_limit = j.value("dense_limit", c.dense_limit);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("stepper: ") + e.what());
  }
  if (!(c.dt > 0) || !(c.newton_tol > 0) || !(c.jacobian_eps > 0) || c.max_newton_iters < 1 ||
      !(c.backtrack > 0 && c.backtrack < 1) || c.max_halvings < 0)
    throw ConfigError("stepper: dt and tolerances must be positive");
  return c;
}

json StepperConfig::to_json() const {
  return {{"dt", dt},
          {"newton_tol", newton_tol},
          {"max_newton_iters", max_newton_iters},
          {"jacobian_eps", jacobian_eps},
          {"backtrack", backtrack},
          {"max_halvings", max_halvings},
          {"max_fixed_point_iters", max_fixed_point_iters},
          {"keep_all_steps", keep_all_steps},
          {"dense_limit", dense_limit}};
}

namespace {

// Solves (I + h A diag(d)) x = rhs.
class StepSolver {
 public:
  StepSolver(const DiscreteOperator& op, double h, int dense_limit)
      : op_(op), h_(h), dense_(op.domain().size() <= dense_limit) {
    if (!dense_) kdiag_ = op.green().diagonal() * op.domain().weight();
  }

  Vec solve(const Vec& d, const Vec& rhs) const {
    if (dense_) {
      Mat J = h_ * (op_.matrix() * d.asDiagonal());
      J.diagonal().array() += 1.0;
      return J.partialPivLu().solve(rhs);
    }
    // Equivalent SPD system (A^{-1} + h D) x = A^{-1} rhs, Jacobi-preconditioned CG.
    const Vec b = op_.apply_inverse(rhs);
    const Vec pre = (kdiag_ + h_ * d).cwiseInverse();
    auto mul = [&](const Vec& v) { Vec out = op_.apply_inverse(v); out.array() += h_ * d.array() * v.array(); return out; };
    Vec x = Vec::Zero(rhs.size());
    Vec r = b;
    Vec z = pre.cwiseProduct(r);
    Vec p = z;
    double rz = r.dot(z);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;
    for (int it = 0; it < 4 * static_cast<int>(rhs.size()) + 100; ++it) {
      const Vec Ap = mul(p);
      const double alpha = rz / p.dot(Ap);
      x += alpha * p;
      r -= alpha * Ap;
      if (r.norm() <= 1e-15 * bnorm) break;
      z = pre.cwiseProduct(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    return x;
  }

 private:
  const DiscreteOperator& op_;
  double h_;
  bool dense_;
  Vec kdiag_;
};

Vec map_F(const Nonlinearity& nl, const Vec& u) { return u.unaryExpr([&](double x) { return nl.value(x); }); }

}  // namespace

Vec implicit_step(const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u_prev, double h,
                  const StepperConfig& cfg, StepStats* stats) {
  if (!(h > 0)) throw DomainError("implicit_step: h must be positive");
  if (u_prev.size() != op.domain().size()) throw DomainError("implicit_step: size mismatch");
  if (u_prev.minCoeff() < 0) throw DomainError("implicit_step: u_k must be nonnegative");
  StepStats local;
  StepStats& st = stats ? *stats : local;
  st = StepStats{};
  if (u_prev.isZero(0.0)) return Vec::Zero(u_prev.size());

  const StepSolver solver(op, h, cfg.dense_limit);
  const double target = cfg.newton_tol * (1.0 + u_prev.lpNorm<Eigen::Infinity>());
  auto residual = [&](const Vec& u) -> Vec { return u + h * op.apply(map_F(nl, u)) - u_prev; };
  auto newton_delta = [&](const Vec& u, const Vec& R) {
    const Vec d = u.unaryExpr([&](double x) { return nl.derivative(x) + cfg.jacobian_eps; });
    return solver.solve(d, -R);
  };

  Vec u = u_prev;
  Vec R = residual(u);
  double rnorm = R.lpNorm<Eigen::Infinity>();
  bool stalled = false;
  while (rnorm > target && st.newton_iterations < cfg.max_newton_iters) {
    const Vec delta = newton_delta(u, R);
    ++st.newton_iterations;
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= cfg.max_halvings; ++k, alpha *= cfg.backtrack) {
      Vec trial = u + alpha * delta;
      Vec Rt = residual(trial);
      const double tn = Rt.lpNorm<Eigen::Infinity>();
      if (tn < rnorm) {
        u = std::move(trial);
        R = std::move(Rt);
        rnorm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
  }
  // One polishing step removes roundoff-level undershoots in degenerate zones.
  if (rnorm <= target && u.minCoeff() < -1e-13) {
    const Vec delta = newton_delta(u, R);
    Vec trial = u + delta;
    Vec Rt = residual(trial);
    if (Rt.lpNorm<Eigen::Infinity>() <= target) {
      u = std::move(trial);
      R = std::move(Rt);
      rnorm = R.lpNorm<Eigen::Infinity>();
    }
  }
  if (rnorm > target || stalled) {
    st.used_fallback = true;
    for (int it = 0; it < cfg.max_fixed_point_iters && rnorm > target; ++it) {
      const Vec d = u.unaryExpr([&](double x) {
        const double a = std::max(std::abs(x), cfg.jacobian_eps);
        return nl.value(a) / a;
      });
      u = solver.solve(d, u_prev);
      R = residual(u);
      rnorm = R.lpNorm<Eigen::Infinity>();
    }
  }
  st.residual = rnorm;
  if (rnorm > target) throw StepError("implicit step did not converge", -1, rnorm);
  const double low = u.minCoeff();
  if (low < -1e-12) {
    std::ostringstream os;
    os << "implicit step undershoot " << low;
    throw StepError(os.str(), -1, rnorm);
  }
  return u.cwiseMax(0.0);
}

Trajectory evolve(const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u0, std::span<const double> times,
                  const StepperConfig& cfg) {
  if (u0.size() != op.domain().size()) throw DomainError("evolve: size mismatch");
  if (u0.minCoeff() < 0) throw DomainError("evolve: u0 must be nonnegative");
  if (!(cfg.dt > 0)) throw ConfigError("evolve: dt must be positive");
  std::vector<long> targets;
  double prev = -1.0;
  for (double t : times) {
    if (!(t >= 0) || !(t > prev) || !std::isfinite(t)) throw ConfigError("evolve: times must be increasing and >= 0");
    prev = t;
    const long k = std::lround(t / cfg.dt);
    if (targets.empty() || k > targets.back()) targets.push_back(k);
  }
  Trajectory tr;
  tr.dt = cfg.dt;
  tr.provenance = {{"operator", op.to_json()}, {"nonlinearity", nl.to_json()}, {"stepper", cfg.to_json()}};
  if (targets.empty()) return tr;
  const long last = targets.back();
  tr.stats.reserve(last);
  std::size_t next = 0;
  Vec u = u0;
  auto record = [&](long k) {
    if (cfg.keep_all_steps) {
      tr.step_times.push_back(k * cfg.dt);
      tr.step_states.push_back(u);
    }
    if (next < targets.size() && targets[next] == k) {
      tr.times.push_back(k * cfg.dt);
      tr.states.push_back(u);
      tr.step_indices.push_back(k);
      ++next;
    }
  };
  record(0);
  for (long k = 1; k <= last; ++k) {
    StepStats st;
    try {
      u = implicit_step(op, nl, u, cfg.dt, cfg, &st);
    } catch (const StepError& e) {
      std::ostringstream os;
      os << e.what() << " at step " << k;
      throw StepError(os.str(), k, e.last_residual);
    }
    tr.stats.push_back(st);
    record(k);
  }
  return tr;
}

json ConvergenceReport::to_json() const {
  return {{"partitions", partitions}, {"differences", differences}, {"ratios", ratios}, {"orders", orders},
          {"monotone", monotone},     {"pre_asymptotic", pre_asymptotic}, {"pass", pass}};
}

ConvergenceReport crandall_liggett_refine(const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u0,
                                          double T, int n, int levels) {
  if (!(T > 0) || n < 1 || levels < 3) throw ConfigError("refine: need T > 0, n >= 1, levels >= 3");
  ConvergenceReport rep;
  std::vector<Vec> finals;
  const double w = op.domain().weight();
  for (int l = 0; l < levels; ++l) {
    const int steps = n << l;
    StepperConfig cfg;
    cfg.dt = T / steps;
    const double t[] = {T};
    auto tr = evolve(op, nl, u0, t, cfg);
    finals.push_back(tr.states.back());
    rep.partitions.push_back(steps);
  }
  for (int l = 0; l + 1 < levels; ++l) rep.differences.push_back(w * (finals[l] - finals[l + 1]).cwiseAbs().sum());
  rep.monotone = true;
  for (std::size_t l = 0; l + 1 < rep.differences.size(); ++l) {
    const double ratio = rep.differences[l] / rep.differences[l + 1];
    rep.ratios.push_back(ratio);
    rep.orders.push_back(std::log2(ratio));
    if (!(rep.differences[l + 1] < rep.differences[l])) rep.monotone = false;
  }
  rep.pre_asymptotic = n <= 2;
  rep.pass = rep.pre_asymptotic || rep.monotone;
  return rep;
}

Vec linear_semigroup(const DiscreteOperator& op, const Vec& u0, double t) {
  const Mat& V = op.eigenvectors();
  const Vec c = V.transpose() * u0;
  return V * (c.array() * (-t * op.eigenvalues().array()).exp()).matrix();
}

}  // namespace nfde
