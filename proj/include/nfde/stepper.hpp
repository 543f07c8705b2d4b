#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "nfde/nonlinearity.hpp"
#include "nfde/operators.hpp"

namespace nfde {

struct StepperConfig {
  double dt = 1e-3;
  double newton_tol = 1e-11;
  int max_newton_iters = 50;
  double jacobian_eps = 1e-12;
  double backtrack = 0.5;
  int max_halvings = 30;
  int max_fixed_point_iters = 500;
  // Keep every sub-step state, not only the requested samples.
  bool keep_all_steps = false;
  // Dense LU up to this many nodes, preconditioned CG beyond.
  int dense_limit = 600;

  static StepperConfig from_json(const json& j);
  json to_json() const;
};

struct StepStats {
  int newton_iterations = 0;
  double residual = 0.0;
  bool used_fallback = false;
};

struct StepError : std::runtime_error {
  StepError(const std::string& what, long step, double residual)
      : std::runtime_error(what), step_index(step), last_residual(residual) {}
  long step_index;
  double last_residual;
};

struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<long> step_indices;
  std::vector<StepStats> stats;  // one per sub-step
  // Every sub-step (including t = 0) when requested.
  std::vector<double> step_times;
  std::vector<Vec> step_states;
  json provenance = json::object();

  bool empty() const { return states.empty(); }
};

Vec implicit_step(const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u_prev, double h,
                  const StepperConfig& cfg, StepStats* stats = nullptr);

Trajectory evolve(const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u0, std::span<const double> times,
                  const StepperConfig& cfg);

struct ConvergenceReport {
  std::vector<int> partitions;
  std::vector<double> differences;  // L1 distance between consecutive partitions
  std::vector<double> ratios;
  std::vector<double> orders;
  bool monotone = false;
  bool pre_asymptotic = false;
  bool pass = false;

  json to_json() const;
};

ConvergenceReport crandall_liggett_refine(const DiscreteOperator& op, const Nonlinearity& nl, const Vec& u0,
                                          double T, int n, int levels = 3);

// Exact linear semigroup e^{-tA} u0 from the eigenpairs.
Vec linear_semigroup(const DiscreteOperator& op, const Vec& u0, double t);

}  // namespace nfde
