#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nfde/nonlinearity.hpp"
#include "nfde/operators.hpp"
#include "nfde/stepper.hpp"

namespace nfde {

// Raw ingredients of the estimate constants; split out so the formulas can be probed directly.
struct ConstantInputs {
  int N = 1;
  double s = 0.5;
  double gamma = 0.5;
  double c2 = 0.0;        // max_x int K(x,y) dy
  double c1 = 0.0;        // K(x,y) <= c1 |x-y|^{-(N-2s)}
  double C_omega = 1.0;   // max/min of (A^{-1} phi) / phi
  double lambda1 = 0.0;
  double phi_l1 = 0.0;    // ||phi||_{L^1}
};

struct EstimateConstants {
  ConstantInputs in;
  double mu0 = 0, mu1 = 0, m0 = 0, m1 = 0;
  double kappa = 1, kappa_bar = 1;
  double K0 = 0, K1 = 0, K2 = 0;
  double K6 = 0, K7 = 0;
  double K9[2] = {0, 0};
  double theta[2] = {0, 0};
  double large_time_sufficient = 0;  // (K1 ||phi||_1)^{theta_1 (m1-1)}
  std::optional<double> tau1;        // first sample with ||u||_inf <= 1

  double m(int i) const { return i == 0 ? m0 : m1; }
  // K9 ||u(tau0)||_{L^1_phi}^{2s(m_i-1)theta_i}
  double K8(int i, double l1phi) const;
  json to_json() const;
};

// Throws DomainError for the linear kind or when an exponent invariant fails.
EstimateConstants constants_from(const ConstantInputs& in, const Nonlinearity& nl);
EstimateConstants compute_constants(const DiscreteOperator& op, const Nonlinearity& nl,
                                    const Trajectory* traj = nullptr);

// Default slack: abs_tol + rate * dt.
struct Slack {
  double abs_tol = 1e-6;
  double rate = 10.0;
  double at(double dt) const { return abs_tol + rate * dt; }
};

// Weighted L1 norms ||u(t_k)||_{L^1_phi} of the samples.
std::vector<double> weighted_norms(const Trajectory& traj, const Domain& d, const BoundaryWeight& w);

CheckReport check_monotonicity(const Trajectory& traj, const Nonlinearity& nl, Slack slack = {});

CheckReport check_pointwise_green(const Trajectory& traj, const DiscreteOperator& op, const Nonlinearity& nl,
                                  Slack slack = {});

CheckReport check_absolute_bounds(const Trajectory& traj, const Nonlinearity& nl, const EstimateConstants& c,
                                  Slack slack = {});

enum class SmoothingMode { instantaneous, small, large, backward };
std::string to_string(SmoothingMode m);

CheckReport check_smoothing(const Trajectory& traj, const Domain& d, const Nonlinearity& nl,
                            const BoundaryWeight& weight, const EstimateConstants& c, SmoothingMode mode,
                            Slack slack = {});

// u and v must start ordered (u0 >= v0) on the same time samples.
CheckReport check_weighted_l1(const Trajectory& u, const Trajectory& v, const DiscreteOperator& op,
                              const BoundaryWeight& weight, const EstimateConstants& c, double tol = 1e-10,
                              std::uint64_t seed = 7);

// Needs sub-step states (StepperConfig::keep_all_steps).
CheckReport check_weak_dual_residual(const Trajectory& traj, const DiscreteOperator& op, const Nonlinearity& nl,
                                     const std::vector<Vec>& test_functions, Slack slack = {1e-12, 1.0});

CheckReport check_f_integrability(const Trajectory& traj, const Domain& d, const Nonlinearity& nl,
                                  const BoundaryWeight& weight, const EstimateConstants& c, Slack slack = {});

// Nonnegative bounded test functions: Phi1 and `count` seeded random ones.
std::vector<Vec> default_test_functions(const DiscreteOperator& op, int count, std::uint64_t seed);

// Sets converged on the coarse report when both dt and dt/2 pass.
void mark_converged(CheckReport& coarse, const CheckReport& fine);

}  // namespace nfde
