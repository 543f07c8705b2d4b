#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nfde/domain.hpp"

namespace nfde {

enum class OperatorFamily { laplacian, spectral_power, spectral_function, restricted_fractional };

std::string to_string(OperatorFamily f);

// Monotone multiplier applied to the Dirichlet Laplacian spectrum.
struct SpectralFunction {
  std::function<double(double)> g;
  double order = 1.0;  // high-frequency order s with g(l) ~ l^s
  double gamma = 1.0;  // declared boundary exponent
  json descriptor = json::object();

  // sum_k c_k l^{s_k}
  static SpectralFunction power_sum(std::vector<std::pair<double, double>> terms);
  static SpectralFunction constant(double c);
  // Log-log linear interpolation, constant extrapolation of the log slope.
  static SpectralFunction table(std::vector<double> lambda, std::vector<double> values);
  static SpectralFunction from_json(const json& j);
};

class DiscreteOperator {
 public:
  const Domain& domain() const { return domain_; }
  OperatorFamily family() const { return family_; }
  double s() const { return s_; }
  double gamma() const { return gamma_; }

  const Mat& matrix() const { return A_; }
  const Vec& eigenvalues() const { return evals_; }
  // Columns orthonormal in the Euclidean inner product.
  const Mat& eigenvectors() const { return evecs_; }
  // (A^{-1} f)_i = sum_j K_ij f_j w.
  const Mat& green() const { return K_; }

  Vec apply(const Vec& v) const;
  Vec apply_inverse(const Vec& v) const;

  double lambda1() const { return evals_[0]; }
  // Nonnegative, normalised by sum_i w Phi1_i^2 = 1.
  Vec first_eigenfunction() const;

  // Tensor-product spectral structure; absent for the restricted family.
  bool has_tensor_structure() const { return mux_.size() > 0; }

  json to_json() const { return descriptor_; }

 private:
  friend DiscreteOperator build_laplacian(const Domain&);
  friend DiscreteOperator build_spectral_power(const Domain&, double);
  friend DiscreteOperator build_spectral_function(const Domain&, const SpectralFunction&);
  friend DiscreteOperator build_rfl(const Domain&, double);
  static DiscreteOperator spectral(const Domain& d, OperatorFamily family, const std::function<double(double)>& g,
                                   double s, double gamma, json descriptor);

  explicit DiscreteOperator(Domain d) : domain_(std::move(d)) {}

  Domain domain_;
  OperatorFamily family_ = OperatorFamily::laplacian;
  double s_ = 1.0, gamma_ = 1.0;
  Mat A_, K_, evecs_;
  Vec evals_;
  // Tensor factors: eigenvectors and eigenvalues of the 1D factors, multiplier grids.
  Mat Vx_, Vy_, G_, Ginv_;
  Vec mux_, muy_;
  json descriptor_;
};

// 1D Dirichlet Laplacian factor: orthonormal eigenvectors and eigenvalues of the
// cell-centred second difference with n nodes and spacing h.
std::pair<Mat, Vec> laplacian_factor(int n, double h);

DiscreteOperator build_laplacian(const Domain& d);
DiscreteOperator build_spectral_power(const Domain& d, double s);
DiscreteOperator build_spectral_function(const Domain& d, const SpectralFunction& g);
DiscreteOperator build_rfl(const Domain& d, double s);
DiscreteOperator build_operator(const Domain& d, const json& cfg);

const Mat& green_matrix(const DiscreteOperator& op);

struct FirstEigenpair {
  double lambda1;
  Vec phi1;
  // min and max of Phi1 / phi over interior nodes.
  double ratio_min;
  double ratio_max;
};
FirstEigenpair first_eigenpair(const DiscreteOperator& op);

// Normalisation constant of the restricted fractional Laplacian in dimension N.
double rfl_constant(int N, double s);

struct SubordinationResult {
  Mat K;
  double refinement_change;  // max relative change against half the nodes
  bool accurate;             // refinement_change <= 1%
  int nodes;
};
// Green matrix of the spectral power via int H(t) t^{s-1} dt / Gamma(s).
SubordinationResult heat_kernel_subordination(const Domain& d, double s, int nodes = 2048, double t_min = 1e-6,
                                              double t_max = 1e6);

enum class KernelHypothesis { K1, K2 };

struct KernelBoundReport {
  std::string hypothesis;
  bool pass = false;
  double c1 = 0.0;  // upper constant
  double c0 = 0.0;  // lower constant (K2 only)
  int worst_i = -1, worst_j = -1;
  int lower_i = -1, lower_j = -1;
  int band = 3;
  std::string regime = "power";
  double min_entry = 0.0;
  std::size_t pairs = 0;

  json to_json() const;
};

KernelBoundReport check_kernel_bounds(const DiscreteOperator& op, KernelHypothesis hyp, int band = 3);
KernelBoundReport check_kernel_bounds(const Mat& K, const Domain& d, double s, double gamma, KernelHypothesis hyp,
                                      int band = 3);

// max_i sum_j K_ij w.
double green_row_sum_bound(const DiscreteOperator& op);

}  // namespace nfde
