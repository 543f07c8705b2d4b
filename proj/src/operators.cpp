#include "nfde/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace nfde {

namespace {

// Applies V_x (mult o (V_x^T U V_y)) V_y^T to the grid function v.
Vec tensor_apply(const Mat& Vx, const Mat& Vy, const Mat& mult, const Vec& v) {
  const auto nx = Vx.rows(), ny = Vy.rows();
  Eigen::Map<const Mat> U(v.data(), nx, ny);
  Mat W = Vx.transpose() * U * Vy;
  W.array() *= mult.array();
  Vec out(nx * ny);
  Eigen::Map<Mat>(out.data(), nx, ny) = Vx * W * Vy.transpose();
  return out;
}

Mat tensor_synthesis(const Mat& Vx, const Mat& Vy, const Mat& mult) {
  const auto nx = Vx.rows(), ny = Vy.rows();
  if (ny == 1) {
    Mat A = Vx * mult.col(0).asDiagonal() * Vx.transpose();
    return 0.5 * (A + A.transpose());
  }
  const auto N = nx * ny;
  Mat A(N, N);
  Mat W(nx, ny);
  for (Eigen::Index j = 0; j < N; ++j) {
    const auto jx = j % nx, jy = j / nx;
    W.noalias() = Vx.row(jx).transpose() * Vy.row(jy);
    W.array() *= mult.array();
    Eigen::Map<Mat>(A.col(j).data(), nx, ny) = Vx * W * Vy.transpose();
  }
  return 0.5 * (A + A.transpose());
}

Mat laplacian_stencil(const Domain& d) {
  const int nx = d.nx(), ny = d.ny(), N = d.size();
  Mat A = Mat::Zero(N, N);
  const double cx = 1.0 / (d.hx() * d.hx());
  for (int i = 0; i < N; ++i) {
    const int ix = i % nx, iy = i / nx;
    // Ghost value -u at the boundary puts the zero at the cell face.
    A(i, i) += (ix == 0 || ix == nx - 1) ? 3 * cx : 2 * cx;
    if (ix > 0) A(i, i - 1) -= cx;
    if (ix < nx - 1) A(i, i + 1) -= cx;
    if (d.shape() == Shape::rectangle) {
      const double cy = 1.0 / (d.hy() * d.hy());
      A(i, i) += (iy == 0 || iy == ny - 1) ? 3 * cy : 2 * cy;
      if (iy > 0) A(i, i - nx) -= cy;
      if (iy < ny - 1) A(i, i + nx) -= cy;
    }
  }
  return A;
}

double log_interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const double lx = std::log(x);
  auto slope = [&](std::size_t k) {
    return (std::log(ys[k + 1]) - std::log(ys[k])) / (std::log(xs[k + 1]) - std::log(xs[k]));
  };
  std::size_t k;
  if (x <= xs.front()) k = 0;
  else if (x >= xs.back()) k = xs.size() - 2;
  else k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  return std::exp(std::log(ys[k]) + slope(k) * (lx - std::log(xs[k])));
}

}  // namespace

std::string to_string(OperatorFamily f) {
  switch (f) {
    case OperatorFamily::laplacian: return "laplacian";
    case OperatorFamily::spectral_power: return "spectral_power";
    case OperatorFamily::spectral_function: return "spectral_function";
    case OperatorFamily::restricted_fractional: return "restricted_fractional";
  }
  return "unknown";
}

SpectralFunction SpectralFunction::power_sum(std::vector<std::pair<double, double>> terms) {
  if (terms.empty()) throw ConfigError("power_sum: no terms");
  json jt = json::array();
  double order = 0.0;
  for (auto [c, s] : terms) {
    if (!(c > 0) || !(s >= 0) || s > 1) throw ConfigError("power_sum: need coef > 0 and exponent in [0, 1]");
    order = std::max(order, s);
    jt.push_back({{"coef", c}, {"s", s}});
  }
  SpectralFunction f;
  f.g = [terms](double l) {
    double v = 0;
    for (auto [c, s] : terms) v += c * std::pow(l, s);
    return v;
  };
  f.order = order;
  f.gamma = 1.0;
  f.descriptor = {{"kind", "power_sum"}, {"terms", jt}};
  return f;
}

SpectralFunction SpectralFunction::constant(double c) {
  if (!(c > 0)) throw ConfigError("constant spectral function must be positive");
  SpectralFunction f;
  f.g = [c](double) { return c; };
  f.order = 0.0;
  f.gamma = 1.0;
  f.descriptor = {{"kind", "constant"}, {"value", c}};
  return f;
}

SpectralFunction SpectralFunction::table(std::vector<double> lambda, std::vector<double> values) {
  if (lambda.size() < 2 || lambda.size() != values.size()) throw ConfigError("table: need >= 2 matching points");
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] > 0) || !(values[k] > 0)) throw ConfigError("table: entries must be positive");
    if (k > 0 && (!(lambda[k] > lambda[k - 1]) || values[k] < values[k - 1]))
      throw ConfigError("table: lambda increasing and g nondecreasing required");
  }
  SpectralFunction f;
  f.descriptor = {{"kind", "table"}, {"lambda", lambda}, {"g", values}};
  const auto n = lambda.size();
  f.order = (std::log(values[n - 1]) - std::log(values[n - 2])) / (std::log(lambda[n - 1]) - std::log(lambda[n - 2]));
  f.gamma = 1.0;
  f.g = [xs = std::move(lambda), ys = std::move(values)](double l) { return log_interp(xs, ys, l); };
  return f;
}

SpectralFunction SpectralFunction::from_json(const json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    SpectralFunction f;
    if (kind == "power_sum") {
      std::vector<std::pair<double, double>> terms;
      for (const auto& t : j.at("terms")) terms.emplace_back(t.value("coef", 1.0), t.at("s").get<double>());
      f = power_sum(terms);
    } else if (kind == "constant") {
      f = constant(j.value("value", 1.0));
    } else if (kind == "table") {
      f = table(j.at("lambda").get<std::vector<double>>(), j.at("g").get<std::vector<double>>());
    } else {
      throw ConfigError("spectral function: unknown kind '" + kind + "'");
    }
    if (j.contains("order")) f.order = j.at("order").get<double>();
    if (j.contains("gamma")) f.gamma = j.at("gamma").get<double>();
    return f;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spectral function: ") + e.what());
  }
}

std::pair<Mat, Vec> laplacian_factor(int n, double h) {
  Mat V(n, n);
  Vec mu(n);
  for (int k = 0; k < n; ++k) {
    const double a = (k + 1) * M_PI / n;
    for (int i = 0; i < n; ++i) V(i, k) = std::sin(a * (i + 0.5));
    V.col(k).normalize();
    const double sk = std::sin(0.5 * a);
    mu[k] = 4.0 / (h * h) * sk * sk;
  }
  return {V, mu};
}

DiscreteOperator DiscreteOperator::spectral(const Domain& d, OperatorFamily family,
                                            const std::function<double(double)>& g, double s, double gamma,
                                            json descriptor) {
  DiscreteOperator op(d);
  op.family_ = family;
  op.s_ = s;
  op.gamma_ = gamma;
  std::tie(op.Vx_, op.mux_) = laplacian_factor(d.nx(), d.hx());
  if (d.shape() == Shape::rectangle) {
    std::tie(op.Vy_, op.muy_) = laplacian_factor(d.ny(), d.hy());
  } else {
    op.Vy_ = Mat::Ones(1, 1);
    op.muy_ = Vec::Zero(1);
  }
  const auto nx = op.mux_.size(), ny = op.muy_.size();
  op.G_.resize(nx, ny);
  Mat lam(nx, ny);
  for (Eigen::Index j = 0; j < ny; ++j)
    for (Eigen::Index i = 0; i < nx; ++i) {
      lam(i, j) = op.mux_[i] + op.muy_[j];
      const double v = g(lam(i, j));
      if (!(v > 0) || !std::isfinite(v)) throw ConfigError("spectral multiplier must be positive on the spectrum");
      op.G_(i, j) = v;
    }
  op.Ginv_ = op.G_.cwiseInverse();

  const auto N = nx * ny;
  std::vector<Eigen::Index> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto p, auto q) {
    if (op.G_(p) != op.G_(q)) return op.G_(p) < op.G_(q);
    return lam(p) < lam(q);
  });
  op.evals_.resize(N);
  op.evecs_.resize(N, N);
  for (Eigen::Index k = 0; k < N; ++k) {
    const auto idx = order[k];
    const auto kx = idx % nx, ky = idx / nx;
    op.evals_[k] = op.G_(idx);
    for (Eigen::Index iy = 0; iy < ny; ++iy)
      op.evecs_.col(k).segment(iy * nx, nx) = op.Vx_.col(kx) * op.Vy_(iy, ky);
  }
  op.A_ = (family == OperatorFamily::laplacian) ? laplacian_stencil(d) : tensor_synthesis(op.Vx_, op.Vy_, op.G_);
  op.K_ = tensor_synthesis(op.Vx_, op.Vy_, op.Ginv_) / d.weight();
  descriptor["gamma"] = gamma;
  op.descriptor_ = {{"operator", descriptor}, {"domain", d.to_json()}};
  return op;
}

DiscreteOperator build_laplacian(const Domain& d) {
  return DiscreteOperator::spectral(d, OperatorFamily::laplacian, [](double l) { return l; }, 1.0, 1.0,
                                    {{"family", "laplacian"}});
}

DiscreteOperator build_spectral_power(const Domain& d, double s) {
  if (!(s > 0) || s > 1) throw ConfigError("spectral_power: s must lie in (0, 1]");
  return DiscreteOperator::spectral(d, OperatorFamily::spectral_power, [s](double l) { return std::pow(l, s); }, s, s,
                                    {{"family", "spectral_power"}, {"s", s}});
}

DiscreteOperator build_spectral_function(const Domain& d, const SpectralFunction& g) {
  if (!g.g) throw ConfigError("spectral_function: empty multiplier");
  if (!(g.gamma > 0) || g.gamma > 1) throw ConfigError("spectral_function: gamma must lie in (0, 1]");
  return DiscreteOperator::spectral(d, OperatorFamily::spectral_function, g.g, std::max(g.order, 1e-12), g.gamma,
                                    {{"family", "spectral_function"}, {"g", g.descriptor}, {"s", g.order}});
}

double rfl_constant(int N, double s) {
  return s * std::pow(4.0, s) * std::tgamma(0.5 * N + s) / (std::pow(M_PI, 0.5 * N) * std::tgamma(1 - s));
}

DiscreteOperator build_rfl(const Domain& d, double s) {
  if (d.shape() != Shape::interval) throw ConfigError("restricted_fractional: only the interval is supported");
  if (!(s > 0) || !(s < 1)) throw ConfigError("restricted_fractional: s must lie in (0, 1)");
  const int n = d.nx();
  const double h = d.hx(), L = d.Lx();
  const double c = rfl_constant(1, s);
  const double hs = std::pow(h, -2 * s);
  Mat A = Mat::Zero(n, n);
  // Interpolation mesh: 0, x_0, ..., x_{n-1}, L with zero values at the ends.
  std::vector<double> p(n + 2);
  p[0] = 0.0;
  for (int i = 0; i < n; ++i) p[i + 1] = (i + 0.5) * h;
  p[n + 1] = L;
  const bool log_case = std::abs(1 - 2 * s) < 1e-12;
  auto moments = [&](double ra, double rb) {
    // int_ra^rb r^{-1-2s} dr and int_ra^rb r^{-2s} dr, 0 < ra < rb.
    const double I0 = (std::pow(ra, -2 * s) - std::pow(rb, -2 * s)) / (2 * s);
    const double I1 = log_case ? std::log(rb / ra) : (std::pow(rb, 1 - 2 * s) - std::pow(ra, 1 - 2 * s)) / (1 - 2 * s);
    return std::pair{I0, I1};
  };
  for (int i = 0; i < n; ++i) {
    const int pi = i + 1;
    // Near field |y| < h: second-order Taylor term with exterior neighbours set to zero.
    const double near = c * hs / (2 - 2 * s);
    A(i, i) += 2 * near;
    if (i > 0) A(i, i - 1) -= near;
    if (i < n - 1) A(i, i + 1) -= near;
    // Far field: u_i int_{|y|>=h} |y|^{-1-2s} minus the exact integral of the interpolant.
    A(i, i) += c * 2 * hs / (2 * s);
    auto add_segment = [&](int ka, int kb, double ra, double rb) {
      // ka sits at distance ra, kb at distance rb (ra < rb).
      const auto [I0, I1] = moments(ra, rb);
      const double len = rb - ra;
      const double wa = (rb * I0 - I1) / len, wb = (I1 - ra * I0) / len;
      if (ka >= 1 && ka <= n) A(i, ka - 1) -= c * wa;
      if (kb >= 1 && kb <= n) A(i, kb - 1) -= c * wb;
    };
    for (int k = 0; k + 1 <= pi - 1; ++k) add_segment(k + 1, k, p[pi] - p[k + 1], p[pi] - p[k]);
    for (int k = pi + 1; k <= n; ++k) add_segment(k, k + 1, p[k] - p[pi], p[k + 1] - p[pi]);
  }
  A = (0.5 * (A + A.transpose())).eval();

  DiscreteOperator op(d);
  op.family_ = OperatorFamily::restricted_fractional;
  op.s_ = s;
  op.gamma_ = s;
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  if (es.info() != Eigen::Success) throw std::runtime_error("restricted_fractional: eigensolver failed");
  op.evals_ = es.eigenvalues();
  if (!(op.evals_[0] > 0)) throw std::runtime_error("restricted_fractional: matrix not positive definite");
  op.evecs_ = es.eigenvectors();
  for (Eigen::Index k = 0; k < op.evecs_.cols(); ++k)
    if (op.evecs_.col(k).sum() < 0) op.evecs_.col(k) *= -1;
  op.A_ = std::move(A);
  Mat K = op.evecs_ * op.evals_.cwiseInverse().asDiagonal() * op.evecs_.transpose();
  op.K_ = 0.5 * (K + K.transpose()) / d.weight();
  op.descriptor_ = {{"operator", {{"family", "restricted_fractional"}, {"s", s}, {"gamma", s}}},
                    {"domain", d.to_json()}};
  return op;
}

DiscreteOperator build_operator(const Domain& d, const json& cfg) {
  try {
    const auto family = cfg.at("family").get<std::string>();
    if (family == "laplacian") return build_laplacian(d);
    if (family == "spectral_power") return build_spectral_power(d, cfg.at("s").get<double>());
    if (family == "restricted_fractional") return build_rfl(d, cfg.at("s").get<double>());
    if (family == "spectral_function") return build_spectral_function(d, SpectralFunction::from_json(cfg.at("g")));
    throw ConfigError("operator: unknown family '" + family + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }
}

Vec DiscreteOperator::apply(const Vec& v) const {
  if (has_tensor_structure() && family_ != OperatorFamily::laplacian && domain_.shape() == Shape::rectangle)
    return tensor_apply(Vx_, Vy_, G_, v);
  return A_ * v;
}

Vec DiscreteOperator::apply_inverse(const Vec& v) const {
  if (has_tensor_structure()) return tensor_apply(Vx_, Vy_, Ginv_, v);
  return (K_ * v) * domain_.weight();
}

Vec DiscreteOperator::first_eigenfunction() const {
  Vec v = evecs_.col(0) / std::sqrt(domain_.weight());
  if (v.sum() < 0) v = -v;
  return v;
}

const Mat& green_matrix(const DiscreteOperator& op) { return op.green(); }

FirstEigenpair first_eigenpair(const DiscreteOperator& op) {
  FirstEigenpair fe{op.lambda1(), op.first_eigenfunction(), 0, 0};
  const auto phi = BoundaryWeight::make(op.domain(), op.gamma());
  const Vec ratio = fe.phi1.cwiseQuotient(phi.values);
  fe.ratio_min = ratio.minCoeff();
  fe.ratio_max = ratio.maxCoeff();
  return fe;
}

namespace {

// (1/Gamma(s)) int_0^inf e^{-l t} t^{s-1} dt by log-trapezoid on [t_min, t_max] plus the exact lower tail.
double subordination_weight(double lambda, double s, int nodes, double t_min, double t_max) {
  const double a = std::log(t_min), b = std::log(t_max);
  const double dtau = (b - a) / (nodes - 1);
  double sum = 0.0;
  for (int q = 0; q < nodes; ++q) {
    const double t = std::exp(a + q * dtau);
    const double f = std::exp(-lambda * t) * std::pow(t, s);
    sum += (q == 0 || q == nodes - 1) ? 0.5 * f : f;
  }
  sum *= dtau;
  double tail = 0.0, term = std::pow(t_min, s);  // (-l)^k t^{k+s} / k!
  for (int k = 0; k < 400; ++k) {
    const double piece = term / (k + s);
    tail += piece;
    if (std::abs(piece) < 1e-18 * std::abs(tail) && k > 2) break;
    term *= -lambda * t_min / (k + 1);
  }
  return (sum + tail) / std::tgamma(s);
}

}  // namespace

SubordinationResult heat_kernel_subordination(const Domain& d, double s, int nodes, double t_min, double t_max) {
  if (!(s > 0) || s > 1) throw ConfigError("subordination: s must lie in (0, 1]");
  if (nodes < 16) throw ConfigError("subordination: too few quadrature nodes");
  auto [Vx, mux] = laplacian_factor(d.nx(), d.hx());
  Mat Vy = Mat::Ones(1, 1);
  Vec muy = Vec::Zero(1);
  if (d.shape() == Shape::rectangle) std::tie(Vy, muy) = laplacian_factor(d.ny(), d.hy());
  Mat fine(mux.size(), muy.size());
  double change = 0.0;
  const int coarse_nodes = (nodes + 1) / 2;
  for (Eigen::Index j = 0; j < muy.size(); ++j)
    for (Eigen::Index i = 0; i < mux.size(); ++i) {
      const double l = mux[i] + muy[j];
      fine(i, j) = subordination_weight(l, s, nodes, t_min, t_max);
      const double coarse = subordination_weight(l, s, coarse_nodes, t_min, t_max);
      change = std::max(change, std::abs(fine(i, j) - coarse) / std::abs(fine(i, j)));
    }
  SubordinationResult res;
  res.K = tensor_synthesis(Vx, Vy, fine) / d.weight();
  res.refinement_change = change;
  res.accurate = change <= 0.01;
  res.nodes = nodes;
  return res;
}

json KernelBoundReport::to_json() const {
  return {{"hypothesis", hypothesis}, {"pass", pass},         {"c1", c1},
          {"c0", c0},                 {"worst_pair", {worst_i, worst_j}},
          {"lower_pair", {lower_i, lower_j}},
          {"excluded_band", band},    {"regime", regime},     {"min_entry", min_entry},
          {"pairs", pairs}};
}

KernelBoundReport check_kernel_bounds(const Mat& K, const Domain& d, double s, double gamma, KernelHypothesis hyp,
                                      int band) {
  KernelBoundReport rep;
  rep.hypothesis = hyp == KernelHypothesis::K1 ? "K1" : "K2";
  rep.band = band;
  const int N = d.size();
  const double e = d.dimension() - 2 * s;
  rep.min_entry = K.minCoeff();
  const auto phi = BoundaryWeight::make(d, gamma);
  const bool fallback = hyp == KernelHypothesis::K1 && !(e > 0);
  if (fallback) rep.regime = "bounded_kernel_fallback";
  double best_hi = 0.0, best_lo = std::numeric_limits<double>::infinity();
  std::vector<char> inside(N);
  for (int i = 0; i < N; ++i) inside[i] = d.boundary_index_distance(i) >= band;
  for (int j = 0; j < N; ++j) {
    if (!inside[j]) continue;
    for (int i = 0; i < j; ++i) {
      if (!inside[i] || d.index_distance(i, j) <= band) continue;
      ++rep.pairs;
      const double k = K(i, j);
      const double r = d.distance(i, j);
      double hi;
      if (fallback) {
        hi = k;
      } else if (hyp == KernelHypothesis::K1) {
        hi = k * std::pow(r, e);
      } else {
        const double rg = std::pow(r, gamma);
        const double bx = std::min(phi.values[i] / rg, 1.0), by = std::min(phi.values[j] / rg, 1.0);
        hi = k * std::pow(r, e) / (bx * by);
        const double lo = k / (phi.values[i] * phi.values[j]);
        if (lo < best_lo) {
          best_lo = lo;
          rep.lower_i = i;
          rep.lower_j = j;
        }
      }
      if (hi > best_hi || rep.worst_i < 0) {
        best_hi = hi;
        rep.worst_i = i;
        rep.worst_j = j;
      }
    }
  }
  rep.c1 = best_hi;
  const bool nonneg = rep.min_entry >= -1e-12;
  const bool upper_ok = rep.pairs > 0 && std::isfinite(best_hi) && best_hi > 0;
  if (hyp == KernelHypothesis::K2) {
    rep.c0 = std::isfinite(best_lo) ? std::max(best_lo, 0.0) : 0.0;
    rep.pass = nonneg && upper_ok && rep.c0 > 0;
  } else {
    rep.pass = nonneg && upper_ok;
  }
  return rep;
}

KernelBoundReport check_kernel_bounds(const DiscreteOperator& op, KernelHypothesis hyp, int band) {
  return check_kernel_bounds(op.green(), op.domain(), op.s(), op.gamma(), hyp, band);
}

double green_row_sum_bound(const DiscreteOperator& op) {
  return (op.green().rowwise().sum() * op.domain().weight()).maxCoeff();
}

}  // namespace nfde
