#include "nfde/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace nfde {

Domain Domain::interval(double L, int n) {
  if (!(L > 0) || !std::isfinite(L)) throw ConfigError("interval: L must be positive");
  if (n < 2 || n > kMaxNodes1D) throw ConfigError("interval: n must lie in [2, 2048]");
  Domain d;
  d.shape_ = Shape::interval;
  d.Lx_ = L;
  d.Ly_ = 1.0;
  d.nx_ = n;
  d.ny_ = 1;
  return d;
}

Domain Domain::rectangle(double Lx, double Ly, int nx, int ny) {
  if (!(Lx > 0) || !(Ly > 0) || !std::isfinite(Lx) || !std::isfinite(Ly))
    throw ConfigError("rectangle: side lengths must be positive");
  if (nx < 2 || ny < 2 || nx > kMaxSide2D || ny > kMaxSide2D)
    throw ConfigError("rectangle: nx, ny must lie in [2, 64]");
  Domain d;
  d.shape_ = Shape::rectangle;
  d.Lx_ = Lx;
  d.Ly_ = Ly;
  d.nx_ = nx;
  d.ny_ = ny;
  return d;
}

Domain Domain::from_json(const json& j) {
  try {
    const auto shape = j.value("shape", std::string("interval"));
    if (shape == "interval") return interval(j.value("L", 1.0), j.at("n").get<int>());
    if (shape == "rectangle") {
      const int n = j.value("n", 0);
      return rectangle(j.value("Lx", 1.0), j.value("Ly", 1.0), j.value("nx", n), j.value("ny", n));
    }
    throw ConfigError("domain: unknown shape '" + shape + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
}

std::array<double, 2> Domain::node(int i) const {
  const int ix = i % nx_, iy = i / nx_;
  if (shape_ == Shape::interval) return {(ix + 0.5) * hx(), 0.0};
  return {(ix + 0.5) * hx(), (iy + 0.5) * hy()};
}

double Domain::distance(int i, int j) const {
  const auto a = node(i), b = node(j);
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

double Domain::distance_to_boundary(int i) const {
  const auto p = node(i);
  double d = std::min(p[0], Lx_ - p[0]);
  if (shape_ == Shape::rectangle) d = std::min({d, p[1], Ly_ - p[1]});
  return d;
}

int Domain::boundary_index_distance(int i) const {
  const int ix = i % nx_, iy = i / nx_;
  int d = std::min(ix, nx_ - 1 - ix);
  if (shape_ == Shape::rectangle) d = std::min({d, iy, ny_ - 1 - iy});
  return d;
}

int Domain::index_distance(int i, int j) const {
  return std::max(std::abs(i % nx_ - j % nx_), std::abs(i / nx_ - j / nx_));
}

Vec Domain::sample(const std::function<double(double, double)>& f) const {
  Vec v(size());
  for (int i = 0; i < size(); ++i) {
    const auto p = node(i);
    v[i] = f(p[0], p[1]);
  }
  return v;
}

json Domain::to_json() const {
  if (shape_ == Shape::interval) return {{"shape", "interval"}, {"L", Lx_}, {"n", nx_}};
  return {{"shape", "rectangle"}, {"Lx", Lx_}, {"Ly", Ly_}, {"nx", nx_}, {"ny", ny_}};
}

BoundaryWeight BoundaryWeight::make(const Domain& d, double gamma) {
  if (!(gamma >= 0.0) || gamma > 1.0) throw ConfigError("boundary weight: gamma must lie in [0, 1]");
  BoundaryWeight w;
  w.gamma = gamma;
  w.values.resize(d.size());
  for (int i = 0; i < d.size(); ++i) w.values[i] = std::pow(d.distance_to_boundary(i), gamma);
  return w;
}

}  // namespace nfde
