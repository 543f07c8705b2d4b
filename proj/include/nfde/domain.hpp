#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "nfde/report.hpp"

namespace nfde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Shape { interval, rectangle };

// Cell-centred uniform grid: x_i = (i + 1/2) h, midpoint weights.
// Rectangle nodes are ordered ix + nx * iy.
class Domain {
 public:
  static constexpr int kMaxNodes1D = 2048;
  static constexpr int kMaxSide2D = 64;

  static Domain interval(double L, int n);
  static Domain rectangle(double Lx, double Ly, int nx, int ny);
  static Domain from_json(const json& j);

  Shape shape() const { return shape_; }
  int dimension() const { return shape_ == Shape::interval ? 1 : 2; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int size() const { return nx_ * ny_; }
  double Lx() const { return Lx_; }
  double Ly() const { return Ly_; }
  double hx() const { return Lx_ / nx_; }
  double hy() const { return shape_ == Shape::interval ? 1.0 : Ly_ / ny_; }
  double h() const { return std::max(hx(), shape_ == Shape::interval ? 0.0 : hy()); }
  double weight() const { return hx() * hy(); }
  double measure() const { return shape_ == Shape::interval ? Lx_ : Lx_ * Ly_; }

  std::array<double, 2> node(int i) const;
  double x(int i) const { return node(i)[0]; }
  double distance(int i, int j) const;
  double distance_to_boundary(int i) const;
  // Cells between node i and the boundary, counting the node's own cell (0-based).
  int boundary_index_distance(int i) const;
  int index_distance(int i, int j) const;

  Vec sample(const std::function<double(double, double)>& f) const;
  double integral(const Vec& f) const { return weight() * f.sum(); }
  double l1(const Vec& f) const { return weight() * f.cwiseAbs().sum(); }
  double weighted_l1(const Vec& f, const Vec& phi) const { return weight() * f.cwiseAbs().dot(phi); }

  json to_json() const;

 private:
  Domain() = default;
  Shape shape_ = Shape::interval;
  int nx_ = 0, ny_ = 1;
  double Lx_ = 1, Ly_ = 1;
};

struct BoundaryWeight {
  double gamma = 1.0;
  Vec values;

  static BoundaryWeight make(const Domain& d, double gamma);
};

}  // namespace nfde
