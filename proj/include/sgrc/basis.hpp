#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sgrc/hiergrid.hpp"

namespace sgrc {

/// Axis-aligned hyper-rectangle in coefficient space.
class Domain {
 public:
  Domain(std::vector<double> lower, std::vector<double> upper);

  /// [lo, hi]^dim
  static Domain cube(std::size_t dim, double lo = -4.0, double hi = 4.0);

  std::size_t dim() const { return lower_.size(); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  double width(std::size_t d) const { return upper_[d] - lower_[d]; }

  double to_unit(double beta, std::size_t d) const {
    return (beta - lower_[d]) / (upper_[d] - lower_[d]);
  }
  double from_unit(double u, std::size_t d) const {
    return lower_[d] + u * (upper_[d] - lower_[d]);
  }
  Eigen::VectorXd to_unit(const Eigen::Ref<const Eigen::VectorXd>& beta) const;
  Eigen::VectorXd from_unit(const Eigen::Ref<const Eigen::VectorXd>& u) const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// max(0, 1 - |t|)
inline double hat(double t) {
  const double a = t < 0 ? -t : t;
  return a < 1.0 ? 1.0 - a : 0.0;
}

/// Hat function of node (l, i) at unit coordinate u. Validates (l, i).
double eval_1d(int level, int index, double u);

/// Tensor-product basis function of p at a coefficient-space point beta.
double eval_nd(const GridPoint& p, const Domain& domain,
               const Eigen::Ref<const Eigen::VectorXd>& beta);

/// Same as eval_nd with the argument already mapped to the unit cube.
double eval_nd_unit(const GridPoint& p, const Eigen::Ref<const Eigen::VectorXd>& u);

/// A sparse grid paired with the rectangle it is mapped onto.
struct BasisSet {
  SparseGrid grid;
  Domain domain;

  BasisSet(SparseGrid g, Domain d);
  std::size_t size() const { return grid.size(); }
};

/// Hierarchical surpluses of nodal values on the level-`level` full 1-D grid.
/// values[k-1] is the value at node k * 2^-level. The result uses the same
/// layout: entry k-1 holds the surplus of the basis function centred there.
std::vector<double> hierarchize_full_grid_1d(const std::vector<double>& values, int level);

/// Inverse of hierarchize_full_grid_1d: evaluates sum alpha * phi at every node.
std::vector<double> dehierarchize_full_grid_1d(const std::vector<double>& surpluses, int level);

}  // namespace sgrc
