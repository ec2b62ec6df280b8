#include "sgrc/basis.hpp"

#include <cmath>
#include <string>

#include "sgrc/error.hpp"

namespace sgrc {

Domain::Domain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.empty() || lower_.size() != upper_.size()) {
    throw InvalidArgument("domain bounds must be non-empty and of equal length");
  }
  for (std::size_t d = 0; d < lower_.size(); ++d) {
    if (!(lower_[d] < upper_[d])) {
      throw InvalidArgument("domain lower bound must be below upper bound in dimension " +
                            std::to_string(d + 1));
    }
  }
}

Domain Domain::cube(std::size_t dim, double lo, double hi) {
  return Domain(std::vector<double>(dim, lo), std::vector<double>(dim, hi));
}

Eigen::VectorXd Domain::to_unit(const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  if (static_cast<std::size_t>(beta.size()) != dim()) {
    throw InvalidArgument("point dimension does not match domain");
  }
  Eigen::VectorXd u(beta.size());
  for (Eigen::Index d = 0; d < beta.size(); ++d) u[d] = to_unit(beta[d], d);
  return u;
}

Eigen::VectorXd Domain::from_unit(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (static_cast<std::size_t>(u.size()) != dim()) {
    throw InvalidArgument("point dimension does not match domain");
  }
  Eigen::VectorXd beta(u.size());
  for (Eigen::Index d = 0; d < u.size(); ++d) beta[d] = from_unit(u[d], d);
  return beta;
}

double eval_1d(int level, int index, double u) {
  const LevelIndex1D node(level, index);
  const double h = node.spacing();
  return hat((u - node.coordinate()) / h);
}

double eval_nd_unit(const GridPoint& p, const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (static_cast<std::size_t>(u.size()) != p.dim()) {
    throw InvalidArgument("point dimension does not match basis function");
  }
  double v = 1.0;
  for (std::size_t d = 0; d < p.dim() && v != 0.0; ++d) {
    // (u - i 2^-l) / 2^-l == u 2^l - i, exact scaling by a power of two
    v *= hat(std::ldexp(u[d], p.levels[d]) - p.indices[d]);
  }
  return v;
}

double eval_nd(const GridPoint& p, const Domain& domain,
               const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (static_cast<std::size_t>(beta.size()) != p.dim() || domain.dim() != p.dim()) {
    throw InvalidArgument("point dimension does not match basis function");
  }
  return eval_nd_unit(p, domain.to_unit(beta));
}

BasisSet::BasisSet(SparseGrid g, Domain d) : grid(std::move(g)), domain(std::move(d)) {
  if (grid.dim() != domain.dim()) throw InvalidArgument("grid and domain dimensions differ");
}

namespace {

void check_length(std::size_t n, int level) {
  if (level < 1 || level > 30) throw InvalidArgument("invalid level " + std::to_string(level));
  if (n != (std::size_t{1} << level) - 1) {
    throw InvalidArgument("expected " + std::to_string((1 << level) - 1) +
                          " nodal values, got " + std::to_string(n));
  }
}

}  // namespace

std::vector<double> hierarchize_full_grid_1d(const std::vector<double>& values, int level) {
  check_length(values.size(), level);
  const int n = (1 << level) - 1;
  auto at = [&](int k) { return (k <= 0 || k > n) ? 0.0 : values[k - 1]; };
  std::vector<double> alpha(values.size());
  // A node of level l has its coarse neighbours (or the zero boundary) at
  // distance h_l, so the coarse interpolant there is their average.
  for (int l = 1; l <= level; ++l) {
    const int stride = 1 << (level - l);
    for (int i = 1; i < (1 << l); i += 2) {
      const int k = i * stride;
      alpha[k - 1] = at(k) - 0.5 * (at(k - stride) + at(k + stride));
    }
  }
  return alpha;
}

std::vector<double> dehierarchize_full_grid_1d(const std::vector<double>& surpluses, int level) {
  check_length(surpluses.size(), level);
  const int n = (1 << level) - 1;
  std::vector<double> values(surpluses.size(), 0.0);
  for (int k = 1; k <= n; ++k) {
    const double u = std::ldexp(static_cast<double>(k), -level);
    double s = 0.0;
    for (int l = 1; l <= level; ++l) {
      const int stride = 1 << (level - l);
      for (int i = 1; i < (1 << l); i += 2) {
        s += surpluses[i * stride - 1] * eval_1d(l, i, u);
      }
    }
    values[k - 1] = s;
  }
  return values;
}

}  // namespace sgrc
