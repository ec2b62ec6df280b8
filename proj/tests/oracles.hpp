#pragma once

// Independent reference computations used only by the tests. None of these
// call into the sgrc routines they are meant to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Key = std::pair<std::vector<int>, std::vector<int>>;  // (levels, indices)

inline std::uint64_t binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t r = 1;
  for (int j = 1; j <= k; ++j) r = r * static_cast<std::uint64_t>(n - k + j) / static_cast<std::uint64_t>(j);
  return r;
}

/// Counts sparse grid points by enumerating level vectors with |l|_1 <= level + dim - 1;
/// each contributes prod 2^(l_d - 1) points.
inline std::uint64_t enumerate_sparse_count(int dim, int level) {
  const int cap = level + dim - 1;
  std::uint64_t total = 0;
  std::function<void(int, int, std::uint64_t)> rec = [&](int d, int used, std::uint64_t mult) {
    if (d == dim) {
      total += mult;
      return;
    }
    for (int l = 1; used + l + (dim - d - 1) <= cap; ++l) rec(d + 1, used + l, mult << (l - 1));
  };
  rec(0, 0, 1);
  return total;
}

/// Parent in one dimension from coordinates: the hat of level l-1 whose open
/// support contains the child's centre.
inline std::pair<int, int> parent_1d(int level, int index) {
  const double x = index * std::ldexp(1.0, -level);
  const double h = std::ldexp(1.0, -(level - 1));
  for (int i = 1; i < (1 << (level - 1)); i += 2) {
    if (std::abs(x - i * h) < h) return {level - 1, i};
  }
  return {0, 0};
}

/// Adds parents in every dimension until nothing changes.
inline std::set<Key> close_under_parents(std::set<Key> pts) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Key> add;
    for (const auto& [l, i] : pts) {
      for (std::size_t d = 0; d < l.size(); ++d) {
        if (l[d] <= 1) continue;
        auto [pl, pi] = parent_1d(l[d], i[d]);
        Key p{l, i};
        p.first[d] = pl;
        p.second[d] = pi;
        if (!pts.count(p)) add.push_back(p);
      }
    }
    for (auto& p : add) changed |= pts.insert(p).second;
  }
  return pts;
}

/// Solves the nodal interpolation system sum_k a_k phi_k(x_j) = v_j by dense LU.
inline std::vector<double> interpolation_solve(const std::vector<double>& values, int level) {
  const int n = (1 << level) - 1;
  std::vector<std::pair<int, int>> basis;
  for (int l = 1; l <= level; ++l)
    for (int i = 1; i < (1 << l); i += 2) basis.push_back({l, i});
  Eigen::MatrixXd M(n, n);
  Eigen::VectorXd v(n);
  for (int k = 1; k <= n; ++k) {
    const double x = k * std::ldexp(1.0, -level);
    v[k - 1] = values[k - 1];
    for (int b = 0; b < n; ++b) {
      const auto [l, i] = basis[b];
      const double t = std::abs(x * (1 << l) - i);
      M(k - 1, b) = t < 1.0 ? 1.0 - t : 0.0;
    }
  }
  const Eigen::VectorXd a = M.partialPivLu().solve(v);
  // Back into node layout: coefficient of the hat centred at node k.
  std::vector<double> out(n);
  for (int b = 0; b < n; ++b) {
    const auto [l, i] = basis[b];
    out[i * (1 << (level - l)) - 1] = a[b];
  }
  return out;
}

/// L2-star discrepancy of points in [0,1]^D (Warnock's formula).
inline double l2_star_discrepancy(const Eigen::MatrixXd& u) {
  const auto n = static_cast<double>(u.rows());
  const auto D = static_cast<double>(u.cols());
  double a = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    double p = 1.0;
    for (Eigen::Index d = 0; d < u.cols(); ++d) p *= 1.0 - u(i, d) * u(i, d);
    a += p;
  }
  double b = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
      double p = 1.0;
      for (Eigen::Index d = 0; d < u.cols(); ++d) p *= 1.0 - std::max(u(i, d), u(j, d));
      b += p;
    }
  }
  return std::sqrt(std::pow(3.0, -D) - std::pow(2.0, 1.0 - D) / n * a + b / (n * n));
}

struct KktReport {
  double stationarity = 0.0;  ///< in mass-scaled coordinates
  double min_multiplier = 0.0;
  double complementarity = 0.0;
  double min_slack = 0.0;
  double eq_violation = 0.0;
};

/// Recomputes the KKT conditions of
///   min (1/2n)||y - Z a||^2  s.t.  A a >= 0, c'a = 1
/// from the primal point and multipliers (grad = A' lambda + mu c).
inline KktReport check_kkt(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                           const Eigen::VectorXd& alpha, const Eigen::VectorXd& lambda, double mu) {
  const double n = static_cast<double>(y.size());
  const Eigen::VectorXd grad = Z.transpose() * (Z * alpha - y) / n;
  const Eigen::VectorXd r = grad - A.transpose() * lambda - mu * c;
  KktReport k;
  k.stationarity = r.cwiseQuotient(c).cwiseAbs().maxCoeff();
  k.min_multiplier = lambda.size() ? lambda.minCoeff() : 0.0;
  const Eigen::VectorXd slack = A * alpha;
  k.min_slack = slack.minCoeff();
  k.complementarity = lambda.cwiseProduct(slack).cwiseAbs().maxCoeff();
  k.eq_violation = std::abs(c.dot(alpha) - 1.0);
  return k;
}

/// Brute-force minimum of the same program by grid search over the free
/// coordinates left after eliminating the equality. The feasible polytope's
/// vertices bound the search box; the grid is refined around the incumbent.
struct GridSearchResult {
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd alpha;
};

inline GridSearchResult grid_search_cls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                        const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                                        double final_step = 1e-7) {
  const Eigen::Index B = Z.cols();
  const double n = static_cast<double>(y.size());
  auto objective = [&](const Eigen::VectorXd& a) { return 0.5 * (y - Z * a).squaredNorm() / n; };
  GridSearchResult best;
  if (B == 1) {
    best.alpha = Eigen::VectorXd::Constant(1, 1.0 / c[0]);
    best.objective = objective(best.alpha);
    return best;
  }
  // a = a0 + N t with c'a0 = 1 and N an orthonormal basis of c's null space.
  const Eigen::VectorXd a0 = c / c.squaredNorm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c.transpose(), Eigen::ComputeFullV);
  const Eigen::MatrixXd N = svd.matrixV().rightCols(B - 1);
  const Eigen::MatrixXd G = A * N;  // constraint: G t >= -A a0
  const Eigen::VectorXd h = -A * a0;
  const int m = static_cast<int>(B - 1);

  // Vertices: every m-subset of constraint rows solved as equalities.
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  std::vector<int> pick(static_cast<std::size_t>(m));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == m) {
      Eigen::MatrixXd Gs(m, m);
      Eigen::VectorXd hs(m);
      for (int k = 0; k < m; ++k) {
        Gs.row(k) = G.row(pick[k]);
        hs[k] = h[pick[k]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Gs);
      if (lu.rank() < m) return;
      const Eigen::VectorXd t = lu.solve(hs);
      if (((G * t - h).array() >= -1e-10).all()) {
        lo = lo.cwiseMin(t);
        hi = hi.cwiseMax(t);
      }
      return;
    }
    for (int r = start; r < G.rows(); ++r) {
      pick[depth] = r;
      rec(r + 1, depth + 1);
    }
  };
  rec(0, 0);
  if (!lo.allFinite()) return best;  // unbounded or empty; not generated by the tests

  Eigen::VectorXd center = (lo + hi) / 2;
  Eigen::VectorXd half = (hi - lo) / 2 + Eigen::VectorXd::Constant(m, 1e-9);
  const int pts = m == 1 ? 2001 : m == 2 ? 161 : 41;
  bool first = true;
  while (true) {
    const double step = 2 * half.maxCoeff() / (pts - 1);
    Eigen::VectorXd t(m);
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    bool done = false;
    Eigen::VectorXd best_t = center;
    double best_f = first ? std::numeric_limits<double>::infinity() : best.objective;
    while (!done) {
      for (int k = 0; k < m; ++k) t[k] = center[k] - half[k] + 2 * half[k] * idx[k] / (pts - 1);
      if (((G * t - h).array() >= 0.0).all()) {
        const double f = objective(a0 + N * t);
        if (f < best_f) {
          best_f = f;
          best_t = t;
        }
      }
      int k = 0;
      while (k < m && ++idx[k] == pts) idx[k++] = 0;
      done = k == m;
    }
    if (std::isfinite(best_f)) {
      best.objective = best_f;
      best.alpha = a0 + N * best_t;
    }
    first = false;
    if (step < final_step) break;
    center = best_t;
    half = half * (8.0 / (pts - 1));
  }
  return best;
}

struct ClsInstance {
  Eigen::MatrixXd Z, A;
  Eigen::VectorXd y, c;
};

/// Tiny problem shaped like the estimator's: B one-dimensional hats (root,
/// then level 2, then the first level-3 node) evaluated at R uniform draws on
/// (0, 1), random nonnegative regressors and 0/1 outcomes.
inline ClsInstance random_cls_instance(std::mt19937_64& rng, int B, int R, int rows) {
  const std::pair<int, int> nodes[] = {{1, 1}, {2, 1}, {2, 3}, {3, 1}};
  std::uniform_real_distribution<double> U(0.0, 1.0);
  ClsInstance inst;
  while (true) {
    inst.A.resize(R, B);
    for (int r = 0; r < R; ++r) {
      const double u = U(rng);
      for (int b = 0; b < B; ++b) {
        const double t = std::abs(u * (1 << nodes[b].first) - nodes[b].second);
        inst.A(r, b) = t < 1.0 ? 1.0 - t : 0.0;
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(inst.A);
    if (lu.rank() == B) break;
  }
  inst.c = inst.A.colwise().sum().transpose();
  inst.Z.resize(rows, B);
  for (Eigen::Index i = 0; i < inst.Z.size(); ++i) inst.Z.data()[i] = 4.0 * U(rng);
  inst.y.resize(rows);
  for (int i = 0; i < rows; ++i) inst.y[i] = U(rng) < 0.3 ? 1.0 : 0.0;
  return inst;
}

}  // namespace oracle
