#include "sgrc/clsolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgrc {

void CLSProblem::validate() const {
  const Eigen::Index B = Z.cols();
  if (B < 1) throw InvalidArgument("constrained least squares needs at least one column");
  if (Z.rows() < 1 || y.size() != Z.rows()) throw InvalidArgument("Z and y row counts differ");
  if (A_ineq.cols() != B) throw InvalidArgument("inequality matrix has the wrong column count");
  if (c_eq.size() != B) throw InvalidArgument("equality vector has the wrong length");
  if (!(c_eq.array() > 0.0).any()) throw InvalidArgument("equality vector has no positive entry");
  if ((c_eq.array() < 0.0).any()) throw InvalidArgument("equality vector must be nonnegative");
  if (!Z.allFinite() || !y.allFinite() || !A_ineq.allFinite() || !c_eq.allFinite()) {
    throw InvalidArgument("constrained least squares inputs must be finite");
  }
}

double cls_objective(const CLSProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  const Eigen::VectorXd res = problem.y - problem.Z * alpha;
  return 0.5 * res.squaredNorm() / static_cast<double>(problem.y.size());
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Eigen::Index kEquality = -1;

// Goldfarb-Idnani state for
//   min 1/2 w'Hw + a'w  s.t.  e'w = 1,  C w >= 0
// with H = L L' given through J = L^{-T}. Columns 0..q-1 of J span the
// active normals (in the H^{-1} metric); R_ holds their triangular factor.
class DualActiveSet {
 public:
  DualActiveSet(Eigen::MatrixXd jmat, const Eigen::MatrixXd& C)
      : n_(jmat.rows()), J_(std::move(jmat)), R_(Eigen::MatrixXd::Zero(n_, n_)),
        u_(Eigen::VectorXd::Zero(n_)), C_(C) {}

  Eigen::VectorXd normal(Eigen::Index p) const {
    if (p == kEquality) return Eigen::VectorXd::Ones(n_);
    return C_.row(p).transpose();
  }

  struct Directions {
    Eigen::VectorXd d, z, r;
    bool dependent = false;
  };

  Directions directions(const Eigen::VectorXd& np) const {
    Directions dir;
    dir.d = J_.transpose() * np;
    const Eigen::Index free = n_ - q_;
    dir.z = J_.rightCols(free) * dir.d.tail(free);
    dir.r = R_.topLeftCorner(q_, q_).triangularView<Eigen::Upper>().solve(dir.d.head(q_));
    const double tail = dir.d.tail(free).norm();
    dir.dependent = free == 0 || tail <= 1e-11 * dir.d.norm();
    return dir;
  }

  // Rotates d so that entries beyond q vanish, then appends it to R.
  void add(Eigen::VectorXd d, Eigen::Index id, double multiplier) {
    for (Eigen::Index j = n_ - 1; j >= q_ + 1; --j) {
      double cc = d[j - 1];
      double ss = d[j];
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d[j] = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -h;
      } else {
        d[j - 1] = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    R_.col(q_).head(q_ + 1) = d.head(q_ + 1);
    u_[q_] = multiplier;
    active_.push_back(id);
    ++q_;
  }

  // Removes active position pos and restores the triangular factor.
  void drop(Eigen::Index pos) {
    for (Eigen::Index i = pos; i < q_ - 1; ++i) {
      active_[i] = active_[i + 1];
      u_[i] = u_[i + 1];
      R_.col(i) = R_.col(i + 1);
    }
    active_.pop_back();
    u_[q_ - 1] = 0.0;
    R_.col(q_ - 1).setZero();
    --q_;
    for (Eigen::Index j = pos; j < q_; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = j + 1; k < q_; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (Eigen::Index k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  Eigen::Index q() const { return q_; }
  const Eigen::MatrixXd& J() const { return J_; }
  Eigen::VectorXd& u() { return u_; }
  const std::vector<Eigen::Index>& active() const { return active_; }

 private:
  Eigen::Index n_;
  Eigen::Index q_ = 0;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd u_;
  std::vector<Eigen::Index> active_;
  const Eigen::MatrixXd& C_;
};

struct ScaledProblem {
  std::vector<Eigen::Index> kept;  // original column of each scaled column
  Eigen::VectorXd mass;            // c_b of kept columns
  Eigen::MatrixXd factor;          // upper triangular F with H = F'F
  Eigen::VectorXd linear;          // a
  Eigen::MatrixXd C;               // normalized inequality rows (scaled space)
  std::vector<Eigen::Index> row_of;  // original inequality row of each C row
  Eigen::VectorXd row_norm;
  double ridge = 0.0;
};

bool same_column(const CLSProblem& p, Eigen::Index a, Eigen::Index b) {
  return p.c_eq[a] == p.c_eq[b] && p.Z.col(a) == p.Z.col(b) && p.A_ineq.col(a) == p.A_ineq.col(b);
}

ScaledProblem scale(const CLSProblem& p, const SolverOptions& opts, std::vector<std::string>& warn) {
  ScaledProblem s;
  const Eigen::Index B = p.Z.cols();
  for (Eigen::Index b = 0; b < B; ++b) {
    if (p.c_eq[b] <= 0.0) {
      warn.push_back("column " + std::to_string(b) + " has zero mass and is fixed at 0");
      continue;
    }
    bool dup = false;
    for (auto k : s.kept) {
      if (same_column(p, k, b)) {
        dup = true;
        break;
      }
    }
    if (dup) {
      warn.push_back("column " + std::to_string(b) + " duplicates an earlier column; fixed at 0");
      continue;
    }
    s.kept.push_back(b);
  }
  const auto n = static_cast<Eigen::Index>(s.kept.size());
  const double rows = static_cast<double>(p.Z.rows());
  s.mass.resize(n);
  Eigen::MatrixXd Zs(p.Z.rows(), n);
  Eigen::MatrixXd As(p.A_ineq.rows(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    s.mass[k] = p.c_eq[s.kept[k]];
    Zs.col(k) = p.Z.col(s.kept[k]) / (s.mass[k] * std::sqrt(rows));
    As.col(k) = p.A_ineq.col(s.kept[k]) / s.mass[k];
  }
  s.linear = -(Zs.transpose() * p.y) / std::sqrt(rows);

  auto factorize = [&](double ridge) {
    Eigen::MatrixXd stacked(Zs.rows() + (ridge > 0 ? n : 0), n);
    stacked.topRows(Zs.rows()) = Zs;
    if (ridge > 0) stacked.bottomRows(n) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked);
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    const Eigen::Index k = std::min(stacked.rows(), n);
    F.topRows(k) = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return F;
  };
  s.ridge = opts.ridge;
  s.factor = factorize(s.ridge);
  const Eigen::VectorXd diag = s.factor.diagonal().cwiseAbs();
  const double dmax = std::max(diag.maxCoeff(), std::numeric_limits<double>::min());
  if (diag.minCoeff() <= 1e-8 * dmax) {
    // Numerically singular least-squares factor: the optimum is not unique.
    const double extra = opts.auto_ridge * dmax * dmax;
    s.ridge += extra;
    s.factor = factorize(s.ridge);
    warn.push_back("design is numerically rank deficient; added ridge " + std::to_string(s.ridge));
  }

  std::vector<Eigen::Index> nonzero;
  std::vector<double> norms;
  for (Eigen::Index r = 0; r < As.rows(); ++r) {
    const double nr = As.row(r).norm();
    if (nr > 0.0) {
      nonzero.push_back(r);
      norms.push_back(nr);
    }
  }
  s.C.resize(static_cast<Eigen::Index>(nonzero.size()), n);
  s.row_norm.resize(static_cast<Eigen::Index>(nonzero.size()));
  for (std::size_t k = 0; k < nonzero.size(); ++k) {
    s.C.row(k) = As.row(nonzero[k]) / norms[k];
    s.row_norm[k] = norms[k];
  }
  s.row_of = std::move(nonzero);
  return s;
}

CLSSolution finish(const CLSProblem& p, const ScaledProblem& s, const Eigen::VectorXd& w,
                   DualActiveSet& das, int iterations, std::vector<std::string> warnings) {
  CLSSolution sol;
  const Eigen::Index B = p.Z.cols();
  sol.alpha = Eigen::VectorXd::Zero(B);
  for (std::size_t k = 0; k < s.kept.size(); ++k) sol.alpha[s.kept[k]] = w[k] / s.mass[k];
  sol.iterations = iterations;
  sol.ridge_used = s.ridge;
  sol.warnings = std::move(warnings);

  sol.lambda = Eigen::VectorXd::Zero(p.A_ineq.rows());
  Eigen::VectorXd grad = s.factor.transpose() * (s.factor * w) + s.linear;
  Eigen::VectorXd residual = grad;
  const Eigen::VectorXd slack = s.C * w;
  double compl_max = 0.0;
  for (Eigen::Index k = 0; k < das.q(); ++k) {
    const Eigen::Index id = das.active()[k];
    const double uk = das.u()[k];
    if (id == kEquality) {
      sol.mu = uk;
      residual -= uk * Eigen::VectorXd::Ones(w.size());
    } else {
      residual -= uk * s.C.row(id).transpose();
      sol.lambda[s.row_of[id]] = uk / s.row_norm[id];
      sol.active.push_back(s.row_of[id]);
      compl_max = std::max(compl_max, std::abs(uk * slack[id]));
    }
  }
  std::sort(sol.active.begin(), sol.active.end());
  sol.kkt_residual = residual.cwiseAbs().maxCoeff();
  sol.complementarity = compl_max;
  const Eigen::VectorXd density = p.A_ineq * sol.alpha;
  sol.max_ineq_violation = std::max(0.0, -density.minCoeff());
  sol.eq_violation = p.c_eq.dot(sol.alpha) - 1.0;
  sol.ssr = cls_objective(p, sol.alpha);
  return sol;
}

}  // namespace

CLSSolution solve_cls(const CLSProblem& problem, const SolverOptions& opts) {
  problem.validate();
  if (opts.ridge < 0.0) throw InvalidArgument("ridge must be nonnegative");
  std::vector<std::string> warnings;
  const ScaledProblem s = scale(problem, opts, warnings);
  const auto n = static_cast<Eigen::Index>(s.kept.size());

  // J = F^{-1} so that J J' = H^{-1}.
  Eigen::MatrixXd jinv = s.factor.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
  DualActiveSet das(std::move(jinv), s.C);

  Eigen::VectorXd w = -(das.J() * (das.J().transpose() * s.linear));

  {
    const Eigen::VectorXd e = das.normal(kEquality);
    auto dir = das.directions(e);
    const double step = (1.0 - e.dot(w)) / dir.z.dot(e);
    w += step * dir.z;
    das.add(std::move(dir.d), kEquality, step);
  }

  const double feas_tol = 1e-3 * opts.tol;
  int iterations = 0;
  std::vector<char> is_active(static_cast<std::size_t>(s.C.rows()), 0);

  auto best_so_far = [&]() { return finish(problem, s, w, das, iterations, warnings); };

  while (true) {
    const Eigen::VectorXd slack = s.C * w;
    Eigen::Index p = -1;
    double worst = -feas_tol;
    for (Eigen::Index r = 0; r < slack.size(); ++r) {
      if (slack[r] < worst && !is_active[r]) {
        worst = slack[r];
        p = r;
      }
    }
    if (p < 0) break;

    double s_p = slack[p];
    double u_p = 0.0;
    const Eigen::VectorXd np = das.normal(p);
    while (true) {
      if (++iterations > opts.max_iter) {
        if (opts.accept_best_iterate) {
          CLSSolution best = best_so_far();
          best.warnings.push_back("iteration limit reached; returning best iterate");
          return best;
        }
        throw NonconvergenceError("constrained least squares did not converge in " +
                                      std::to_string(opts.max_iter) + " iterations",
                                  best_so_far());
      }
      auto dir = das.directions(np);

      double t1 = kInf;
      Eigen::Index drop_pos = -1;
      for (Eigen::Index k = 0; k < das.q(); ++k) {
        if (das.active()[k] == kEquality) continue;
        if (dir.r[k] > 0.0) {
          const double ratio = das.u()[k] / dir.r[k];
          if (ratio < t1) {
            t1 = ratio;
            drop_pos = k;
          }
        }
      }
      const double t2 = dir.dependent ? kInf : std::max(0.0, -s_p / dir.z.dot(np));
      const double t = std::min(t1, t2);
      if (t == kInf) throw InfeasibleError("constraint set of the least-squares problem is empty");

      if (t2 == kInf) {
        das.u().head(das.q()) -= t * dir.r;
        u_p += t;
        is_active[das.active()[drop_pos]] = 0;
        das.drop(drop_pos);
        continue;
      }

      w += t * dir.z;
      das.u().head(das.q()) -= t * dir.r;
      u_p += t;
      if (t2 <= t1) {
        das.add(std::move(dir.d), p, u_p);
        is_active[p] = 1;
        break;
      }
      is_active[das.active()[drop_pos]] = 0;
      das.drop(drop_pos);
      s_p = np.dot(w);
    }
  }

  CLSSolution sol = finish(problem, s, w, das, iterations, warnings);
  if (opts.warm_start) {
    const Eigen::VectorXd& w0 = *opts.warm_start;
    if (w0.size() != problem.Z.cols()) throw InvalidArgument("warm start has the wrong length");
    const bool feasible = (problem.A_ineq * w0).minCoeff() >= -1e-12 &&
                          std::abs(problem.c_eq.dot(w0) - 1.0) <= 1e-10;
    const double f0 = cls_objective(problem, w0);
    if (feasible && f0 < sol.ssr) {
      sol.warnings.push_back("warm start objective below solver optimum; returning warm start");
      sol.alpha = w0;
      sol.ssr = f0;
    }
  }
  return sol;
}

CLSSolution solve_simplex_cls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                              const SolverOptions& opts) {
  // Under the simplex constraints identical columns are interchangeable, so
  // only the first copy is kept and later copies get weight zero.
  std::vector<Eigen::Index> kept;
  for (Eigen::Index b = 0; b < Z.cols(); ++b) {
    bool dup = false;
    for (auto k : kept) dup = dup || Z.col(k) == Z.col(b);
    if (!dup) kept.push_back(b);
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  if (n == Z.cols()) {
    CLSProblem p{Z, y, Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Ones(n)};
    CLSSolution sol = solve_cls(p, opts);
    sol.alpha = sol.alpha.cwiseMax(0.0);
    return sol;
  }
  CLSProblem p{Z(Eigen::all, kept), y, Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Ones(n)};
  SolverOptions o = opts;
  if (opts.warm_start) {
    if (opts.warm_start->size() != Z.cols()) throw InvalidArgument("warm start has the wrong length");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (Eigen::Index b = 0; b < Z.cols(); ++b)
      for (Eigen::Index k = 0; k < n; ++k)
        if (Z.col(kept[k]) == Z.col(b)) {
          w[k] += (*opts.warm_start)[b];
          break;
        }
    o.warm_start = w;
  }
  CLSSolution sol = solve_cls(p, o);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(Z.cols());
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(Z.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    alpha[kept[k]] = std::max(sol.alpha[k], 0.0);
    lambda[kept[k]] = sol.lambda[k];
  }
  // A dropped copy has the same gradient as its kept twin; its multiplier
  // follows from stationarity with alpha = 0.
  std::vector<Eigen::Index> active;
  for (auto a : sol.active) active.push_back(kept[a]);
  for (Eigen::Index b = 0; b < Z.cols(); ++b) {
    if (std::find(kept.begin(), kept.end(), b) != kept.end()) continue;
    for (Eigen::Index k = 0; k < n; ++k)
      if (Z.col(kept[k]) == Z.col(b)) lambda[b] = sol.lambda[k];
    active.push_back(b);
  }
  std::sort(active.begin(), active.end());
  sol.active = std::move(active);
  sol.alpha = std::move(alpha);
  sol.lambda = std::move(lambda);
  sol.warnings.push_back(std::to_string(Z.cols() - n) + " duplicate columns fixed at 0");
  return sol;
}

}  // namespace sgrc
