#pragma once

// Convex constrained least squares
//
//   minimize   (1 / 2NJ) * || y - Z alpha ||^2
//   subject to A alpha >= 0,  c' alpha = 1
//
// solved with a dual active-set method (Goldfarb-Idnani). Only the active
// constraints enter a factorization, so the number of inequality rows (one
// per simulation draw) only costs matrix-vector products.
//
// Internally the coefficients are rescaled to w_b = c_b * alpha_b and every
// inequality row is normalized to unit length; residuals and tolerances are
// reported in that scaling.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgrc/error.hpp"

namespace sgrc {

struct CLSProblem {
  Eigen::MatrixXd Z;       ///< (N*J) x B
  Eigen::VectorXd y;       ///< N*J
  Eigen::MatrixXd A_ineq;  ///< R x B, nonnegative entries
  Eigen::VectorXd c_eq;    ///< B, positive entries

  void validate() const;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 10'000;
  double ridge = 0.0;  ///< Tikhonov weight on the rescaled coefficients
  /// When the least-squares factor is numerically singular a ridge of this
  /// relative size is added and reported in CLSSolution::ridge_used.
  double auto_ridge = 1e-12;
  std::optional<Eigen::VectorXd> warm_start;
  /// Return the last iterate with a warning instead of throwing
  /// NonconvergenceError when max_iter is exhausted.
  bool accept_best_iterate = false;
};

struct CLSSolution {
  Eigen::VectorXd alpha;
  double ssr = 0.0;  ///< objective value (1/2NJ) * SSR
  double kkt_residual = 0.0;
  double max_ineq_violation = 0.0;
  double eq_violation = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  Eigen::VectorXd lambda;  ///< inequality multipliers (original scaling)
  double mu = 0.0;         ///< equality multiplier
  std::vector<Eigen::Index> active;
  double ridge_used = 0.0;
  std::vector<std::string> warnings;
};

class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, CLSSolution best)
      : Error(what), best_(std::move(best)) {}
  const CLSSolution& best_iterate() const { return best_; }

 private:
  CLSSolution best_;
};

/// Throws InvalidArgument on malformed problems, InfeasibleError when the
/// constraint set is empty and NonconvergenceError after max_iter iterations.
CLSSolution solve_cls(const CLSProblem& problem, const SolverOptions& opts = {});

/// Probability weights over fixed columns: w >= 0, sum w = 1.
CLSSolution solve_simplex_cls(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                              const SolverOptions& opts = {});

/// Objective (1/2NJ) * ||y - Z alpha||^2.
double cls_objective(const CLSProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& alpha);

}  // namespace sgrc
