#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgrc/basis.hpp"
#include "sgrc/estimator.hpp"
#include "sgrc/simulate.hpp"

namespace sgrc {

/// Probability weights on a finite support.
struct DiscreteDistribution {
  Eigen::MatrixXd support;  ///< R x D
  Eigen::VectorXd weights;  ///< R, nonnegative, unit sum

  Eigen::Index dim() const { return support.cols(); }
  Eigen::Index size() const { return support.rows(); }

  /// Weights in [-1e-8, 0) are set to zero and the rest renormalized; anything
  /// more negative throws InvalidArgument. `clamped` receives the count,
  /// excluding rounding-level negatives (above -1e-12 times the largest weight).
  static DiscreteDistribution from_weights(Eigen::MatrixXd support, Eigen::VectorXd weights,
                                           int* clamped = nullptr);
  static DiscreteDistribution from_fit(const FitResult& fit, int* clamped = nullptr);
};

struct CdfEvaluation {
  Eigen::MatrixXd eval_points;  ///< E x D
  Eigen::VectorXd values;       ///< E
};

/// Product lattice; points are enumerated with the last dimension fastest.
struct Lattice {
  std::vector<std::vector<double>> axes;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(axes.size()); }
  Eigen::Index size() const;
  Eigen::MatrixXd points() const;
};

/// per_dim equally spaced values from lower to upper inclusive, in each dimension.
Lattice evaluation_lattice(const Domain& domain, int per_dim = 10);

/// F(b) = sum_r 1[support_r <= b] w_r by direct dominance counting.
Eigen::VectorXd joint_cdf(const DiscreteDistribution& dist, const Eigen::MatrixXd& points,
                          int workers = 1);

/// The same values on a lattice via per-cell mass and prefix sums.
CdfEvaluation lattice_cdf(const DiscreteDistribution& dist, const Lattice& lattice);

/// Double sum over basis functions and draws, alpha_b sum_r 1[beta_r <= b] phi_b(beta_r).
/// Slow; kept as an independent reference for sparse grid fits.
Eigen::VectorXd basis_cdf(const FitResult& fit, const Eigen::MatrixXd& points);

Eigen::VectorXd marginal_cdf(const DiscreteDistribution& dist, Eigen::Index d,
                             const std::vector<double>& grid);

Eigen::VectorXd mean(const DiscreteDistribution& dist);

/// (1/E) sum_e (F_hat(b_e) - F_0(b_e))^2. Throws on mismatched point sets.
double integrated_squared_error(const CdfEvaluation& estimate, const CdfEvaluation& truth);

/// sqrt of the replicate mean of integrated_squared_error.
double rmise(const std::vector<CdfEvaluation>& estimates, const CdfEvaluation& truth);

inline constexpr Eigen::Index kTruthSamples = 2'000'000;

/// Monte Carlo CDF of the mixture from `samples` fixed-seed draws.
Eigen::VectorXd true_mixture_cdf(const MixtureDgp& dgp, const Eigen::MatrixXd& points,
                                 Eigen::Index samples = kTruthSamples, std::uint64_t seed = 7);

CdfEvaluation true_mixture_lattice_cdf(const MixtureDgp& dgp, const Lattice& lattice,
                                       Eigen::Index samples = kTruthSamples,
                                       std::uint64_t seed = 7);

void write_cdf_csv(std::ostream& out, const CdfEvaluation& cdf);
/// Long format with columns d, t, F_hat_d: one block per dimension (d is
/// 1-based), each on its own grid.
void write_marginals_csv(std::ostream& out, const std::vector<std::vector<double>>& grids,
                         const std::vector<Eigen::VectorXd>& values);

}  // namespace sgrc
