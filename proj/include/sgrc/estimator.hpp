#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgrc/basis.hpp"
#include "sgrc/choicemodel.hpp"
#include "sgrc/clsolver.hpp"
#include "sgrc/hiergrid.hpp"
#include "sgrc/quasirand.hpp"

namespace sgrc {

enum class EstimatorKind { SG, ASG, FKRB };
enum class RefinementCriterion { Surplus, LocalError };
enum class SelectionRule { CvMse, CvLogLik, Aic };
enum class CvMetric { Mse, LogLik };

std::string to_string(EstimatorKind k);
std::string to_string(RefinementCriterion c);
std::string to_string(SelectionRule s);
EstimatorKind parse_estimator_kind(const std::string& s);
RefinementCriterion parse_criterion(const std::string& s);
SelectionRule parse_selection(const std::string& s);

struct DrawOptions {
  Eigen::Index count = 0;  ///< 0 selects D * 2000
  int burn_in = kDefaultBurnIn;

  Eigen::Index resolved(Eigen::Index dim) const { return count > 0 ? count : dim * kDrawsPerDim; }
};

struct RefineOptions {
  int steps = 10;
  int points_per_step = 1;
  RefinementCriterion criterion = RefinementCriterion::LocalError;
  SelectionRule selection = SelectionRule::CvMse;
  int k_folds = 5;
  int max_level = kDefaultMaxLevel;
  std::uint64_t cv_seed = 20220201;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::SG;
  int level = 4;  ///< SG / ASG
  int q = 7;      ///< FKRB points per dimension
  DrawOptions draws;
  SolverOptions solver;
  RefineOptions refinement;
  int workers = 1;
};

struct RefinementStep {
  int step = 0;
  std::vector<GridPoint> refined;
  std::vector<GridPoint> added;
  double ssr = 0.0;  ///< (1/2NJ) SSR of the full-data fit
  double in_sample_mse = 0.0;
  std::vector<double> oos_mse;  ///< per fold
  double oos_mse_mean = 0.0;
  std::vector<double> oos_loglik;  ///< per fold, sum over held-out units
  double oos_loglik_mean = 0.0;
  double aic = 0.0;
  int n_parameters = 0;
  double kkt_residual = 0.0;
};

struct RefinementTrace {
  std::vector<RefinementStep> steps;
  int selected_step = 0;
  bool exhausted = false;  ///< stopped early, no refinable point left
  SelectionRule selection = SelectionRule::CvMse;
};

struct FitDiagnostics {
  double ssr = 0.0;
  double kkt_residual = 0.0;
  double max_ineq_violation = 0.0;
  double eq_violation = 0.0;
  int iterations = 0;
  int n_parameters = 0;
  double ridge_used = 0.0;
  std::vector<std::string> warnings;
};

struct FitResult {
  EstimatorKind kind = EstimatorKind::SG;
  EstimatorConfig config;
  Domain domain = Domain::cube(1);
  std::optional<SparseGrid> grid;  ///< SG / ASG basis
  Eigen::MatrixXd support;         ///< R x D draws, or the FKRB fixed grid
  Eigen::VectorXd alpha;           ///< basis coefficients, or FKRB weights
  Eigen::VectorXd density_at_draws;
  Eigen::VectorXd fitted;  ///< predicted probabilities Z alpha, N*J
  FitDiagnostics diagnostics;
  std::optional<RefinementTrace> trace;
};

/// Classical sparse grid estimator.
FitResult fit_sg(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config);

/// Fixed-grid estimator on q cell-midpoints per dimension. Throws
/// CapacityError when q^D exceeds the number of regression rows N*J.
FitResult fit_fkrb(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config);

/// Spatially adaptive sparse grid estimator with full-search step selection.
FitResult fit_asg(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config);

/// Dispatches on config.kind.
FitResult fit(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config);

/// Cell midpoints of [lower, upper] per dimension, cartesian product (q^D x D).
Eigen::MatrixXd fixed_grid_points(const Domain& domain, int q);

struct PointScore {
  GridPoint point;
  double score = 0.0;
};

/// |alpha_p| for each refinable point, in grid order.
std::vector<PointScore> criterion_surplus(const SparseGrid& grid, const Eigen::VectorXd& alpha);

/// c_p = sum_{n,j} |alpha_p * Z[(n,j),p] * eps^2_{n,j}| for each refinable point.
std::vector<PointScore> criterion_local_error(const SparseGrid& grid, const Eigen::VectorXd& alpha,
                                              const Eigen::MatrixXd& Z,
                                              const Eigen::VectorXd& residuals);

/// Highest scores first; ties in canonical point order.
std::vector<GridPoint> select_top(std::vector<PointScore> scores, int count);

struct AicValue {
  double value = 0.0;
  bool degenerate = false;  ///< SSR was zero; value is a large negative sentinel
};

/// (N*J) ln(SSR / (N*J)) + 2 * n_parameters, SSR unscaled.
AicValue aic(double ssr_unscaled, Eigen::Index rows, int n_parameters);

/// Position-independent balanced fold assignment: units are ranked by a
/// seeded hash of their id and dealt round-robin into k folds.
std::vector<int> fold_assignment(const std::vector<std::int64_t>& unit_ids, int k,
                                 std::uint64_t seed);

struct CvResult {
  std::vector<double> fold_mse;
  std::vector<double> fold_loglik;
  double mean_mse = 0.0;
  double mean_loglik = 0.0;
  int clamped = 0;  ///< predicted probabilities clamped to 1e-12 under log-likelihood

  double value(CvMetric m) const { return m == CvMetric::Mse ? mean_mse : mean_loglik; }
};

/// Returns predicted probabilities for the rows of test_units (J per unit, in
/// order), having been trained on train_units.
using FoldPredictor = std::function<Eigen::VectorXd(const std::vector<Eigen::Index>& train_units,
                                                    const std::vector<Eigen::Index>& test_units)>;

CvResult kfold_cv(const ChoiceDataset& data, int k, std::uint64_t seed, const FoldPredictor& fit);

/// Held-out log-likelihood of one unit block given predicted inside probabilities.
double unit_loglik(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& p,
                   int& clamped);

}  // namespace sgrc
