#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgrc/basis.hpp"
#include "sgrc/choicemodel.hpp"
#include "sgrc/estimator.hpp"

namespace sgrc {

struct MixtureComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Finite mixture of multivariate normals for the random coefficients, with J
/// inside alternatives and standard normal covariates.
class MixtureDgp {
 public:
  /// Weights must be positive and sum to one; covariances symmetric positive
  /// semidefinite (a zero matrix gives a point mass).
  explicit MixtureDgp(std::vector<MixtureComponent> components, int n_alternatives = 5,
                      std::string name = "");

  /// 0.5 N(-1.5, S) + 0.5 N(1.5, S), S with 0.4 on the diagonal and 0.1 elsewhere.
  static MixtureDgp two_normals(int dim, int n_alternatives = 5);
  /// Equal-weight means -2.5, -0.8, 0.8, 2.5 with covariance S / 4.
  static MixtureDgp four_normals(int dim, int n_alternatives = 5);
  static MixtureDgp point_mass(const Eigen::VectorXd& at, int n_alternatives = 5);

  int dim() const { return static_cast<int>(components_.front().mean.size()); }
  int n_alternatives() const { return n_alternatives_; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  const std::string& name() const { return name_; }

  /// n x D draws: component by weight, then mean + L z.
  Eigen::MatrixXd sample(Eigen::Index n, std::mt19937_64& rng) const;

 private:
  std::vector<MixtureComponent> components_;
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<double> cumulative_;
  int n_alternatives_;
  std::string name_;
};

Eigen::MatrixXd draw_coefficients(const MixtureDgp& dgp, Eigen::Index n, std::mt19937_64& rng);

/// Draws standard normal covariates, then one Gumbel shock per alternative and
/// for the outside option; the highest utility wins.
ChoiceDataset simulate_choices(const Eigen::MatrixXd& betas, Eigen::Index n_alternatives,
                               std::mt19937_64& rng);

/// Same with given covariates ((N*J) x D); only the shocks are random.
ChoiceDataset simulate_choices(const Eigen::MatrixXd& betas, const Eigen::MatrixXd& x,
                               Eigen::Index n_alternatives, std::mt19937_64& rng);

/// Coefficients then choices from a fresh generator seeded with `seed`.
ChoiceDataset simulate_dataset(const MixtureDgp& dgp, Eigen::Index n_units, std::uint64_t seed);

struct EstimatorSpec {
  std::string label;
  EstimatorConfig config;
};

struct McConfig {
  MixtureDgp dgp = MixtureDgp::two_normals(2);
  Eigen::Index n_units = 1000;
  int replicates = 20;
  std::uint64_t seed = 1;
  std::vector<EstimatorSpec> estimators;
  Domain domain = Domain::cube(2);
  int lattice_per_dim = 10;
  Eigen::Index truth_samples = 2'000'000;
  std::uint64_t truth_seed = 7;
  int workers = 1;

  void validate() const;
};

struct ReplicateOutcome {
  int replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double ise = 0.0;  ///< mean squared CDF error over the evaluation lattice
  int n_parameters = 0;
  int selected_step = 0;
  int steps_run = 0;
  double kkt_residual = 0.0;  ///< largest over the returned fit and every ASG step
  int exit_warnings = 0;
  std::vector<double> cv_mse;    ///< ASG mean out-of-sample MSE per step
  std::vector<double> step_ssr;  ///< ASG full-data objective per step
};

struct EstimatorSummary {
  std::string label;
  EstimatorKind kind = EstimatorKind::SG;
  int level = 0;
  int q = 0;
  int successes = 0;
  int failures = 0;
  double rmise = 0.0;  ///< over successful replicates
  double mean_parameters = 0.0;
  double mean_selected_step = 0.0;
  double max_kkt_residual = 0.0;
  std::vector<ReplicateOutcome> replicates;
};

struct McReport {
  std::string dgp;
  int dim = 0;
  Eigen::Index n_units = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<EstimatorSummary> estimators;
  double success_rate = 0.0;

  const EstimatorSummary& find(const std::string& label) const;
};

/// Fits every configured estimator on `replicates` independent data sets.
/// Replicate r uses the stream derive_seed(seed, r), so the report does not
/// depend on the number of workers.
McReport run_experiment(const McConfig& config);

/// Rows: N x level; columns: estimator x {parameters, RMISE}.
void write_table_csv(std::ostream& out, const McReport& report);

}  // namespace sgrc
