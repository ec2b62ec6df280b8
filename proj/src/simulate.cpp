#include "sgrc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "sgrc/distribution.hpp"
#include "sgrc/error.hpp"
#include "sgrc/parallel.hpp"
#include "sgrc/rng.hpp"
#include "sgrc/serialize.hpp"

namespace sgrc {

namespace {

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov, std::size_t m) {
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidArgument("covariance of component " + std::to_string(m) + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Singular but positive semidefinite covariances (point masses, degenerate
  // directions) get a symmetric square-root factor instead.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd ev = eig.eigenvalues();
  if (ev.minCoeff() < -1e-10 * scale) {
    throw InvalidArgument("covariance of component " + std::to_string(m) +
                          " is not positive semidefinite");
  }
  return eig.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::MatrixXd equicorrelated(int dim, double diag, double off) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(dim, dim, off);
  s.diagonal().setConstant(diag);
  return s;
}

}  // namespace

MixtureDgp::MixtureDgp(std::vector<MixtureComponent> components, int n_alternatives,
                       std::string name)
    : components_(std::move(components)), n_alternatives_(n_alternatives), name_(std::move(name)) {
  if (components_.empty()) throw InvalidArgument("mixture needs at least one component");
  if (n_alternatives_ < 1) throw InvalidArgument("need at least one inside alternative");
  const Eigen::Index D = components_.front().mean.size();
  if (D < 1) throw InvalidArgument("mixture dimension must be positive");
  double total = 0.0;
  for (std::size_t m = 0; m < components_.size(); ++m) {
    const auto& c = components_[m];
    if (c.mean.size() != D || c.cov.rows() != D || c.cov.cols() != D) {
      throw InvalidArgument("component " + std::to_string(m) + " has inconsistent dimensions");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw InvalidArgument("component weights must be positive");
    }
    if (!c.mean.allFinite() || !c.cov.allFinite()) {
      throw InvalidArgument("component " + std::to_string(m) + " has non-finite parameters");
    }
    factors_.push_back(covariance_factor(c.cov, m));
    total += c.weight;
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("component weights must sum to 1");
  cumulative_.back() = 1.0;
}

MixtureDgp MixtureDgp::two_normals(int dim, int n_alternatives) {
  const Eigen::MatrixXd s = equicorrelated(dim, 0.4, 0.1);
  return MixtureDgp({{0.5, Eigen::VectorXd::Constant(dim, -1.5), s},
                     {0.5, Eigen::VectorXd::Constant(dim, 1.5), s}},
                    n_alternatives, "two_normals");
}

MixtureDgp MixtureDgp::four_normals(int dim, int n_alternatives) {
  const Eigen::MatrixXd s = equicorrelated(dim, 0.4, 0.1) / 4.0;
  std::vector<MixtureComponent> comps;
  for (double mu : {-2.5, -0.8, 0.8, 2.5}) comps.push_back({0.25, Eigen::VectorXd::Constant(dim, mu), s});
  return MixtureDgp(std::move(comps), n_alternatives, "four_normals");
}

MixtureDgp MixtureDgp::point_mass(const Eigen::VectorXd& at, int n_alternatives) {
  return MixtureDgp({{1.0, at, Eigen::MatrixXd::Zero(at.size(), at.size())}}, n_alternatives,
                    "point_mass");
}

Eigen::MatrixXd MixtureDgp::sample(Eigen::Index n, std::mt19937_64& rng) const {
  const int D = dim();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(n, D);
  Eigen::VectorXd z(D);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double u = unif(rng);
    const auto m = static_cast<std::size_t>(
        std::upper_bound(cumulative_.begin(), cumulative_.end() - 1, u) - cumulative_.begin());
    for (int d = 0; d < D; ++d) z[d] = normal(rng);
    out.row(k) = (components_[m].mean + factors_[m] * z).transpose();
  }
  return out;
}

Eigen::MatrixXd draw_coefficients(const MixtureDgp& dgp, Eigen::Index n, std::mt19937_64& rng) {
  if (n < 1) throw InvalidArgument("need at least one unit");
  return dgp.sample(n, rng);
}

ChoiceDataset simulate_choices(const Eigen::MatrixXd& betas, Eigen::Index n_alternatives,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(betas.rows() * n_alternatives, betas.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index d = 0; d < x.cols(); ++d) x(r, d) = normal(rng);
  return simulate_choices(betas, x, n_alternatives, rng);
}

ChoiceDataset simulate_choices(const Eigen::MatrixXd& betas, const Eigen::MatrixXd& x,
                               Eigen::Index n_alternatives, std::mt19937_64& rng) {
  const Eigen::Index N = betas.rows();
  const Eigen::Index J = n_alternatives;
  if (J < 1 || x.rows() != N * J || x.cols() != betas.cols()) {
    throw InvalidArgument("covariates must have N*J rows and D columns");
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto gumbel = [&]() {
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    return -std::log(-std::log(u));
  };
  Eigen::VectorXd y = Eigen::VectorXd::Zero(N * J);
  for (Eigen::Index n = 0; n < N; ++n) {
    double best = gumbel();  // outside option
    Eigen::Index choice = -1;
    for (Eigen::Index j = 0; j < J; ++j) {
      const double u = x.row(n * J + j).dot(betas.row(n)) + gumbel();
      if (u > best) {
        best = u;
        choice = j;
      }
    }
    if (choice >= 0) y[n * J + choice] = 1.0;
  }
  return ChoiceDataset(N, J, x, std::move(y));
}

ChoiceDataset simulate_dataset(const MixtureDgp& dgp, Eigen::Index n_units, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd betas = draw_coefficients(dgp, n_units, rng);
  return simulate_choices(betas, dgp.n_alternatives(), rng);
}

void McConfig::validate() const {
  if (n_units < 1) throw InvalidArgument("n_units must be positive");
  if (replicates < 1) throw InvalidArgument("replicates must be positive");
  if (estimators.empty()) throw InvalidArgument("no estimators configured");
  if (static_cast<int>(domain.dim()) != dgp.dim()) {
    throw InvalidArgument("domain dimension does not match the data-generating process");
  }
  if (lattice_per_dim < 2) throw InvalidArgument("lattice_per_dim must be at least 2");
  if (truth_samples < 1) throw InvalidArgument("truth_samples must be positive");
  std::vector<std::string> labels;
  for (const auto& e : estimators) {
    if (std::find(labels.begin(), labels.end(), e.label) != labels.end()) {
      throw InvalidArgument("duplicate estimator label '" + e.label + "'");
    }
    labels.push_back(e.label);
  }
}

const EstimatorSummary& McReport::find(const std::string& label) const {
  for (const auto& e : estimators)
    if (e.label == label) return e;
  throw InvalidArgument("no estimator labelled '" + label + "' in report");
}

McReport run_experiment(const McConfig& config) {
  config.validate();
  const Lattice lattice = evaluation_lattice(config.domain, config.lattice_per_dim);
  const CdfEvaluation truth =
      true_mixture_lattice_cdf(config.dgp, lattice, config.truth_samples, config.truth_seed);

  const std::size_t E = config.estimators.size();
  const auto M = static_cast<std::size_t>(config.replicates);
  std::vector<std::vector<ReplicateOutcome>> outcomes(E, std::vector<ReplicateOutcome>(M));

  parallel_for(M, config.workers, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(config.seed, r);
    const ChoiceDataset data = simulate_dataset(config.dgp, config.n_units, seed);
    for (std::size_t e = 0; e < E; ++e) {
      ReplicateOutcome& out = outcomes[e][r];
      out.replicate = static_cast<int>(r);
      out.seed = seed;
      EstimatorConfig cfg = config.estimators[e].config;
      cfg.workers = 1;
      try {
        const FitResult fit_result = fit(data, config.domain, cfg);
        int clamped = 0;
        const auto dist = DiscreteDistribution::from_fit(fit_result, &clamped);
        out.ise = integrated_squared_error(lattice_cdf(dist, lattice), truth);
        out.n_parameters = fit_result.diagnostics.n_parameters;
        out.kkt_residual = fit_result.diagnostics.kkt_residual;
        out.exit_warnings = static_cast<int>(fit_result.diagnostics.warnings.size()) + (clamped > 0);
        if (fit_result.trace) {
          out.selected_step = fit_result.trace->selected_step;
          out.steps_run = static_cast<int>(fit_result.trace->steps.size()) - 1;
          for (const auto& st : fit_result.trace->steps) {
            out.cv_mse.push_back(st.oos_mse_mean);
            out.step_ssr.push_back(st.ssr);
            out.kkt_residual = std::max(out.kkt_residual, st.kkt_residual);
          }
        }
        out.ok = true;
      } catch (const std::exception& ex) {
        out.ok = false;
        out.error = ex.what();
      }
    }
  });

  McReport report;
  report.dgp = config.dgp.name();
  report.dim = config.dgp.dim();
  report.n_units = config.n_units;
  report.replicates = config.replicates;
  report.seed = config.seed;
  int ok_total = 0;
  for (std::size_t e = 0; e < E; ++e) {
    EstimatorSummary s;
    s.label = config.estimators[e].label;
    s.kind = config.estimators[e].config.kind;
    s.level = s.kind == EstimatorKind::FKRB ? 0 : config.estimators[e].config.level;
    s.q = s.kind == EstimatorKind::FKRB ? config.estimators[e].config.q : 0;
    double ise = 0.0;
    double params = 0.0;
    double steps = 0.0;
    for (const auto& o : outcomes[e]) {
      if (!o.ok) {
        ++s.failures;
        continue;
      }
      ++s.successes;
      ise += o.ise;
      params += o.n_parameters;
      steps += o.selected_step;
      s.max_kkt_residual = std::max(s.max_kkt_residual, o.kkt_residual);
    }
    if (s.successes > 0) {
      s.rmise = std::sqrt(ise / s.successes);
      s.mean_parameters = params / s.successes;
      s.mean_selected_step = steps / s.successes;
    } else {
      s.rmise = std::numeric_limits<double>::quiet_NaN();
    }
    ok_total += s.successes;
    s.replicates = std::move(outcomes[e]);
    report.estimators.push_back(std::move(s));
  }
  report.success_rate = static_cast<double>(ok_total) / static_cast<double>(E * M);
  return report;
}

void write_table_csv(std::ostream& out, const McReport& report) {
  // One row per (N, level) slot; FKRB entries share the row of the sparse
  // grid level they are listed against (q = 2^level - 1), as in the
  // published table.
  std::map<int, std::vector<const EstimatorSummary*>> rows;
  for (const auto& e : report.estimators) {
    int slot = e.level;
    if (e.kind == EstimatorKind::FKRB) slot = static_cast<int>(std::lround(std::log2(e.q + 1)));
    rows[slot].push_back(&e);
  }
  auto cell = [](const EstimatorSummary* e, bool rmise) -> std::string {
    if (!e) return "";
    return rmise ? format_double(e->rmise) : format_double(e->mean_parameters);
  };
  out << "N,q/l_S,FKRB_parameters,SG_parameters,ASG_parameters,FKRB_rmise,SG_rmise,ASG_rmise\n";
  for (const auto& [slot, list] : rows) {
    const EstimatorSummary* by_kind[3] = {nullptr, nullptr, nullptr};
    int q = (1 << slot) - 1;
    for (const auto* e : list) {
      const int k = e->kind == EstimatorKind::FKRB ? 0 : e->kind == EstimatorKind::SG ? 1 : 2;
      if (!by_kind[k]) by_kind[k] = e;
      if (e->kind == EstimatorKind::FKRB) q = e->q;
    }
    out << report.n_units << ',' << q << '/' << slot;
    for (bool rm : {false, true})
      for (int k = 0; k < 3; ++k) out << ',' << cell(by_kind[k], rm);
    out << '\n';
  }
}

}  // namespace sgrc
