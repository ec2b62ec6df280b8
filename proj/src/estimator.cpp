#include "sgrc/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sgrc/error.hpp"
#include "sgrc/rng.hpp"

namespace sgrc {

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::SG: return "sg";
    case EstimatorKind::ASG: return "asg";
    case EstimatorKind::FKRB: return "fkrb";
  }
  return "?";
}

std::string to_string(RefinementCriterion c) {
  return c == RefinementCriterion::Surplus ? "surplus" : "local_error";
}

std::string to_string(SelectionRule s) {
  switch (s) {
    case SelectionRule::CvMse: return "cv_mse";
    case SelectionRule::CvLogLik: return "cv_ll";
    case SelectionRule::Aic: return "aic";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& s) {
  if (s == "sg") return EstimatorKind::SG;
  if (s == "asg") return EstimatorKind::ASG;
  if (s == "fkrb") return EstimatorKind::FKRB;
  throw InvalidArgument("unknown estimator '" + s + "' (expected sg, asg or fkrb)");
}

RefinementCriterion parse_criterion(const std::string& s) {
  if (s == "surplus") return RefinementCriterion::Surplus;
  if (s == "local_error") return RefinementCriterion::LocalError;
  throw InvalidArgument("unknown refinement criterion '" + s + "'");
}

SelectionRule parse_selection(const std::string& s) {
  if (s == "cv_mse") return SelectionRule::CvMse;
  if (s == "cv_ll") return SelectionRule::CvLogLik;
  if (s == "aic") return SelectionRule::Aic;
  throw InvalidArgument("unknown selection rule '" + s + "'");
}

namespace {

void check_inputs(const ChoiceDataset& data, const Domain& domain) {
  if (static_cast<std::size_t>(data.dim()) != domain.dim()) {
    throw InvalidArgument("data dimension " + std::to_string(data.dim()) +
                          " does not match domain dimension " + std::to_string(domain.dim()));
  }
}

CLSProblem problem_for(const DesignMatrix& dm, const Eigen::VectorXd& y, Eigen::Index cols) {
  return CLSProblem{dm.Z.leftCols(cols), y, dm.phi_at_draws.leftCols(cols),
                    dm.column_mass.head(cols)};
}

std::vector<Eigen::Index> unit_rows(const std::vector<Eigen::Index>& units, Eigen::Index J) {
  std::vector<Eigen::Index> rows;
  rows.reserve(units.size() * static_cast<std::size_t>(J));
  for (auto u : units)
    for (Eigen::Index j = 0; j < J; ++j) rows.push_back(u * J + j);
  return rows;
}

FitDiagnostics diagnostics_of(const CLSSolution& sol, int n_parameters) {
  FitDiagnostics d;
  d.ssr = sol.ssr;
  d.kkt_residual = sol.kkt_residual;
  d.max_ineq_violation = sol.max_ineq_violation;
  d.eq_violation = sol.eq_violation;
  d.iterations = sol.iterations;
  d.n_parameters = n_parameters;
  d.ridge_used = sol.ridge_used;
  d.warnings = sol.warnings;
  return d;
}

FitResult sparse_fit_result(EstimatorKind kind, const EstimatorConfig& config, const Domain& domain,
                            const SparseGrid& grid, const DrawSet& draws, const DesignMatrix& dm,
                            const CLSSolution& sol) {
  const auto B = static_cast<Eigen::Index>(grid.size());
  FitResult r;
  r.kind = kind;
  r.config = config;
  r.domain = domain;
  r.grid = grid;
  r.support = draws.draws;
  r.alpha = sol.alpha;
  r.density_at_draws = dm.phi_at_draws.leftCols(B) * sol.alpha;
  r.fitted = dm.Z.leftCols(B) * sol.alpha;
  r.diagnostics = diagnostics_of(sol, static_cast<int>(B));
  return r;
}

}  // namespace

FitResult fit_sg(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config) {
  check_inputs(data, domain);
  const int dim = static_cast<int>(data.dim());
  const SparseGrid grid = build_classical_sparse_grid(
      dim, config.level, std::max(config.refinement.max_level, config.level));
  const DrawSet draws = halton_draws(config.draws.resolved(dim), domain, config.draws.burn_in);
  const DesignMatrix dm = build_design_matrix(data, draws, BasisSet(grid, domain),
                                              AssemblyOptions{config.workers, 64});
  const CLSSolution sol = solve_cls(problem_for(dm, data.y, dm.cols()), config.solver);
  return sparse_fit_result(EstimatorKind::SG, config, domain, grid, draws, dm, sol);
}

Eigen::MatrixXd fixed_grid_points(const Domain& domain, int q) {
  if (q < 1) throw InvalidArgument("fixed grid needs at least one point per dimension");
  const auto D = static_cast<Eigen::Index>(domain.dim());
  const double total = std::pow(static_cast<double>(q), static_cast<double>(D));
  if (total > 5e7) throw CapacityError("fixed grid too large");
  const auto K = static_cast<Eigen::Index>(total);
  Eigen::MatrixXd pts(K, D);
  std::vector<int> idx(static_cast<std::size_t>(D), 0);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index d = 0; d < D; ++d) {
      pts(k, d) = domain.lower()[d] + (idx[d] + 0.5) * domain.width(d) / q;
    }
    for (Eigen::Index d = D - 1; d >= 0; --d) {
      if (++idx[d] < q) break;
      idx[d] = 0;
    }
  }
  return pts;
}

FitResult fit_fkrb(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config) {
  check_inputs(data, domain);
  const double params = std::pow(static_cast<double>(config.q), static_cast<double>(data.dim()));
  if (params > static_cast<double>(data.rows())) {
    throw CapacityError("fixed grid with " + std::to_string(static_cast<long long>(params)) +
                        " points exceeds the " + std::to_string(data.rows()) + " regression rows");
  }
  const Eigen::MatrixXd pts = fixed_grid_points(domain, config.q);
  const Eigen::MatrixXd Z = kernel_matrix(data, pts, AssemblyOptions{config.workers, 64});
  const CLSSolution sol = solve_simplex_cls(Z, data.y, config.solver);
  FitResult r;
  r.kind = EstimatorKind::FKRB;
  r.config = config;
  r.domain = domain;
  r.support = pts;
  r.alpha = sol.alpha;
  r.density_at_draws = sol.alpha;
  r.fitted = Z * sol.alpha;
  r.diagnostics = diagnostics_of(sol, static_cast<int>(pts.rows()));
  return r;
}

std::vector<PointScore> criterion_surplus(const SparseGrid& grid, const Eigen::VectorXd& alpha) {
  if (alpha.size() != static_cast<Eigen::Index>(grid.size())) {
    throw InvalidArgument("coefficient count does not match grid size");
  }
  std::vector<PointScore> out;
  for (const auto& p : refinable_points(grid)) {
    out.push_back({p, std::abs(alpha[static_cast<Eigen::Index>(*grid.position(p))])});
  }
  return out;
}

std::vector<PointScore> criterion_local_error(const SparseGrid& grid, const Eigen::VectorXd& alpha,
                                              const Eigen::MatrixXd& Z,
                                              const Eigen::VectorXd& residuals) {
  if (alpha.size() != static_cast<Eigen::Index>(grid.size()) || Z.cols() < alpha.size() ||
      Z.rows() != residuals.size()) {
    throw InvalidArgument("local error criterion inputs have inconsistent shapes");
  }
  const Eigen::VectorXd eps2 = residuals.array().square();
  std::vector<PointScore> out;
  for (const auto& p : refinable_points(grid)) {
    const auto b = static_cast<Eigen::Index>(*grid.position(p));
    const double c = (alpha[b] * Z.col(b).array() * eps2.array()).abs().sum();
    out.push_back({p, c});
  }
  return out;
}

std::vector<GridPoint> select_top(std::vector<PointScore> scores, int count) {
  std::stable_sort(scores.begin(), scores.end(), [](const PointScore& a, const PointScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return canonical_less(a.point, b.point);
  });
  std::vector<GridPoint> out;
  for (int k = 0; k < count && k < static_cast<int>(scores.size()); ++k) out.push_back(scores[k].point);
  return out;
}

AicValue aic(double ssr_unscaled, Eigen::Index rows, int n_parameters) {
  if (rows < 1) throw InvalidArgument("AIC needs at least one observation");
  if (ssr_unscaled < 0.0) throw InvalidArgument("SSR must be nonnegative");
  const double n = static_cast<double>(rows);
  if (ssr_unscaled == 0.0) return {-1e300, true};
  return {n * std::log(ssr_unscaled / n) + 2.0 * n_parameters, false};
}

std::vector<int> fold_assignment(const std::vector<std::int64_t>& unit_ids, int k,
                                 std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation needs k >= 2");
  if (static_cast<std::size_t>(k) > unit_ids.size()) {
    throw InvalidArgument("more folds than observation units");
  }
  std::vector<std::size_t> order(unit_ids.size());
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](std::size_t i) { return derive_seed(seed, static_cast<std::uint64_t>(unit_ids[i])); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = key(a);
    const auto kb = key(b);
    if (ka != kb) return ka < kb;
    return unit_ids[a] < unit_ids[b];
  });
  std::vector<int> fold(unit_ids.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    fold[order[rank]] = static_cast<int>(rank % static_cast<std::size_t>(k));
  }
  return fold;
}

double unit_loglik(const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& p,
                   int& clamped) {
  double prob = 1.0 - p.sum();
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (y[j] != 0.0) prob = p[j];
  }
  if (prob <= 1e-12) {
    ++clamped;
    prob = 1e-12;
  }
  return std::log(prob);
}

CvResult kfold_cv(const ChoiceDataset& data, int k, std::uint64_t seed, const FoldPredictor& fit) {
  const auto folds = fold_assignment(data.unit_ids, k, seed);
  const Eigen::Index J = data.n_alternatives;
  CvResult out;
  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (Eigen::Index n = 0; n < data.n_units; ++n) (folds[n] == f ? test : train).push_back(n);
    const Eigen::VectorXd pred = fit(train, test);
    if (pred.size() != static_cast<Eigen::Index>(test.size()) * J) {
      throw InvalidArgument("fold predictor returned the wrong number of probabilities");
    }
    double sq = 0.0;
    double ll = 0.0;
    for (std::size_t t = 0; t < test.size(); ++t) {
      const auto yb = data.y.segment(test[t] * J, J);
      const auto pb = pred.segment(static_cast<Eigen::Index>(t) * J, J);
      sq += (yb - pb).squaredNorm();
      ll += unit_loglik(yb, pb, out.clamped);
    }
    out.fold_mse.push_back(sq / static_cast<double>(pred.size()));
    out.fold_loglik.push_back(ll);
  }
  out.mean_mse = std::accumulate(out.fold_mse.begin(), out.fold_mse.end(), 0.0) / k;
  out.mean_loglik = std::accumulate(out.fold_loglik.begin(), out.fold_loglik.end(), 0.0) / k;
  return out;
}

FitResult fit_asg(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config) {
  check_inputs(data, domain);
  const RefineOptions& ro = config.refinement;
  if (ro.steps < 0 || ro.points_per_step < 1) throw InvalidArgument("invalid refinement options");
  const int dim = static_cast<int>(data.dim());
  const DrawSet draws = halton_draws(config.draws.resolved(dim), domain, config.draws.burn_in);
  const AssemblyOptions assembly{config.workers, 64};

  std::vector<SparseGrid> grids{
      build_classical_sparse_grid(dim, config.level, std::max(ro.max_level, config.level))};
  DesignMatrix dm = build_design_matrix(data, draws, BasisSet(grids[0], domain), assembly);
  std::vector<CLSSolution> sols{solve_cls(problem_for(dm, data.y, dm.cols()), config.solver)};

  RefinementTrace trace;
  trace.selection = ro.selection;
  auto record = [&](int s, std::vector<GridPoint> refined, std::vector<GridPoint> added) {
    RefinementStep st;
    st.step = s;
    st.refined = std::move(refined);
    st.added = std::move(added);
    st.ssr = sols[s].ssr;
    st.in_sample_mse = 2.0 * sols[s].ssr;
    st.n_parameters = static_cast<int>(grids[s].size());
    st.kkt_residual = sols[s].kkt_residual;
    st.aic = aic(2.0 * sols[s].ssr * static_cast<double>(data.rows()), data.rows(), st.n_parameters).value;
    trace.steps.push_back(std::move(st));
  };
  record(0, {}, {});

  for (int s = 1; s <= ro.steps; ++s) {
    const SparseGrid& cur = grids.back();
    const auto B = static_cast<Eigen::Index>(cur.size());
    const Eigen::VectorXd residuals = data.y - dm.Z.leftCols(B) * sols.back().alpha;
    auto scores = ro.criterion == RefinementCriterion::Surplus
                      ? criterion_surplus(cur, sols.back().alpha)
                      : criterion_local_error(cur, sols.back().alpha, dm.Z, residuals);
    if (scores.empty()) {
      trace.exhausted = true;
      break;
    }
    auto targets = select_top(std::move(scores), ro.points_per_step);
    RefineResult next = refine(cur, targets);
    std::vector<GridPoint> added = next.report.children;
    added.insert(added.end(), next.report.ancestors.begin(), next.report.ancestors.end());
    try {
      dm = incremental_columns(dm, added, draws, data, assembly);
    } catch (const IllConditionedError&) {
      trace.exhausted = true;
      break;
    }
    grids.push_back(std::move(next.grid));
    sols.push_back(solve_cls(problem_for(dm, data.y, dm.cols()), config.solver));
    record(s, std::move(targets), std::move(added));
  }

  if (ro.selection != SelectionRule::Aic) {
    const Eigen::Index J = data.n_alternatives;
    for (auto& st : trace.steps) {
      const auto B = static_cast<Eigen::Index>(st.n_parameters);
      auto predictor = [&](const std::vector<Eigen::Index>& train,
                           const std::vector<Eigen::Index>& test) -> Eigen::VectorXd {
        const auto train_rows = unit_rows(train, J);
        const auto test_rows = unit_rows(test, J);
        CLSProblem p{dm.Z(train_rows, Eigen::seqN(0, B)), data.y(train_rows),
                     dm.phi_at_draws.leftCols(B), dm.column_mass.head(B)};
        const CLSSolution sol = solve_cls(p, config.solver);
        return dm.Z(test_rows, Eigen::seqN(0, B)) * sol.alpha;
      };
      const CvResult cv = kfold_cv(data, ro.k_folds, ro.cv_seed, predictor);
      st.oos_mse = cv.fold_mse;
      st.oos_mse_mean = cv.mean_mse;
      st.oos_loglik = cv.fold_loglik;
      st.oos_loglik_mean = cv.mean_loglik;
    }
  }

  auto criterion = [&](const RefinementStep& st) {
    switch (ro.selection) {
      case SelectionRule::CvMse: return st.oos_mse_mean;
      case SelectionRule::CvLogLik: return -st.oos_loglik_mean;
      case SelectionRule::Aic: return st.aic;
    }
    return st.aic;
  };
  int best = 0;
  for (std::size_t s = 1; s < trace.steps.size(); ++s) {
    if (criterion(trace.steps[s]) < criterion(trace.steps[best])) best = static_cast<int>(s);
  }
  trace.selected_step = best;

  FitResult r = sparse_fit_result(EstimatorKind::ASG, config, domain, grids[best], draws, dm, sols[best]);
  r.trace = std::move(trace);
  return r;
}

FitResult fit(const ChoiceDataset& data, const Domain& domain, const EstimatorConfig& config) {
  switch (config.kind) {
    case EstimatorKind::SG: return fit_sg(data, domain, config);
    case EstimatorKind::ASG: return fit_asg(data, domain, config);
    case EstimatorKind::FKRB: return fit_fkrb(data, domain, config);
  }
  throw InvalidArgument("unknown estimator kind");
}

}  // namespace sgrc
