// sgrc: simulate choice data, estimate random-coefficient distributions,
// evaluate fitted CDFs and run Monte Carlo replications.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 completed with
// warnings.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "sgrc/distribution.hpp"
#include "sgrc/error.hpp"
#include "sgrc/estimator.hpp"
#include "sgrc/parallel.hpp"
#include "sgrc/results_io.hpp"
#include "sgrc/serialize.hpp"
#include "sgrc/simulate.hpp"

namespace fs = std::filesystem;
using namespace sgrc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarnings = 2;

struct UsageError : Error {
  using Error::Error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  return out;
}

void write_json_file(const std::string& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(1) << '\n';
  if (!out) throw UsageError("failed writing '" + path + "'");
}

// "<two|four>-normals-d<D>", e.g. two-normals-d2 and four-normals-d4.
std::optional<json> dgp_preset(const std::string& name) {
  static const std::regex re("(two|four)-normals-d([0-9]+)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) return std::nullopt;
  return json{{"preset", m[1].str() + "_normals"}, {"dim", std::stoi(m[2].str())}};
}

json simulate_preset(const std::string& name) {
  auto dgp = dgp_preset(name);
  if (!dgp) throw UsageError("unknown simulate preset '" + name + "'");
  return {{"schema_version", kSchemaVersion}, {"dgp", *dgp}, {"n_units", 1000}, {"seed", 1}};
}

json replicate_preset(const std::string& name) {
  auto est = [](const std::string& label, const std::string& kind, const char* key, int v) {
    return json{{"label", label}, {"estimator", kind}, {key, v}};
  };
  if (name == "smoke") {
    return {{"schema_version", kSchemaVersion},
            {"dgp", {{"preset", "two_normals"}, {"dim", 2}}},
            {"n_units", 1000},
            {"replicates", 1},
            {"seed", 1},
            {"truth_samples", 200000},
            {"estimators", json::array({est("SG_l2", "sg", "level", 2)})}};
  }
  static const std::regex re("table2-d([0-9]+)-n([0-9]+)-(four-)?scaled");
  std::smatch m;
  if (std::regex_match(name, m, re)) {
    json estimators = json::array();
    for (int l = 2; l <= 4; ++l) {
      const int q = (1 << l) - 1;
      estimators.push_back(est("FKRB_q" + std::to_string(q), "fkrb", "q", q));
      estimators.push_back(est("SG_l" + std::to_string(l), "sg", "level", l));
      estimators.push_back(est("ASG_l" + std::to_string(l), "asg", "level", l));
    }
    return {{"schema_version", kSchemaVersion},
            {"dgp", {{"preset", m[3].matched ? "four_normals" : "two_normals"},
                     {"dim", std::stoi(m[1].str())}}},
            {"n_units", std::stoll(m[2].str())},
            {"replicates", 20},
            {"seed", 20220201},
            {"estimators", estimators}};
  }
  throw UsageError("unknown replicate preset '" + name + "'");
}

Eigen::MatrixXd read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  const std::size_t D = split_csv(line).size();
  std::vector<double> values;
  std::size_t rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    if (fields.size() != D) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(D) +
                        " fields");
    }
    try {
      for (auto f : fields) values.push_back(parse_double(f));
    } catch (const FormatError& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ++rows;
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(D));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t d = 0; d < D; ++d) pts(r, d) = values[r * D + d];
  return pts;
}

int resolve_workers(int w) { return w > 0 ? w : hardware_workers(); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string preset;
  std::string config;
  std::string out = "data.csv";
  std::string truth = "truth.json";
  std::optional<std::uint64_t> seed;
  std::optional<long long> n_units;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.preset.empty() == a.config.empty()) throw UsageError("give exactly one of --preset or --config");
  SimulateConfig cfg =
      simulate_config_from_json(a.config.empty() ? simulate_preset(a.preset) : read_json_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (a.n_units) {
    if (*a.n_units < 1) throw UsageError("--n-units must be positive");
    cfg.n_units = *a.n_units;
  }
  const ChoiceDataset data = simulate_dataset(cfg.dgp, cfg.n_units, cfg.seed);
  {
    auto out = open_output(a.out);
    write_choice_csv(out, data);
    if (!out) throw UsageError("failed writing '" + a.out + "'");
  }
  write_json_file(a.truth, truth_to_json(cfg));
  std::cerr << "wrote " << data.n_units << " units x " << data.n_alternatives
            << " alternatives to " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string config;
  std::string data;
  std::string out = "fit.json";
  std::string weights;
  std::string estimator;
  std::optional<int> level;
  std::optional<int> q;
  std::optional<int> steps;
  int workers = 0;
};

int cmd_estimate(const EstimateArgs& a) {
  EstimateConfig cfg;
  if (!a.config.empty()) cfg = estimate_config_from_json(read_json_file(a.config));
  EstimatorConfig& ec = cfg.estimator;
  if (!a.estimator.empty()) ec.kind = parse_estimator_kind(a.estimator);
  if (a.level) ec.level = *a.level;
  if (a.q) ec.q = *a.q;
  if (a.steps) ec.refinement.steps = *a.steps;
  ec.workers = resolve_workers(a.workers > 0 ? a.workers : ec.workers);
  // Let the solver hand back its last iterate; the exit code flags it.
  ec.solver.accept_best_iterate = true;

  std::ifstream in(a.data);
  if (!in) throw UsageError("cannot open '" + a.data + "'");
  ChoiceDataset data;
  try {
    data = read_choice_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(a.data + ": " + e.what());
  }
  const Domain domain = cfg.domain ? *cfg.domain : Domain::cube(static_cast<std::size_t>(data.dim()));

  FitResult result = fit(data, domain, ec);
  result.config.solver.accept_best_iterate = false;
  int clamped = 0;
  const auto dist = DiscreteDistribution::from_fit(result, &clamped);
  if (clamped > 0) {
    result.diagnostics.warnings.push_back(std::to_string(clamped) +
                                          " slightly negative weights clamped to zero");
  }
  write_json_file(a.out, fit_to_json(result));
  if (!a.weights.empty()) {
    auto out = open_output(a.weights);
    for (Eigen::Index d = 0; d < dist.dim(); ++d) out << "beta_" << d + 1 << ',';
    out << "weight\n";
    for (Eigen::Index r = 0; r < dist.size(); ++r) {
      for (Eigen::Index d = 0; d < dist.dim(); ++d) out << format_double(dist.support(r, d)) << ',';
      out << format_double(dist.weights[r]) << '\n';
    }
  }
  const auto& dg = result.diagnostics;
  std::cerr << to_string(result.kind) << ": " << dg.n_parameters << " parameters, objective "
            << dg.ssr << ", kkt residual " << dg.kkt_residual << '\n';
  for (const auto& w : dg.warnings) std::cerr << "warning: " << w << '\n';
  const bool kkt_clean = dg.kkt_residual <= ec.solver.tol;
  if (!kkt_clean) std::cerr << "warning: KKT residual above tolerance " << ec.solver.tol << '\n';
  return dg.warnings.empty() && kkt_clean ? kExitOk : kExitWarnings;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string fit;
  std::string truth;
  std::string points;
  std::string out_dir = ".";
  int lattice = 10;
  int marginal_points = 101;
  long long truth_samples = kTruthSamples;
  int workers = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (a.marginal_points < 2) throw UsageError("--marginal-points must be at least 2");
  const FitResult fit_result = fit_from_json(read_json_file(a.fit));
  int clamped = 0;
  const auto dist = DiscreteDistribution::from_fit(fit_result, &clamped);
  const Domain& domain = fit_result.domain;
  const int workers = resolve_workers(a.workers);

  CdfEvaluation cdf;
  std::optional<Lattice> lattice;
  if (!a.points.empty()) {
    cdf.eval_points = read_points_csv(a.points);
    if (cdf.eval_points.cols() != dist.dim()) {
      throw InvalidArgument("points file has " + std::to_string(cdf.eval_points.cols()) +
                            " columns but the fit has dimension " + std::to_string(dist.dim()));
    }
    cdf.values = joint_cdf(dist, cdf.eval_points, workers);
  } else {
    lattice = evaluation_lattice(domain, a.lattice);
    cdf = lattice_cdf(dist, *lattice);
  }

  fs::create_directories(a.out_dir);
  {
    auto out = open_output((fs::path(a.out_dir) / "cdf.csv").string());
    write_cdf_csv(out, cdf);
  }
  std::vector<std::vector<double>> grids;
  std::vector<Eigen::VectorXd> marginals;
  for (Eigen::Index d = 0; d < dist.dim(); ++d) {
    std::vector<double> g(static_cast<std::size_t>(a.marginal_points));
    for (int k = 0; k < a.marginal_points; ++k) {
      g[k] = domain.lower()[d] + domain.width(d) * k / (a.marginal_points - 1);
    }
    marginals.push_back(marginal_cdf(dist, d, g));
    grids.push_back(std::move(g));
  }
  {
    auto out = open_output((fs::path(a.out_dir) / "marginals.csv").string());
    write_marginals_csv(out, grids, marginals);
  }

  const Eigen::VectorXd mu = mean(dist);
  json summary = {{"schema_version", kSchemaVersion},
                  {"kind", to_string(fit_result.kind)},
                  {"dim", dist.dim()},
                  {"n_support", dist.size()},
                  {"n_parameters", fit_result.diagnostics.n_parameters},
                  {"total_mass", dist.weights.sum()},
                  {"clamped_weights", clamped},
                  {"mean", std::vector<double>(mu.data(), mu.data() + mu.size())},
                  {"n_eval_points", cdf.eval_points.rows()}};
  if (!a.truth.empty()) {
    const SimulateConfig truth = truth_from_json(read_json_file(a.truth));
    if (truth.dgp.dim() != dist.dim()) {
      throw InvalidArgument("truth dimension " + std::to_string(truth.dgp.dim()) +
                            " does not match fit dimension " + std::to_string(dist.dim()));
    }
    CdfEvaluation true_cdf;
    if (lattice) {
      true_cdf = true_mixture_lattice_cdf(truth.dgp, *lattice, a.truth_samples);
    } else {
      true_cdf = {cdf.eval_points, true_mixture_cdf(truth.dgp, cdf.eval_points, a.truth_samples)};
    }
    summary["ise"] = integrated_squared_error(cdf, true_cdf);
    summary["truth_samples"] = a.truth_samples;
  }
  write_json_file((fs::path(a.out_dir) / "summary.json").string(), summary);
  std::cerr << "evaluated " << cdf.eval_points.rows() << " points into " << a.out_dir << '\n';
  return clamped > 0 ? kExitWarnings : kExitOk;
}

// ---------------------------------------------------------------- replicate

struct ReplicateArgs {
  std::string preset;
  std::string config;
  std::string out = "report.json";
  std::string table = "table.csv";
  std::optional<int> replicates;
  int workers = 0;
};

int cmd_replicate(const ReplicateArgs& a) {
  if (a.preset.empty() == a.config.empty()) throw UsageError("give exactly one of --preset or --config");
  McConfig cfg =
      mc_config_from_json(a.config.empty() ? replicate_preset(a.preset) : read_json_file(a.config));
  if (a.replicates) {
    if (*a.replicates < 1) throw UsageError("--replicates must be positive");
    cfg.replicates = *a.replicates;
  }
  if (a.workers > 0 || cfg.workers <= 0) cfg.workers = resolve_workers(a.workers);
  const McReport report = run_experiment(cfg);
  write_json_file(a.out, report_to_json(report));
  {
    auto out = open_output(a.table);
    write_table_csv(out, report);
  }
  bool failures = false;
  for (const auto& e : report.estimators) {
    std::cerr << e.label << ": RMISE " << e.rmise << ", parameters " << e.mean_parameters << ", "
              << e.successes << "/" << e.successes + e.failures << " replicates\n";
    failures = failures || e.failures > 0;
  }
  return failures ? kExitWarnings : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse grid estimation of random coefficient distributions"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a choice data set from a mixture DGP");
  s->add_option("--preset", sim.preset, "two-normals-d<D> or four-normals-d<D>");
  s->add_option("--config", sim.config, "simulate config JSON");
  s->add_option("--out", sim.out, "data CSV")->capture_default_str();
  s->add_option("--truth", sim.truth, "truth descriptor JSON")->capture_default_str();
  s->add_option("--seed", sim.seed);
  s->add_option("--n-units", sim.n_units);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate the coefficient distribution from a data CSV");
  e->add_option("--config", est.config, "estimate config JSON");
  e->add_option("--data", est.data, "data CSV")->required();
  e->add_option("--out", est.out, "fit JSON")->capture_default_str();
  e->add_option("--weights", est.weights, "optional support/weight CSV");
  e->add_option("--estimator", est.estimator, "sg, asg or fkrb (overrides config)");
  e->add_option("--level", est.level);
  e->add_option("--q", est.q);
  e->add_option("--steps", est.steps);
  e->add_option("--workers", est.workers, "0 = all cores");

  EvaluateArgs ev;
  auto* v = app.add_subcommand("evaluate", "Evaluate a fitted distribution");
  v->add_option("--fit", ev.fit, "fit JSON")->required();
  v->add_option("--truth", ev.truth, "truth descriptor JSON");
  v->add_option("--points", ev.points, "CSV of evaluation points (header beta_1..beta_D)");
  v->add_option("--out-dir", ev.out_dir)->capture_default_str();
  v->add_option("--lattice", ev.lattice, "lattice points per dimension")->capture_default_str();
  v->add_option("--marginal-points", ev.marginal_points)->capture_default_str();
  v->add_option("--truth-samples", ev.truth_samples)->capture_default_str();
  v->add_option("--workers", ev.workers, "0 = all cores");

  ReplicateArgs rep;
  auto* r = app.add_subcommand("replicate", "Run a Monte Carlo experiment");
  r->add_option("--preset", rep.preset, "smoke or table2-d<D>-n<N>-[four-]scaled");
  r->add_option("--config", rep.config, "replicate config JSON");
  r->add_option("--out", rep.out, "report JSON")->capture_default_str();
  r->add_option("--table", rep.table, "summary CSV")->capture_default_str();
  r->add_option("--replicates", rep.replicates);
  r->add_option("--workers", rep.workers, "0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*e) return cmd_estimate(est);
    if (*v) return cmd_evaluate(ev);
    if (*r) return cmd_replicate(rep);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
