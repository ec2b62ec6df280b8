#include "sgrc/results_io.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <type_traits>

#include "sgrc/error.hpp"

namespace sgrc {

namespace {

// Strict view of a JSON object: every key must be consumed before finish().
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(where_ + " must be a JSON object");
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }

  const json& at(const std::string& k) {
    seen_.insert(k);
    if (!j_.contains(k)) throw FormatError(where_ + ": missing key '" + k + "'");
    return j_.at(k);
  }

  template <class T>
  T get(const std::string& k) {
    return convert<T>(at(k), k);
  }

  template <class T>
  void opt(const std::string& k, T& target) {
    if (has(k)) target = convert<T>(j_.at(k), k);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw FormatError(where_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

  const std::string& where() const { return where_; }

  template <class T>
  T convert(const json& v, const std::string& k) const {
    const std::string ctx = where_ + "." + k;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw FormatError(ctx + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw FormatError(ctx + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw FormatError(ctx + " must be nonnegative");
        }
      }
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (v.is_null()) return std::numeric_limits<T>::quiet_NaN();
      if (!v.is_number()) throw FormatError(ctx + " must be a number");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw FormatError(ctx + " must be a string");
      return v.get<std::string>();
    } else {
      try {
        return v.get<T>();
      } catch (const json::exception& e) {
        throw FormatError(ctx + ": " + e.what());
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (j[k].is_null()) {
      v[static_cast<Eigen::Index>(k)] = std::numeric_limits<double>::quiet_NaN();
    } else if (j[k].is_number()) {
      v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
    } else {
      throw FormatError(where + " must hold numbers");
    }
  }
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_to_json(m.row(r).transpose()));
  return a;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where, Eigen::Index cols = -1) {
  if (!j.is_array()) throw FormatError(where + " must be an array of rows");
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = vector_from_json(j[r], where);
    if (r == 0) {
      if (cols < 0) cols = row.size();
      m.resize(static_cast<Eigen::Index>(j.size()), cols);
    }
    if (row.size() != cols) throw FormatError(where + " rows have inconsistent lengths");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  if (j.empty()) m.resize(0, std::max<Eigen::Index>(cols, 0));
  return m;
}

void read_estimator_config(Reader& rd, EstimatorConfig& c) {
  if (rd.has("estimator")) c.kind = parse_estimator_kind(rd.get<std::string>("estimator"));
  rd.opt("level", c.level);
  rd.opt("q", c.q);
  rd.opt("workers", c.workers);
  rd.opt("seed", c.refinement.cv_seed);
  if (rd.has("draws")) {
    Reader d(rd.at("draws"), rd.where() + ".draws");
    if (d.has("rule") && d.get<std::string>("rule") != "halton") {
      throw FormatError(d.where() + ".rule: only 'halton' is supported");
    }
    d.opt("r", c.draws.count);
    d.opt("burn_in", c.draws.burn_in);
    d.finish();
  }
  if (rd.has("solver")) {
    Reader s(rd.at("solver"), rd.where() + ".solver");
    s.opt("tol", c.solver.tol);
    s.opt("max_iter", c.solver.max_iter);
    s.opt("ridge", c.solver.ridge);
    s.finish();
  }
  if (rd.has("refinement")) {
    Reader f(rd.at("refinement"), rd.where() + ".refinement");
    auto& o = c.refinement;
    f.opt("steps", o.steps);
    f.opt("points_per_step", o.points_per_step);
    if (f.has("criterion")) o.criterion = parse_criterion(f.get<std::string>("criterion"));
    if (f.has("selection")) o.selection = parse_selection(f.get<std::string>("selection"));
    f.opt("k_folds", o.k_folds);
    f.opt("max_level", o.max_level);
    f.finish();
  }
  if (c.level < 1) throw InvalidArgument("level must be at least 1");
  if (c.q < 1) throw InvalidArgument("q must be at least 1");
  if (c.draws.count < 0) throw InvalidArgument("draws.r must be nonnegative");
  if (c.draws.burn_in < 0) throw InvalidArgument("draws.burn_in must be nonnegative");
  if (!(c.solver.tol > 0.0)) throw InvalidArgument("solver.tol must be positive");
  if (c.solver.max_iter < 1) throw InvalidArgument("solver.max_iter must be positive");
  if (c.solver.ridge < 0.0) throw InvalidArgument("solver.ridge must be nonnegative");
  if (c.refinement.steps < 0) throw InvalidArgument("refinement.steps must be nonnegative");
  if (c.refinement.points_per_step < 1) throw InvalidArgument("refinement.points_per_step must be positive");
  if (c.refinement.k_folds < 2) throw InvalidArgument("refinement.k_folds must be at least 2");
  if (c.refinement.max_level < 1) throw InvalidArgument("refinement.max_level must be positive");
  if (c.workers < 0) throw InvalidArgument("workers must be nonnegative");
}

json step_to_json(const RefinementStep& s) {
  return {{"step", s.step},
          {"refined", points_to_json(s.refined)},
          {"added", points_to_json(s.added)},
          {"ssr", s.ssr},
          {"in_sample_mse", s.in_sample_mse},
          {"oos_mse", s.oos_mse},
          {"oos_mse_mean", s.oos_mse_mean},
          {"oos_loglik", s.oos_loglik},
          {"oos_loglik_mean", s.oos_loglik_mean},
          {"aic", s.aic},
          {"n_parameters", s.n_parameters},
          {"kkt_residual", s.kkt_residual}};
}

RefinementStep step_from_json(const json& j) {
  Reader rd(j, "trace step");
  RefinementStep s;
  s.step = rd.get<int>("step");
  s.refined = points_from_json(rd.at("refined"));
  s.added = points_from_json(rd.at("added"));
  s.ssr = rd.get<double>("ssr");
  s.in_sample_mse = rd.get<double>("in_sample_mse");
  s.oos_mse = rd.get<std::vector<double>>("oos_mse");
  s.oos_mse_mean = rd.get<double>("oos_mse_mean");
  s.oos_loglik = rd.get<std::vector<double>>("oos_loglik");
  s.oos_loglik_mean = rd.get<double>("oos_loglik_mean");
  s.aic = rd.get<double>("aic");
  s.n_parameters = rd.get<int>("n_parameters");
  s.kkt_residual = rd.get<double>("kkt_residual");
  rd.finish();
  return s;
}

}  // namespace

void check_schema_version(const json& j) {
  if (!j.is_object()) throw FormatError("document must be a JSON object");
  if (!j.contains("schema_version")) throw FormatError("missing 'schema_version'");
  const auto& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw FormatError("unsupported schema_version " + v.dump() + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

json domain_to_json(const Domain& d) { return {{"lower", d.lower()}, {"upper", d.upper()}}; }

Domain domain_from_json(const json& j) {
  Reader rd(j, "domain");
  Domain d(rd.get<std::vector<double>>("lower"), rd.get<std::vector<double>>("upper"));
  rd.finish();
  return d;
}

json estimator_config_to_json(const EstimatorConfig& c) {
  return {{"estimator", to_string(c.kind)},
          {"level", c.level},
          {"q", c.q},
          {"workers", c.workers},
          {"seed", c.refinement.cv_seed},
          {"draws", {{"rule", "halton"}, {"r", c.draws.count}, {"burn_in", c.draws.burn_in}}},
          {"solver", {{"tol", c.solver.tol}, {"max_iter", c.solver.max_iter}, {"ridge", c.solver.ridge}}},
          {"refinement",
           {{"steps", c.refinement.steps},
            {"points_per_step", c.refinement.points_per_step},
            {"criterion", to_string(c.refinement.criterion)},
            {"selection", to_string(c.refinement.selection)},
            {"k_folds", c.refinement.k_folds},
            {"max_level", c.refinement.max_level}}}};
}

EstimatorConfig estimator_config_from_json(const json& j) {
  Reader rd(j, "estimator config");
  EstimatorConfig c;
  read_estimator_config(rd, c);
  rd.finish();
  return c;
}

json estimate_config_to_json(const EstimateConfig& c) {
  json j = estimator_config_to_json(c.estimator);
  j["schema_version"] = kSchemaVersion;
  if (c.domain) j["domain"] = domain_to_json(*c.domain);
  return j;
}

EstimateConfig estimate_config_from_json(const json& j) {
  check_schema_version(j);
  Reader rd(j, "estimate config");
  rd.has("schema_version");
  EstimateConfig c;
  read_estimator_config(rd, c.estimator);
  if (rd.has("domain")) c.domain = domain_from_json(rd.at("domain"));
  rd.finish();
  return c;
}

json dgp_to_json(const MixtureDgp& dgp) {
  json comps = json::array();
  for (const auto& c : dgp.components()) {
    comps.push_back({{"weight", c.weight}, {"mean", vector_to_json(c.mean)}, {"cov", matrix_to_json(c.cov)}});
  }
  return {{"name", dgp.name()}, {"n_alternatives", dgp.n_alternatives()}, {"components", comps}};
}

MixtureDgp dgp_from_json(const json& j) {
  Reader rd(j, "dgp");
  int J = 5;
  rd.opt("n_alternatives", J);
  if (rd.has("preset")) {
    const auto preset = rd.get<std::string>("preset");
    const int dim = rd.get<int>("dim");
    if (dim < 1) throw InvalidArgument("dgp.dim must be positive");
    rd.finish();
    if (preset == "two_normals") return MixtureDgp::two_normals(dim, J);
    if (preset == "four_normals") return MixtureDgp::four_normals(dim, J);
    throw InvalidArgument("unknown dgp preset '" + preset + "' (expected two_normals or four_normals)");
  }
  std::string name;
  rd.opt("name", name);
  std::vector<MixtureComponent> comps;
  const json& arr = rd.at("components");
  if (!arr.is_array()) throw FormatError("dgp.components must be an array");
  for (const auto& item : arr) {
    Reader c(item, "dgp component");
    MixtureComponent m;
    m.weight = c.get<double>("weight");
    m.mean = vector_from_json(c.at("mean"), "dgp component mean");
    m.cov = matrix_from_json(c.at("cov"), "dgp component cov", m.mean.size());
    c.finish();
    comps.push_back(std::move(m));
  }
  rd.finish();
  return MixtureDgp(std::move(comps), J, name);
}

json simulate_config_to_json(const SimulateConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"dgp", dgp_to_json(c.dgp)},
          {"n_units", c.n_units},
          {"seed", c.seed}};
}

SimulateConfig simulate_config_from_json(const json& j) {
  check_schema_version(j);
  Reader rd(j, "simulate config");
  rd.has("schema_version");
  SimulateConfig c;
  c.dgp = dgp_from_json(rd.at("dgp"));
  rd.opt("n_units", c.n_units);
  rd.opt("seed", c.seed);
  rd.finish();
  if (c.n_units < 1) throw InvalidArgument("n_units must be positive");
  return c;
}

json truth_to_json(const SimulateConfig& c) {
  json j = simulate_config_to_json(c);
  j["kind"] = "mixture_truth";
  return j;
}

SimulateConfig truth_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "mixture_truth") {
    throw FormatError("not a truth descriptor (expected kind 'mixture_truth')");
  }
  json copy = j;
  copy.erase("kind");
  return simulate_config_from_json(copy);
}

json mc_config_to_json(const McConfig& c) {
  json est = json::array();
  for (const auto& e : c.estimators) {
    json item = estimator_config_to_json(e.config);
    item["label"] = e.label;
    est.push_back(std::move(item));
  }
  return {{"schema_version", kSchemaVersion},
          {"dgp", dgp_to_json(c.dgp)},
          {"n_units", c.n_units},
          {"replicates", c.replicates},
          {"seed", c.seed},
          {"domain", domain_to_json(c.domain)},
          {"lattice_per_dim", c.lattice_per_dim},
          {"truth_samples", c.truth_samples},
          {"truth_seed", c.truth_seed},
          {"workers", c.workers},
          {"estimators", est}};
}

McConfig mc_config_from_json(const json& j) {
  check_schema_version(j);
  Reader rd(j, "replicate config");
  rd.has("schema_version");
  McConfig c;
  c.dgp = dgp_from_json(rd.at("dgp"));
  c.domain = Domain::cube(static_cast<std::size_t>(c.dgp.dim()));
  if (rd.has("domain")) c.domain = domain_from_json(rd.at("domain"));
  rd.opt("n_units", c.n_units);
  rd.opt("replicates", c.replicates);
  rd.opt("seed", c.seed);
  rd.opt("lattice_per_dim", c.lattice_per_dim);
  rd.opt("truth_samples", c.truth_samples);
  rd.opt("truth_seed", c.truth_seed);
  rd.opt("workers", c.workers);
  const json& arr = rd.at("estimators");
  if (!arr.is_array()) throw FormatError("estimators must be an array");
  for (const auto& item : arr) {
    Reader er(item, "estimator entry");
    EstimatorSpec spec;
    spec.label = er.get<std::string>("label");
    read_estimator_config(er, spec.config);
    er.finish();
    c.estimators.push_back(std::move(spec));
  }
  rd.finish();
  c.validate();
  return c;
}

json fit_to_json(const FitResult& fit) {
  const auto& d = fit.diagnostics;
  json j = {{"schema_version", kSchemaVersion},
            {"kind", to_string(fit.kind)},
            {"config", estimator_config_to_json(fit.config)},
            {"domain", domain_to_json(fit.domain)},
            {"n_parameters", d.n_parameters},
            {"support", matrix_to_json(fit.support)},
            {"alpha", vector_to_json(fit.alpha)},
            {"density_at_draws", vector_to_json(fit.density_at_draws)},
            {"fitted", vector_to_json(fit.fitted)},
            {"diagnostics",
             {{"ssr", d.ssr},
              {"kkt_residual", d.kkt_residual},
              {"max_ineq_violation", d.max_ineq_violation},
              {"eq_violation", d.eq_violation},
              {"iterations", d.iterations},
              {"n_parameters", d.n_parameters},
              {"ridge_used", d.ridge_used},
              {"warnings", d.warnings}}}};
  if (fit.grid) j["grid"] = grid_to_json(*fit.grid);
  if (fit.trace) {
    json steps = json::array();
    for (const auto& s : fit.trace->steps) steps.push_back(step_to_json(s));
    j["trace"] = {{"selected_step", fit.trace->selected_step},
                  {"exhausted", fit.trace->exhausted},
                  {"selection", to_string(fit.trace->selection)},
                  {"steps", steps}};
  }
  return j;
}

FitResult fit_from_json(const json& j) {
  check_schema_version(j);
  Reader rd(j, "fit");
  rd.has("schema_version");
  FitResult f;
  f.kind = parse_estimator_kind(rd.get<std::string>("kind"));
  f.config = estimator_config_from_json(rd.at("config"));
  f.domain = domain_from_json(rd.at("domain"));
  rd.at("n_parameters");
  const auto D = static_cast<Eigen::Index>(f.domain.dim());
  f.support = matrix_from_json(rd.at("support"), "fit.support", D);
  f.alpha = vector_from_json(rd.at("alpha"), "fit.alpha");
  f.density_at_draws = vector_from_json(rd.at("density_at_draws"), "fit.density_at_draws");
  f.fitted = vector_from_json(rd.at("fitted"), "fit.fitted");
  {
    Reader dr(rd.at("diagnostics"), "fit.diagnostics");
    auto& d = f.diagnostics;
    d.ssr = dr.get<double>("ssr");
    d.kkt_residual = dr.get<double>("kkt_residual");
    d.max_ineq_violation = dr.get<double>("max_ineq_violation");
    d.eq_violation = dr.get<double>("eq_violation");
    d.iterations = dr.get<int>("iterations");
    d.n_parameters = dr.get<int>("n_parameters");
    d.ridge_used = dr.get<double>("ridge_used");
    d.warnings = dr.get<std::vector<std::string>>("warnings");
    dr.finish();
  }
  if (rd.has("grid")) f.grid = grid_from_json(rd.at("grid"));
  if (rd.has("trace")) {
    Reader tr(rd.at("trace"), "fit.trace");
    RefinementTrace t;
    t.selected_step = tr.get<int>("selected_step");
    t.exhausted = tr.get<bool>("exhausted");
    t.selection = parse_selection(tr.get<std::string>("selection"));
    const json& steps = tr.at("steps");
    if (!steps.is_array()) throw FormatError("fit.trace.steps must be an array");
    for (const auto& s : steps) t.steps.push_back(step_from_json(s));
    tr.finish();
    f.trace = std::move(t);
  }
  rd.finish();
  if (f.support.rows() != f.density_at_draws.size()) {
    throw FormatError("fit support and density_at_draws differ in length");
  }
  if (f.grid && static_cast<Eigen::Index>(f.grid->size()) != f.alpha.size()) {
    throw FormatError("fit grid and alpha differ in length");
  }
  return f;
}

json report_to_json(const McReport& report) {
  json est = json::array();
  for (const auto& e : report.estimators) {
    json reps = json::array();
    for (const auto& o : e.replicates) {
      reps.push_back({{"replicate", o.replicate},
                      {"seed", o.seed},
                      {"ok", o.ok},
                      {"error", o.error},
                      {"ise", o.ise},
                      {"n_parameters", o.n_parameters},
                      {"selected_step", o.selected_step},
                      {"steps_run", o.steps_run},
                      {"kkt_residual", o.kkt_residual},
                      {"exit_warnings", o.exit_warnings},
                      {"cv_mse", o.cv_mse},
                      {"step_ssr", o.step_ssr}});
    }
    est.push_back({{"label", e.label},
                   {"kind", to_string(e.kind)},
                   {"level", e.level},
                   {"q", e.q},
                   {"successes", e.successes},
                   {"failures", e.failures},
                   {"rmise", e.rmise},
                   {"mean_parameters", e.mean_parameters},
                   {"mean_selected_step", e.mean_selected_step},
                   {"max_kkt_residual", e.max_kkt_residual},
                   {"replicates", reps}});
  }
  return {{"schema_version", kSchemaVersion},
          {"dgp", report.dgp},
          {"dim", report.dim},
          {"n_units", report.n_units},
          {"replicates", report.replicates},
          {"seed", report.seed},
          {"success_rate", report.success_rate},
          {"estimators", est}};
}

McReport report_from_json(const json& j) {
  check_schema_version(j);
  Reader rd(j, "report");
  rd.has("schema_version");
  McReport r;
  r.dgp = rd.get<std::string>("dgp");
  r.dim = rd.get<int>("dim");
  r.n_units = rd.get<Eigen::Index>("n_units");
  r.replicates = rd.get<int>("replicates");
  r.seed = rd.get<std::uint64_t>("seed");
  r.success_rate = rd.get<double>("success_rate");
  const json& arr = rd.at("estimators");
  if (!arr.is_array()) throw FormatError("report.estimators must be an array");
  for (const auto& item : arr) {
    Reader er(item, "report estimator");
    EstimatorSummary s;
    s.label = er.get<std::string>("label");
    s.kind = parse_estimator_kind(er.get<std::string>("kind"));
    s.level = er.get<int>("level");
    s.q = er.get<int>("q");
    s.successes = er.get<int>("successes");
    s.failures = er.get<int>("failures");
    s.rmise = er.get<double>("rmise");
    s.mean_parameters = er.get<double>("mean_parameters");
    s.mean_selected_step = er.get<double>("mean_selected_step");
    s.max_kkt_residual = er.get<double>("max_kkt_residual");
    const json& reps = er.at("replicates");
    if (!reps.is_array()) throw FormatError("report replicates must be an array");
    for (const auto& o : reps) {
      Reader orr(o, "replicate outcome");
      ReplicateOutcome x;
      x.replicate = orr.get<int>("replicate");
      x.seed = orr.get<std::uint64_t>("seed");
      x.ok = orr.get<bool>("ok");
      x.error = orr.get<std::string>("error");
      x.ise = orr.get<double>("ise");
      x.n_parameters = orr.get<int>("n_parameters");
      x.selected_step = orr.get<int>("selected_step");
      x.steps_run = orr.get<int>("steps_run");
      x.kkt_residual = orr.get<double>("kkt_residual");
      x.exit_warnings = orr.get<int>("exit_warnings");
      x.cv_mse = orr.get<std::vector<double>>("cv_mse");
      x.step_ssr = orr.get<std::vector<double>>("step_ssr");
      orr.finish();
      s.replicates.push_back(std::move(x));
    }
    er.finish();
    r.estimators.push_back(std::move(s));
  }
  rd.finish();
  return r;
}

}  // namespace sgrc
