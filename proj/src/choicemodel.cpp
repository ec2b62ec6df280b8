#include "sgrc/choicemodel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "sgrc/error.hpp"
#include "sgrc/parallel.hpp"
#include "sgrc/serialize.hpp"

namespace sgrc {

ChoiceDataset::ChoiceDataset(Eigen::Index units, Eigen::Index alternatives,
                             Eigen::MatrixXd covariates, Eigen::VectorXd outcomes,
                             std::vector<std::int64_t> ids)
    : n_units(units),
      n_alternatives(alternatives),
      x(std::move(covariates)),
      y(std::move(outcomes)),
      unit_ids(std::move(ids)) {
  if (n_units < 1 || n_alternatives < 1) throw InvalidArgument("empty choice dataset");
  if (x.rows() != n_units * n_alternatives || y.size() != x.rows() || x.cols() < 1) {
    throw InvalidArgument("choice dataset shapes are inconsistent");
  }
  if (unit_ids.empty()) {
    unit_ids.resize(static_cast<std::size_t>(n_units));
    for (Eigen::Index n = 0; n < n_units; ++n) unit_ids[n] = n + 1;
  }
  if (static_cast<Eigen::Index>(unit_ids.size()) != n_units) {
    throw InvalidArgument("unit id count does not match unit count");
  }
  for (Eigen::Index n = 0; n < n_units; ++n) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n_alternatives; ++j) {
      const double v = y[row(n, j)];
      if (v != 0.0 && v != 1.0) throw InvalidArgument("outcomes must be 0 or 1");
      s += v;
    }
    if (s > 1.0) {
      throw InvalidArgument("unit " + std::to_string(unit_ids[n]) + " chose more than one alternative");
    }
  }
}

ChoiceDataset ChoiceDataset::subset(const std::vector<Eigen::Index>& units) const {
  const Eigen::Index J = n_alternatives;
  const auto m = static_cast<Eigen::Index>(units.size());
  Eigen::MatrixXd xs(m * J, x.cols());
  Eigen::VectorXd ys(m * J);
  std::vector<std::int64_t> ids(units.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index n = units[k];
    if (n < 0 || n >= n_units) throw InvalidArgument("unit index out of range");
    xs.middleRows(k * J, J) = x.middleRows(n * J, J);
    ys.segment(k * J, J) = y.segment(n * J, J);
    ids[k] = unit_ids[n];
  }
  return ChoiceDataset(m, J, std::move(xs), std::move(ys), std::move(ids));
}

ChoiceDataset read_choice_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("choice CSV is empty");
  const auto header = split_csv(line);
  if (header.size() < 4 || header[0] != "unit_id" || header[1] != "alt_id" ||
      header[2] != "chosen") {
    throw FormatError("line 1: expected header unit_id,alt_id,chosen,x_1,...");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[3 + d] != "x_" + std::to_string(d + 1)) {
      throw FormatError("line 1: expected column x_" + std::to_string(d + 1));
    }
  }

  std::vector<std::int64_t> ids;
  std::vector<Eigen::Index> alts_per_unit;
  std::vector<double> xs;
  std::vector<double> ys;
  std::int64_t prev_alt = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != header.size()) {
      throw FormatError(where + "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    try {
      const std::int64_t id = parse_integer(fields[0]);
      const std::int64_t alt = parse_integer(fields[1]);
      const long long chosen = parse_integer(fields[2]);
      if (chosen != 0 && chosen != 1) throw FormatError("chosen must be 0 or 1");
      if (ids.empty() || ids.back() != id) {
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
          throw FormatError("rows of unit " + std::to_string(id) + " are not contiguous");
        }
        ids.push_back(id);
        alts_per_unit.push_back(0);
      } else if (alt <= prev_alt) {
        throw FormatError("alt_id must increase within a unit");
      }
      prev_alt = alt;
      ++alts_per_unit.back();
      ys.push_back(static_cast<double>(chosen));
      for (std::size_t d = 0; d < dim; ++d) xs.push_back(parse_double(fields[3 + d]));
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
  }
  if (ids.empty()) throw FormatError("choice CSV has no data rows");
  const Eigen::Index J = alts_per_unit.front();
  for (std::size_t n = 0; n < ids.size(); ++n) {
    if (alts_per_unit[n] != J) {
      throw FormatError("unit " + std::to_string(ids[n]) + " lists " +
                        std::to_string(alts_per_unit[n]) + " alternatives, expected " +
                        std::to_string(J));
    }
  }
  const auto N = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd x(N * J, static_cast<Eigen::Index>(dim));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index d = 0; d < x.cols(); ++d) x(r, d) = xs[r * dim + d];
  }
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), N * J);
  try {
    return ChoiceDataset(N, J, std::move(x), std::move(y), std::move(ids));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

void write_choice_csv(std::ostream& out, const ChoiceDataset& data) {
  out << "unit_id,alt_id,chosen";
  for (Eigen::Index d = 0; d < data.dim(); ++d) out << ",x_" << (d + 1);
  out << '\n';
  for (Eigen::Index n = 0; n < data.n_units; ++n) {
    for (Eigen::Index j = 0; j < data.n_alternatives; ++j) {
      const Eigen::Index r = data.row(n, j);
      out << data.unit_ids[n] << ',' << (j + 1) << ',' << (data.y[r] != 0.0 ? 1 : 0);
      for (Eigen::Index d = 0; d < data.dim(); ++d) out << ',' << format_double(data.x(r, d));
      out << '\n';
    }
  }
}

Eigen::VectorXd logit_kernel(const Eigen::Ref<const Eigen::MatrixXd>& x_n,
                             const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (x_n.cols() != beta.size()) throw InvalidArgument("covariate/coefficient dimension mismatch");
  Eigen::VectorXd v = x_n * beta;
  const double shift = std::max(0.0, v.maxCoeff());
  double denom = std::exp(-shift);
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    v[j] = std::exp(v[j] - shift);
    denom += v[j];
  }
  return v / denom;
}

void LogitKernel::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x_block, Eigen::Index J,
                           const Eigen::Ref<const Eigen::MatrixXd>& betas,
                           Eigen::MatrixXd& out) const {
  out.noalias() = x_block * betas.transpose();
  const Eigen::Index units = x_block.rows() / J;
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    double* col = out.col(k).data();
    for (Eigen::Index u = 0; u < units; ++u) {
      double* v = col + u * J;
      double shift = 0.0;
      for (Eigen::Index j = 0; j < J; ++j) shift = std::max(shift, v[j]);
      double denom = std::exp(-shift);
      for (Eigen::Index j = 0; j < J; ++j) {
        v[j] = std::exp(v[j] - shift);
        denom += v[j];
      }
      const double inv = 1.0 / denom;
      for (Eigen::Index j = 0; j < J; ++j) v[j] *= inv;
    }
  }
}

const ChoiceKernel& default_kernel() {
  static const LogitKernel kernel;
  return kernel;
}

BasisColumnSupport column_support(const GridPoint& p, const DrawSet& draws) {
  if (static_cast<Eigen::Index>(p.dim()) != draws.dim()) {
    throw InvalidArgument("basis point and draws differ in dimension");
  }
  BasisColumnSupport s;
  Eigen::VectorXd u(draws.dim());
  for (Eigen::Index r = 0; r < draws.size(); ++r) {
    for (Eigen::Index d = 0; d < draws.dim(); ++d) u[d] = draws.domain.to_unit(draws.draws(r, d), d);
    const double v = eval_nd_unit(p, u);
    if (v != 0.0) {
      s.draws.push_back(r);
      s.values.push_back(v);
    }
  }
  return s;
}

namespace {

std::string describe(const GridPoint& p) {
  std::string s = "levels=(";
  for (std::size_t d = 0; d < p.dim(); ++d) s += (d ? "," : "") + std::to_string(p.levels[d]);
  s += ") indices=(";
  for (std::size_t d = 0; d < p.dim(); ++d) s += (d ? "," : "") + std::to_string(p.indices[d]);
  return s + ")";
}

// Fills Z (rows x cols.size()) for the given supports. Each entry is summed
// serially over its support draws in ascending order, independent of how the
// rows are partitioned.
void assemble_columns(const ChoiceDataset& data, const DrawSet& draws,
                      const std::vector<BasisColumnSupport>& supports, Eigen::MatrixXd& Z,
                      const AssemblyOptions& opts, const ChoiceKernel& kernel) {
  const Eigen::Index J = data.n_alternatives;
  Z.setZero(data.rows(), static_cast<Eigen::Index>(supports.size()));
  if (supports.empty()) return;

  std::vector<char> used(static_cast<std::size_t>(draws.size()), 0);
  for (const auto& s : supports)
    for (auto r : s.draws) used[r] = 1;
  std::vector<Eigen::Index> slot(used.size(), -1);
  std::vector<Eigen::Index> union_draws;
  for (std::size_t r = 0; r < used.size(); ++r) {
    if (used[r]) {
      slot[r] = static_cast<Eigen::Index>(union_draws.size());
      union_draws.push_back(static_cast<Eigen::Index>(r));
    }
  }
  Eigen::MatrixXd betas(static_cast<Eigen::Index>(union_draws.size()), draws.dim());
  for (std::size_t k = 0; k < union_draws.size(); ++k) betas.row(k) = draws.draws.row(union_draws[k]);

  const Eigen::Index block = std::max<Eigen::Index>(1, opts.units_per_block);
  const Eigen::Index n_blocks = (data.n_units + block - 1) / block;
  parallel_for(static_cast<std::size_t>(n_blocks), opts.workers, [&](std::size_t b) {
    const Eigen::Index first = static_cast<Eigen::Index>(b) * block;
    const Eigen::Index units = std::min(block, data.n_units - first);
    const Eigen::Index row0 = first * J;
    const Eigen::Index nrows = units * J;
    Eigen::MatrixXd g;
    kernel.evaluate(data.x.middleRows(row0, nrows), J, betas, g);
    for (std::size_t c = 0; c < supports.size(); ++c) {
      auto target = Z.col(static_cast<Eigen::Index>(c)).segment(row0, nrows);
      const auto& s = supports[c];
      for (std::size_t k = 0; k < s.draws.size(); ++k) {
        const double phi = s.values[k];
        const double* gk = g.col(slot[s.draws[k]]).data();
        for (Eigen::Index i = 0; i < nrows; ++i) target[i] += phi * gk[i];
      }
    }
  });
}

DesignMatrix extend(const DesignMatrix* existing, const std::vector<GridPoint>& new_points,
                    const DrawSet& draws, const ChoiceDataset& data, const AssemblyOptions& opts,
                    const ChoiceKernel& kernel) {
  if (data.dim() != draws.dim()) throw InvalidArgument("data and draws differ in dimension");
  std::vector<BasisColumnSupport> supports;
  supports.reserve(new_points.size());
  for (const auto& p : new_points) {
    if (existing && std::find(existing->columns.begin(), existing->columns.end(), p) !=
                        existing->columns.end()) {
      throw InvalidArgument("basis point " + describe(p) + " is already a design column");
    }
    if (std::count(new_points.begin(), new_points.end(), p) > 1) {
      throw InvalidArgument("basis point " + describe(p) + " listed twice");
    }
    supports.push_back(column_support(p, draws));
    if (supports.back().draws.empty()) {
      throw IllConditionedError("basis function " + describe(p) +
                                " has no simulation draw in its support");
    }
  }

  Eigen::MatrixXd Znew;
  assemble_columns(data, draws, supports, Znew, opts, kernel);

  const Eigen::Index old_cols = existing ? existing->cols() : 0;
  const auto add = static_cast<Eigen::Index>(new_points.size());
  DesignMatrix out;
  out.Z.resize(data.rows(), old_cols + add);
  out.column_mass.resize(old_cols + add);
  out.phi_at_draws.setZero(draws.size(), old_cols + add);
  if (existing) {
    if (existing->Z.rows() != data.rows() || existing->phi_at_draws.rows() != draws.size()) {
      throw InvalidArgument("existing design matrix does not match data/draws");
    }
    out.Z.leftCols(old_cols) = existing->Z;
    out.column_mass.head(old_cols) = existing->column_mass;
    out.phi_at_draws.leftCols(old_cols) = existing->phi_at_draws;
    out.columns = existing->columns;
  }
  out.Z.rightCols(add) = Znew;
  for (Eigen::Index c = 0; c < add; ++c) {
    const auto& s = supports[c];
    double mass = 0.0;
    for (std::size_t k = 0; k < s.draws.size(); ++k) {
      out.phi_at_draws(s.draws[k], old_cols + c) = s.values[k];
      mass += s.values[k];
    }
    out.column_mass[old_cols + c] = mass;
  }
  out.columns.insert(out.columns.end(), new_points.begin(), new_points.end());
  return out;
}

}  // namespace

DesignMatrix build_design_matrix(const ChoiceDataset& data, const DrawSet& draws,
                                 const BasisSet& basis, const AssemblyOptions& opts,
                                 const ChoiceKernel& kernel) {
  if (!(basis.domain == draws.domain)) throw InvalidArgument("basis and draws use different domains");
  return extend(nullptr, basis.grid.points(), draws, data, opts, kernel);
}

DesignMatrix incremental_columns(const DesignMatrix& existing,
                                 const std::vector<GridPoint>& new_points, const DrawSet& draws,
                                 const ChoiceDataset& data, const AssemblyOptions& opts,
                                 const ChoiceKernel& kernel) {
  return extend(&existing, new_points, draws, data, opts, kernel);
}

Eigen::MatrixXd kernel_matrix(const ChoiceDataset& data, const Eigen::Ref<const Eigen::MatrixXd>& points,
                              const AssemblyOptions& opts, const ChoiceKernel& kernel) {
  if (points.cols() != data.dim()) throw InvalidArgument("points and data differ in dimension");
  const Eigen::Index J = data.n_alternatives;
  Eigen::MatrixXd out(data.rows(), points.rows());
  const Eigen::Index block = std::max<Eigen::Index>(1, opts.units_per_block);
  const Eigen::Index n_blocks = (data.n_units + block - 1) / block;
  parallel_for(static_cast<std::size_t>(n_blocks), opts.workers, [&](std::size_t b) {
    const Eigen::Index first = static_cast<Eigen::Index>(b) * block;
    const Eigen::Index units = std::min(block, data.n_units - first);
    Eigen::MatrixXd g;
    kernel.evaluate(data.x.middleRows(first * J, units * J), J, points, g);
    out.middleRows(first * J, units * J) = g;
  });
  return out;
}

}  // namespace sgrc
