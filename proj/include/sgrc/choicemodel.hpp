#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "sgrc/basis.hpp"
#include "sgrc/quasirand.hpp"

namespace sgrc {

/// N units choosing among J inside alternatives plus an implicit outside
/// option. Row n*J + j of `x` and `y` belongs to unit n, alternative j.
struct ChoiceDataset {
  Eigen::Index n_units = 0;
  Eigen::Index n_alternatives = 0;
  Eigen::MatrixXd x;  ///< (N*J) x D covariates
  Eigen::VectorXd y;  ///< N*J one-hot outcomes; a unit's block is all zero when the outside option wins
  std::vector<std::int64_t> unit_ids;

  ChoiceDataset() = default;
  /// Validates shapes and that each unit's outcome block sums to 0 or 1.
  ChoiceDataset(Eigen::Index units, Eigen::Index alternatives, Eigen::MatrixXd covariates,
                Eigen::VectorXd outcomes, std::vector<std::int64_t> ids = {});

  Eigen::Index dim() const { return x.cols(); }
  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index row(Eigen::Index unit, Eigen::Index alt) const { return unit * n_alternatives + alt; }

  /// Sub-dataset of the given units, in the given order.
  ChoiceDataset subset(const std::vector<Eigen::Index>& units) const;
};

/// Reads the unit_id, alt_id, chosen, x_1..x_D layout. Rows of a unit must be
/// contiguous and every unit must list the same number of alternatives.
ChoiceDataset read_choice_csv(std::istream& in);
void write_choice_csv(std::ostream& out, const ChoiceDataset& data);

/// Logit inside-alternative probabilities for one unit (x_n is J x D).
Eigen::VectorXd logit_kernel(const Eigen::Ref<const Eigen::MatrixXd>& x_n,
                             const Eigen::Ref<const Eigen::VectorXd>& beta);

/// Conditional choice probability g(x_{n,j}, beta) evaluated in bulk.
class ChoiceKernel {
 public:
  virtual ~ChoiceKernel() = default;
  /// x_block holds complete units (rows = units * J); betas is K x D.
  /// Fills out (rows x K) with g for every row and every beta.
  virtual void evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x_block, Eigen::Index J,
                        const Eigen::Ref<const Eigen::MatrixXd>& betas,
                        Eigen::MatrixXd& out) const = 0;
};

/// exp(x'b) / (1 + sum_k exp(x_k'b)) with a max shift for overflow safety.
class LogitKernel final : public ChoiceKernel {
 public:
  void evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x_block, Eigen::Index J,
                const Eigen::Ref<const Eigen::MatrixXd>& betas,
                Eigen::MatrixXd& out) const override;
};

const ChoiceKernel& default_kernel();

/// Sparse column of the simulated basis: draws in the support and phi there.
struct BasisColumnSupport {
  std::vector<Eigen::Index> draws;
  std::vector<double> values;
};

/// Evaluates phi_p at every draw and keeps the nonzero entries, ascending by draw.
BasisColumnSupport column_support(const GridPoint& p, const DrawSet& draws);

/// Simulated regressors Z[(n,j), b] = sum_r g(x_{n,j}, beta_r) phi_b(beta_r).
struct DesignMatrix {
  Eigen::MatrixXd Z;               ///< (N*J) x B
  Eigen::VectorXd column_mass;     ///< m_b = sum_r phi_b(beta_r)
  Eigen::MatrixXd phi_at_draws;    ///< R x B, phi_b(beta_r)
  std::vector<GridPoint> columns;  ///< basis point of each column

  Eigen::Index cols() const { return Z.cols(); }
};

struct AssemblyOptions {
  int workers = 1;
  Eigen::Index units_per_block = 64;
};

/// Throws IllConditionedError naming the first basis point without any draw in
/// its support.
DesignMatrix build_design_matrix(const ChoiceDataset& data, const DrawSet& draws,
                                 const BasisSet& basis, const AssemblyOptions& opts = {},
                                 const ChoiceKernel& kernel = default_kernel());

/// Appends columns for new_points. Old columns are copied, never recomputed, so
/// they match bit for bit; new columns equal a full rebuild.
DesignMatrix incremental_columns(const DesignMatrix& existing,
                                 const std::vector<GridPoint>& new_points, const DrawSet& draws,
                                 const ChoiceDataset& data, const AssemblyOptions& opts = {},
                                 const ChoiceKernel& kernel = default_kernel());

/// Columns g(x_{n,j}, point_k) for a fixed list of coefficient points (K x D).
Eigen::MatrixXd kernel_matrix(const ChoiceDataset& data, const Eigen::Ref<const Eigen::MatrixXd>& points,
                              const AssemblyOptions& opts = {},
                              const ChoiceKernel& kernel = default_kernel());

}  // namespace sgrc
