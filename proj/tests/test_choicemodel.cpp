#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sgrc/choicemodel.hpp"
#include "sgrc/error.hpp"

using namespace sgrc;

namespace {

class ConstantKernel final : public ChoiceKernel {
 public:
  explicit ConstantKernel(double v) : v_(v) {}
  void evaluate(const Eigen::Ref<const Eigen::MatrixXd>& x_block, Eigen::Index,
                const Eigen::Ref<const Eigen::MatrixXd>& betas, Eigen::MatrixXd& out) const override {
    out.setConstant(x_block.rows(), betas.rows(), v_);
  }

 private:
  double v_;
};

ChoiceDataset random_dataset(Eigen::Index N, Eigen::Index J, Eigen::Index D, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(N * J, D);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(N * J);
  std::uniform_int_distribution<Eigen::Index> pick(0, J);
  for (Eigen::Index n = 0; n < N; ++n) {
    const Eigen::Index j = pick(rng);
    if (j < J) y[n * J + j] = 1.0;
  }
  return ChoiceDataset(N, J, x, y);
}

DrawSet manual_draws(Eigen::MatrixXd draws, Domain dom) {
  DrawSet d{std::move(draws), 0, std::move(dom)};
  return d;
}

}  // namespace

TEST_CASE("logit kernel values") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, -1.0;
  Eigen::VectorXd b(1);
  b << 0.0;
  const auto p0 = logit_kernel(x, b);
  CHECK(p0[0] == doctest::Approx(1.0 / 3));
  CHECK(p0[1] == doctest::Approx(1.0 / 3));
  b << std::log(2.0);
  const auto p1 = logit_kernel(x, b);
  // exp(x b) = 2 and 1/2: probabilities 2/3.5 and 0.5/3.5
  CHECK(p1[0] == doctest::Approx(2.0 / 3.5));
  CHECK(p1[1] == doctest::Approx(0.5 / 3.5));
  b << 800.0;  // overflow guard
  const auto p2 = logit_kernel(x, b);
  CHECK(std::isfinite(p2[0]));
  CHECK(p2[0] == doctest::Approx(1.0));
  CHECK(p2[1] == doctest::Approx(0.0));
  b << -800.0;
  const auto p3 = logit_kernel(x, b);
  CHECK(p3[0] == doctest::Approx(0.0));
  CHECK(p3[1] == doctest::Approx(1.0));
}

TEST_CASE("bulk kernel matches the single-unit kernel") {
  const auto data = random_dataset(7, 3, 2, 1);
  Eigen::MatrixXd betas(4, 2);
  betas << 0, 0, 1, -1, 3, 2, -4, 4;
  Eigen::MatrixXd out;
  LogitKernel().evaluate(data.x, 3, betas, out);
  for (Eigen::Index n = 0; n < 7; ++n)
    for (Eigen::Index k = 0; k < 4; ++k) {
      const auto p = logit_kernel(data.x.middleRows(n * 3, 3), betas.row(k).transpose());
      for (Eigen::Index j = 0; j < 3; ++j) CHECK(out(n * 3 + j, k) == doctest::Approx(p[j]).epsilon(1e-13));
    }
}

TEST_CASE("hand-computed design entry") {
  // Draws at beta = 0 and beta = 2 on [-4, 4]; the root hat is 1 and 0.5 there.
  const Domain dom = Domain::cube(1);
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 2.0;
  const auto draws = manual_draws(pts, dom);
  ChoiceDataset data(1, 1, Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1));
  const BasisSet basis(SparseGrid(1, {GridPoint({1}, {1})}, 1), dom);
  const auto dm = build_design_matrix(data, draws, basis, {}, ConstantKernel(0.3));
  CHECK(dm.Z(0, 0) == doctest::Approx(0.45));
  CHECK(dm.column_mass[0] == doctest::Approx(1.5));
  CHECK(dm.phi_at_draws(0, 0) == 1.0);
  CHECK(dm.phi_at_draws(1, 0) == 0.5);
}

TEST_CASE("unit kernel reproduces the column mass") {
  const Domain dom = Domain::cube(2);
  const auto draws = halton_draws(4000, dom);
  const auto data = random_dataset(5, 2, 2, 4);
  const BasisSet basis(build_classical_sparse_grid(2, 3), dom);
  const auto dm = build_design_matrix(data, draws, basis, {}, ConstantKernel(1.0));
  for (Eigen::Index b = 0; b < dm.cols(); ++b)
    for (Eigen::Index r = 0; r < dm.Z.rows(); ++r)
      CHECK(dm.Z(r, b) == doctest::Approx(dm.column_mass[b]).epsilon(1e-12));
  CHECK(dm.phi_at_draws.colwise().sum().transpose().isApprox(dm.column_mass, 1e-12));
}

TEST_CASE("design bounds") {
  const Domain dom = Domain::cube(2);
  const auto draws = halton_draws(4000, dom);
  const auto data = random_dataset(40, 3, 2, 5);
  const BasisSet basis(build_classical_sparse_grid(2, 4), dom);
  const auto dm = build_design_matrix(data, draws, basis);
  CHECK(dm.Z.minCoeff() >= 0.0);
  for (Eigen::Index n = 0; n < 40; ++n) {
    const Eigen::VectorXd s = dm.Z.middleRows(n * 3, 3).colwise().sum().transpose();
    CHECK(((s - dm.column_mass).array() <= 1e-9).all());
  }
}

TEST_CASE("column support") {
  const Domain dom = Domain::cube(1);
  Eigen::MatrixXd pts(4, 1);
  pts << -3.0, -1.0, 1.0, 3.0;
  const auto draws = manual_draws(pts, dom);
  const auto s = column_support(GridPoint({2}, {1}), draws);  // support (-4, 0)
  CHECK(s.draws == std::vector<Eigen::Index>{0, 1});
  CHECK(s.values[0] == doctest::Approx(0.5));
  CHECK(s.values[1] == doctest::Approx(0.5));
}

TEST_CASE("a basis function without draws is reported") {
  const Domain dom = Domain::cube(1);
  Eigen::MatrixXd pts(2, 1);
  pts << -3.0, 0.5;
  const auto draws = manual_draws(pts, dom);
  ChoiceDataset data(1, 1, Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1));
  const BasisSet basis(build_classical_sparse_grid(1, 2), dom);  // (2,3) covers (0, 4)
  CHECK_NOTHROW(build_design_matrix(data, draws, basis));
  const BasisSet fine(build_classical_sparse_grid(1, 3), dom);
  CHECK_THROWS_AS(build_design_matrix(data, draws, fine), IllConditionedError);
}

TEST_CASE("incremental columns equal a rebuild") {
  const Domain dom = Domain::cube(2);
  const auto draws = halton_draws(4000, dom);
  const auto data = random_dataset(30, 3, 2, 6);
  const auto g = build_classical_sparse_grid(2, 3);
  const auto dm = build_design_matrix(data, draws, BasisSet(g, dom));
  const auto r = refine(g, {GridPoint({2, 2}, {1, 3})});
  std::vector<GridPoint> added = r.report.children;
  added.insert(added.end(), r.report.ancestors.begin(), r.report.ancestors.end());
  const auto inc = incremental_columns(dm, added, draws, data);
  const auto full = build_design_matrix(data, draws, BasisSet(r.grid, dom));
  REQUIRE(inc.cols() == full.cols());
  CHECK(inc.Z.leftCols(dm.cols()) == dm.Z);
  CHECK((inc.Z - full.Z).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((inc.column_mass - full.column_mass).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(inc.columns == full.columns);
  CHECK_THROWS_AS(incremental_columns(dm, {g[0]}, draws, data), InvalidArgument);
}

TEST_CASE("assembly is independent of worker count and block size") {
  const Domain dom = Domain::cube(3);
  const auto draws = halton_draws(6000, dom);
  const auto data = random_dataset(50, 2, 3, 8);
  const BasisSet basis(build_classical_sparse_grid(3, 3), dom);
  const auto a = build_design_matrix(data, draws, basis, {1, 64});
  const auto b = build_design_matrix(data, draws, basis, {3, 7});
  CHECK(a.Z == b.Z);
}

TEST_CASE("kernel matrix") {
  const auto data = random_dataset(4, 2, 2, 9);
  Eigen::MatrixXd pts(2, 2);
  pts << 0.5, -0.5, 1.0, 2.0;
  const auto K = kernel_matrix(data, pts);
  for (Eigen::Index n = 0; n < 4; ++n)
    for (Eigen::Index k = 0; k < 2; ++k) {
      const auto p = logit_kernel(data.x.middleRows(n * 2, 2), pts.row(k).transpose());
      CHECK(K(n * 2, k) == doctest::Approx(p[0]));
      CHECK(K(n * 2 + 1, k) == doctest::Approx(p[1]));
    }
}

TEST_CASE("dataset validation and subsets") {
  CHECK_THROWS_AS(ChoiceDataset(2, 2, Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(4)), InvalidArgument);
  Eigen::VectorXd two = Eigen::VectorXd::Zero(2);
  two << 1, 1;
  CHECK_THROWS_AS(ChoiceDataset(1, 2, Eigen::MatrixXd::Zero(2, 1), two), InvalidArgument);
  const auto data = random_dataset(5, 2, 1, 10);
  const auto sub = data.subset({3, 1});
  CHECK(sub.n_units == 2);
  CHECK(sub.unit_ids == std::vector<std::int64_t>{data.unit_ids[3], data.unit_ids[1]});
  CHECK(sub.x.row(0) == data.x.row(6));
  CHECK(sub.y[3] == data.y[3]);
}

TEST_CASE("CSV round trip is exact") {
  const auto data = random_dataset(6, 3, 2, 11);
  std::ostringstream os;
  write_choice_csv(os, data);
  std::istringstream is(os.str());
  const auto back = read_choice_csv(is);
  CHECK(back.n_units == 6);
  CHECK(back.n_alternatives == 3);
  CHECK(back.x == data.x);
  CHECK(back.y == data.y);
  CHECK(back.unit_ids == data.unit_ids);
}

TEST_CASE("CSV errors carry line numbers") {
  auto error_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      read_choice_csv(is);
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("") != "");
  CHECK(error_of("a,b,c,d\n").find("line 1") != std::string::npos);
  CHECK(error_of("unit_id,alt_id,chosen,x_1\n1,1,0,0.5\n1,2,0\n").find("line 3") != std::string::npos);
  CHECK(error_of("unit_id,alt_id,chosen,x_1\n1,1,2,0.5\n").find("line 2") != std::string::npos);
  CHECK(error_of("unit_id,alt_id,chosen,x_1\n1,1,0,abc\n").find("line 2") != std::string::npos);
  CHECK(error_of("unit_id,alt_id,chosen,x_1\n1,1,0,1\n2,1,0,1\n1,2,0,1\n").find("contiguous") !=
        std::string::npos);
  CHECK(error_of("unit_id,alt_id,chosen,x_1\n1,1,0,1\n1,2,0,1\n2,1,0,1\n").find("alternatives") !=
        std::string::npos);
  CHECK(error_of("unit_id,alt_id,chosen,x_1\n1,1,1,1\n1,2,1,1\n") != "");
}
