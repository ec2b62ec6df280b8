#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sgrc/error.hpp"
#include "sgrc/simulate.hpp"

using namespace sgrc;

namespace {

Eigen::VectorXd choice_frequencies(const ChoiceDataset& d) {
  const Eigen::Index J = d.n_alternatives;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(J + 1);
  for (Eigen::Index n = 0; n < d.n_units; ++n) {
    const auto block = d.y.segment(n * J, J);
    Eigen::Index j = 0;
    if (block.maxCoeff(&j) > 0.5)
      f[j + 1] += 1;
    else
      f[0] += 1;
  }
  return f / static_cast<double>(d.n_units);
}

}  // namespace

TEST_CASE("preset DGP parameters") {
  const auto two = MixtureDgp::two_normals(3);
  REQUIRE(two.components().size() == 2);
  CHECK(two.components()[0].weight == 0.5);
  CHECK(two.components()[0].mean == Eigen::Vector3d::Constant(-1.5));
  CHECK(two.components()[1].mean == Eigen::Vector3d::Constant(1.5));
  CHECK(two.components()[0].cov(0, 0) == 0.4);
  CHECK(two.components()[0].cov(0, 2) == 0.1);
  CHECK(two.n_alternatives() == 5);
  const auto four = MixtureDgp::four_normals(2);
  REQUIRE(four.components().size() == 4);
  const double means[] = {-2.5, -0.8, 0.8, 2.5};
  for (int m = 0; m < 4; ++m) {
    CHECK(four.components()[m].weight == 0.25);
    CHECK(four.components()[m].mean[1] == means[m]);
    CHECK(four.components()[m].cov(0, 0) == doctest::Approx(0.1));
    CHECK(four.components()[m].cov(0, 1) == doctest::Approx(0.025));
  }
}

TEST_CASE("DGP validation") {
  MixtureComponent a{0.5, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()};
  MixtureComponent b{0.6, Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()};
  CHECK_THROWS_AS(MixtureDgp({a, b}), InvalidArgument);
  b.weight = 0.5;
  CHECK_NOTHROW(MixtureDgp({a, b}));
  b.cov << 1, 2, 2, 1;  // indefinite
  CHECK_THROWS_AS(MixtureDgp({a, b}), InvalidArgument);
  b.cov = Eigen::Matrix3d::Identity();
  CHECK_THROWS_AS(MixtureDgp({a, b}), InvalidArgument);
  CHECK_THROWS_AS(MixtureDgp({}), InvalidArgument);
}

TEST_CASE("zero covariance gives a point mass") {
  const auto dgp = MixtureDgp::point_mass(Eigen::Vector2d(0.3, -1.2));
  std::mt19937_64 rng(1);
  const auto b = draw_coefficients(dgp, 100, rng);
  for (Eigen::Index r = 0; r < 100; ++r) {
    CHECK(b(r, 0) == 0.3);
    CHECK(b(r, 1) == -1.2);
  }
}

TEST_CASE("sample moments") {
  std::mt19937_64 rng(2);
  const Eigen::Index n = 1'000'000;
  const auto two = MixtureDgp::two_normals(2);
  const Eigen::MatrixXd b = draw_coefficients(two, n, rng);
  // Mixture variance per dimension: 0.4 + 1.5^2.
  const double se = std::sqrt((0.4 + 2.25) / static_cast<double>(n));
  for (int d = 0; d < 2; ++d) CHECK(std::abs(b.col(d).mean()) < 3 * se);

  MixtureComponent first = two.components()[0];
  first.weight = 1.0;
  const MixtureDgp one({first});
  const Eigen::MatrixXd c = draw_coefficients(one, n, rng);
  const Eigen::RowVector2d mu = c.colwise().mean();
  const Eigen::MatrixXd centered = c.rowwise() - mu;
  const Eigen::Matrix2d S = centered.transpose() * centered / static_cast<double>(n - 1);
  // Var(s_ij) = (s_ij^2 + s_ii s_jj) / n for normal data.
  const double se_diag = std::sqrt(2 * 0.16 / static_cast<double>(n));
  const double se_off = std::sqrt((0.01 + 0.16) / static_cast<double>(n));
  CHECK(std::abs(S(0, 0) - 0.4) < 3 * se_diag);
  CHECK(std::abs(S(1, 1) - 0.4) < 3 * se_diag);
  CHECK(std::abs(S(0, 1) - 0.1) < 3 * se_off);
  CHECK(std::abs(mu[0] + 1.5) < 3 * std::sqrt(0.4 / static_cast<double>(n)));
}

TEST_CASE("domain coverage of the preset DGPs") {
  std::mt19937_64 rng(3);
  for (const auto& dgp : {MixtureDgp::two_normals(2), MixtureDgp::four_normals(2), MixtureDgp::two_normals(6),
                          MixtureDgp::four_normals(6)}) {
    const Eigen::MatrixXd b = draw_coefficients(dgp, 1'000'000, rng);
    const Eigen::Index inside = ((b.array().abs() <= 4.0).rowwise().all()).count();
    CHECK(static_cast<double>(inside) / 1e6 >= 0.998);
  }
}

TEST_CASE("zero coefficients give uniform choices") {
  std::mt19937_64 rng(4);
  const Eigen::Index N = 600'000;
  const auto d = simulate_choices(Eigen::MatrixXd::Zero(N, 2), 5, rng);
  const auto f = choice_frequencies(d);
  const double p = 1.0 / 6, se = std::sqrt(p * (1 - p) / static_cast<double>(N));
  for (int j = 0; j <= 5; ++j) CHECK(std::abs(f[j] - p) < 3 * se);
  CHECK(d.x.rows() == N * 5);
}

TEST_CASE("a dominant alternative is always chosen") {
  std::mt19937_64 rng(5);
  const Eigen::Index N = 2000, J = 3;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(N * J, 1);
  for (Eigen::Index n = 0; n < N; ++n) x(n * J + 1, 0) = 10.0;
  const auto d = simulate_choices(Eigen::MatrixXd::Ones(N, 1), x, J, rng);
  CHECK(choice_frequencies(d)[2] > 0.99);
}

TEST_CASE("Gumbel race matches logit probabilities") {
  std::mt19937_64 rng(6);
  const Eigen::Index N = 300'000, J = 3;
  Eigen::MatrixXd x1(J, 2);
  x1 << 0.5, -1.0, 1.2, 0.3, -0.7, 0.8;
  const Eigen::Vector2d beta(0.9, -0.4);
  const Eigen::MatrixXd x = x1.replicate(N, 1);
  const auto d = simulate_choices(beta.transpose().replicate(N, 1), x, J, rng);
  const auto f = choice_frequencies(d);
  const Eigen::VectorXd p = logit_kernel(x1, beta);
  const double p0 = 1.0 - p.sum();
  CHECK(std::abs(f[0] - p0) < 3 * std::sqrt(p0 * (1 - p0) / static_cast<double>(N)));
  for (int j = 0; j < J; ++j) CHECK(std::abs(f[j + 1] - p[j]) < 3 * std::sqrt(p[j] * (1 - p[j]) / static_cast<double>(N)));
}

TEST_CASE("datasets are reproducible from their seed") {
  const auto dgp = MixtureDgp::two_normals(2);
  const auto a = simulate_dataset(dgp, 50, 9);
  const auto b = simulate_dataset(dgp, 50, 9);
  const auto c = simulate_dataset(dgp, 50, 10);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.x != c.x);
  CHECK(a.n_alternatives == 5);
}

TEST_CASE("Monte Carlo runner") {
  McConfig cfg;
  cfg.dgp = MixtureDgp::two_normals(2);
  cfg.n_units = 150;
  cfg.replicates = 1;
  cfg.truth_samples = 100'000;
  EstimatorConfig sg;
  sg.level = 2;
  sg.draws.count = 1000;
  cfg.estimators = {{"SG_l2", sg}};

  SUBCASE("one replicate of SG level 2") {
    const auto r = run_experiment(cfg);
    const auto& s = r.find("SG_l2");
    CHECK(s.replicates.size() == 1);
    CHECK(s.successes == 1);
    CHECK(s.mean_parameters == 5.0);
    CHECK(std::isfinite(s.rmise));
    CHECK(s.rmise == doctest::Approx(std::sqrt(s.replicates[0].ise)));
    CHECK(r.success_rate == 1.0);
    CHECK_THROWS_AS(r.find("nope"), InvalidArgument);
  }

  SUBCASE("results do not depend on the worker count") {
    cfg.replicates = 4;
    EstimatorConfig asg = sg;
    asg.kind = EstimatorKind::ASG;
    asg.refinement.steps = 2;
    EstimatorConfig fk;
    fk.kind = EstimatorKind::FKRB;
    fk.q = 3;
    cfg.estimators = {{"SG", sg}, {"ASG", asg}, {"FKRB", fk}};
    const auto serial = run_experiment(cfg);
    cfg.workers = 3;
    const auto parallel = run_experiment(cfg);
    const auto again = run_experiment(cfg);
    REQUIRE(serial.estimators.size() == 3);
    for (std::size_t e = 0; e < 3; ++e) {
      CHECK(serial.estimators[e].rmise == parallel.estimators[e].rmise);
      CHECK(parallel.estimators[e].rmise == again.estimators[e].rmise);
      for (int k = 0; k < 4; ++k) {
        CHECK(serial.estimators[e].replicates[k].ise == parallel.estimators[e].replicates[k].ise);
        CHECK(serial.estimators[e].replicates[k].seed == parallel.estimators[e].replicates[k].seed);
      }
    }
    // Replicates see different data.
    CHECK(serial.estimators[0].replicates[0].ise != serial.estimators[0].replicates[1].ise);
    std::ostringstream os;
    write_table_csv(os, serial);
    CHECK(os.str().rfind("N,q/l_S,FKRB_parameters,SG_parameters,ASG_parameters,FKRB_rmise,SG_rmise,ASG_rmise", 0) == 0);
  }

  SUBCASE("failures are recorded") {
    EstimatorConfig bad;
    bad.kind = EstimatorKind::FKRB;
    bad.q = 40;  // 1600 > 150 * 5 rows
    cfg.estimators = {{"SG", sg}, {"FKRB_q40", bad}};
    const auto r = run_experiment(cfg);
    const auto& f = r.find("FKRB_q40");
    CHECK(f.failures == 1);
    CHECK(!f.replicates[0].ok);
    CHECK(!f.replicates[0].error.empty());
    CHECK(r.success_rate == doctest::Approx(0.5));
  }

  SUBCASE("config validation") {
    cfg.replicates = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg.replicates = 1;
    cfg.domain = Domain::cube(3);
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
}
