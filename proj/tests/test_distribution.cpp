#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sgrc/distribution.hpp"
#include "sgrc/error.hpp"

using namespace sgrc;

namespace {

double normal_cdf(double x, double mu, double sd) { return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0))); }

DiscreteDistribution random_distribution(Eigen::Index R, Eigen::Index D, std::mt19937_64& rng, bool on_lattice) {
  std::uniform_real_distribution<double> U(-4.5, 4.5);
  std::uniform_int_distribution<int> node(0, 9);
  Eigen::MatrixXd s(R, D);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s.data()[i] = on_lattice ? -4.0 + node(rng) * 8.0 / 9.0 : U(rng);
  Eigen::VectorXd w(R);
  std::uniform_real_distribution<double> W(0.0, 1.0);
  for (Eigen::Index r = 0; r < R; ++r) w[r] = W(rng);
  w /= w.sum();
  return DiscreteDistribution::from_weights(s, w);
}

}  // namespace

TEST_CASE("three-point example") {
  Eigen::MatrixXd s(3, 1);
  s << 0.2, 0.5, 0.8;
  const auto d = DiscreteDistribution::from_weights(s, Eigen::Vector3d(0.5, 0.3, 0.2));
  Eigen::MatrixXd q(4, 1);
  q << 0.6, 0.1, 0.8, 4.0;
  const auto F = joint_cdf(d, q);
  CHECK(F[0] == doctest::Approx(0.8));
  CHECK(F[1] == 0.0);
  CHECK(F[2] == doctest::Approx(1.0));  // ties count as dominated
  CHECK(F[3] == doctest::Approx(1.0));
  CHECK(mean(d)[0] == doctest::Approx(0.1 + 0.15 + 0.16));
}

TEST_CASE("weight clamping") {
  Eigen::MatrixXd s(3, 1);
  s << 0, 1, 2;
  int clamped = -1;
  const auto a = DiscreteDistribution::from_weights(s, Eigen::Vector3d(0.5, 0.5 + 1e-9, -1e-9), &clamped);
  CHECK(clamped == 1);
  CHECK(a.weights[2] == 0.0);
  CHECK(a.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
  const auto b = DiscreteDistribution::from_weights(s, Eigen::Vector3d(0.5, 0.5, -1e-17), &clamped);
  CHECK(clamped == 0);
  CHECK(b.weights[2] == 0.0);
  CHECK_THROWS_AS(DiscreteDistribution::from_weights(s, Eigen::Vector3d(0.6, 0.5, -1e-6)), InvalidArgument);
  CHECK_THROWS_AS(DiscreteDistribution::from_weights(s, Eigen::Vector2d(0.5, 0.5)), InvalidArgument);
}

TEST_CASE("moments") {
  Eigen::MatrixXd s(2, 1);
  s << 0.0, 1.0;
  CHECK(mean(DiscreteDistribution::from_weights(s, Eigen::Vector2d(0.25, 0.75)))[0] == doctest::Approx(0.75));
  s << -3.0, 3.0;
  CHECK(mean(DiscreteDistribution::from_weights(s, Eigen::Vector2d(0.5, 0.5)))[0] == doctest::Approx(0.0));
  Eigen::MatrixXd c(1, 2);
  c << 1.5, -0.5;
  const auto m = mean(DiscreteDistribution::from_weights(c, Eigen::VectorXd::Ones(1)));
  CHECK(m[0] == 1.5);
  CHECK(m[1] == -0.5);
}

TEST_CASE("evaluation lattice") {
  const auto L = evaluation_lattice(Domain::cube(2), 10);
  CHECK(L.size() == 100);
  CHECK(L.axes[0].front() == -4.0);
  CHECK(L.axes[0].back() == 4.0);
  CHECK(L.axes[0][1] == doctest::Approx(-4.0 + 8.0 / 9));
  const auto P = L.points();
  CHECK(P(0, 0) == -4.0);
  CHECK(P(1, 0) == -4.0);
  CHECK(P(1, 1) == doctest::Approx(-4.0 + 8.0 / 9));  // last dimension fastest
  CHECK(P(99, 0) == 4.0);
  CHECK(evaluation_lattice(Domain::cube(4), 10).size() == 10'000);
}

TEST_CASE("lattice CDF equals brute-force dominance counting") {
  std::mt19937_64 rng(3);
  for (Eigen::Index D = 1; D <= 4; ++D)
    for (bool on_lattice : {false, true}) {
      const auto dist = random_distribution(300, D, rng, on_lattice);
      const auto L = evaluation_lattice(Domain::cube(static_cast<std::size_t>(D)), D <= 2 ? 10 : 6);
      const auto fast = lattice_cdf(dist, L);
      const Eigen::MatrixXd P = L.points();
      CHECK(fast.eval_points == P);
      for (Eigen::Index e = 0; e < P.rows(); ++e) {
        double brute = 0.0;
        for (Eigen::Index r = 0; r < dist.size(); ++r)
          if ((dist.support.row(r).array() <= P.row(e).array()).all()) brute += dist.weights[r];
        CHECK(fast.values[e] == doctest::Approx(brute).epsilon(1e-12));
      }
      const auto direct = joint_cdf(dist, P, 3);
      CHECK((direct - fast.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("CDF is monotone and ends at one") {
  std::mt19937_64 rng(4);
  const auto dist = random_distribution(500, 3, rng, false);
  std::uniform_real_distribution<double> U(-4.0, 4.0), S(0.0, 2.0);
  Eigen::MatrixXd lo(200, 3), hi(200, 3);
  for (int k = 0; k < 200; ++k)
    for (int d = 0; d < 3; ++d) {
      lo(k, d) = U(rng);
      hi(k, d) = lo(k, d) + S(rng);
    }
  const auto Flo = joint_cdf(dist, lo);
  const auto Fhi = joint_cdf(dist, hi);
  CHECK(((Fhi - Flo).array() >= -1e-15).all());
  Eigen::MatrixXd top = Eigen::MatrixXd::Constant(1, 3, 4.5);
  CHECK(joint_cdf(dist, top)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(joint_cdf(dist, Eigen::MatrixXd::Constant(1, 3, -5.0))[0] == 0.0);
}

TEST_CASE("marginal CDF") {
  // Uniform weights on the symmetric support {-3.5, -2.5, ..., 3.5} x {0}.
  Eigen::MatrixXd s(8, 2);
  for (int k = 0; k < 8; ++k) s.row(k) << -3.5 + k, 0.0;
  const auto d = DiscreteDistribution::from_weights(s, Eigen::VectorXd::Constant(8, 0.125));
  const auto m = marginal_cdf(d, 0, {-5.0, 0.0, 5.0});
  CHECK(m[0] == 0.0);
  CHECK(std::abs(m[1] - 0.5) <= 0.125);
  CHECK(m[2] == doctest::Approx(1.0));
  std::mt19937_64 rng(5);
  const auto r = random_distribution(400, 3, rng, false);
  std::vector<double> grid;
  for (int k = 0; k <= 80; ++k) grid.push_back(-5.0 + k * 0.125);
  for (Eigen::Index dim = 0; dim < 3; ++dim) {
    const auto v = marginal_cdf(r, dim, grid);
    for (Eigen::Index k = 1; k < v.size(); ++k) CHECK(v[k] >= v[k - 1]);
    CHECK(v[v.size() - 1] == doctest::Approx(r.weights.sum()));
  }
  CHECK_THROWS_AS(marginal_cdf(r, 3, grid), InvalidArgument);
}

TEST_CASE("integrated squared error and RMISE") {
  CdfEvaluation truth{Eigen::MatrixXd::Zero(4, 1), Eigen::Vector4d(0.1, 0.2, 0.3, 0.4)};
  CdfEvaluation same = truth;
  CdfEvaluation off = truth;
  off.values.array() += 0.1;
  CHECK(integrated_squared_error(same, truth) == 0.0);
  CHECK(rmise({same}, truth) == 0.0);
  CHECK(rmise({off}, truth) == doctest::Approx(0.1));
  CHECK(rmise({same, off}, truth) == doctest::Approx(std::sqrt(0.005)));
  CHECK(rmise({off, same}, truth) == rmise({same, off}, truth));
  CdfEvaluation other{Eigen::MatrixXd::Ones(4, 1), truth.values};
  CHECK_THROWS_AS(integrated_squared_error(other, truth), InvalidArgument);
  CHECK_THROWS_AS(rmise({}, truth), InvalidArgument);
}

TEST_CASE("basis double sum equals the weight-based CDF") {
  const auto data = simulate_dataset(MixtureDgp::two_normals(2), 200, 8);
  EstimatorConfig c;
  c.level = 3;
  c.draws.count = 1500;
  const auto fit = fit_sg(data, Domain::cube(2), c);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(-4.0, 4.0);
  Eigen::MatrixXd q(100, 2);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = U(rng);
  const Eigen::VectorXd a = basis_cdf(fit, q);
  const Eigen::VectorXd b = joint_cdf(DiscreteDistribution::from_fit(fit), q);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Monte Carlo truth") {
  const Eigen::Index n = 400'000;
  const double se = std::sqrt(0.25 / static_cast<double>(n));

  SUBCASE("independent single component is a product of normal CDFs") {
    MixtureComponent m{1.0, Eigen::Vector2d(0.5, -1.0), Eigen::Vector2d(1.0, 0.25).asDiagonal()};
    const MixtureDgp dgp({m});
    Eigen::MatrixXd q(3, 2);
    q << 0.0, 0.0, 1.0, -1.0, -1.0, 0.5;
    const auto F = true_mixture_cdf(dgp, q, n);
    for (int k = 0; k < 3; ++k) {
      const double expect = normal_cdf(q(k, 0), 0.5, 1.0) * normal_cdf(q(k, 1), -1.0, 0.5);
      CHECK(std::abs(F[k] - expect) < 4 * se);
    }
  }
  SUBCASE("two-component symmetry") {
    const auto dgp = MixtureDgp::two_normals(2);
    auto comps = dgp.components();
    for (auto& c : comps) c.mean = -c.mean;
    const MixtureDgp flipped(comps);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 2);
    const double a = true_mixture_cdf(dgp, zero, n)[0];
    const double b = true_mixture_cdf(flipped, zero, n, 11)[0];
    CHECK(std::abs(a - b) < 2 * std::sqrt(2.0) * se);
  }
  SUBCASE("far corner is one and lattice matches pointwise") {
    const auto dgp = MixtureDgp::four_normals(2);
    const Eigen::MatrixXd far = Eigen::MatrixXd::Constant(1, 2, 50.0);
    CHECK(true_mixture_cdf(dgp, far, 10'000)[0] == 1.0);
    const auto L = evaluation_lattice(Domain::cube(2), 5);
    const auto lat = true_mixture_lattice_cdf(dgp, L, 50'000, 3);
    const auto pts = true_mixture_cdf(dgp, L.points(), 50'000, 3);
    CHECK((lat.values - pts).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("CSV output") {
  CdfEvaluation e{Eigen::MatrixXd::Zero(2, 2), Eigen::Vector2d(0.25, 0.5)};
  std::ostringstream os;
  write_cdf_csv(os, e);
  CHECK(os.str().rfind("beta_1,beta_2,F_hat\n", 0) == 0);
  std::ostringstream om;
  write_marginals_csv(om, {{-1.0, 1.0}, {0.0}}, {Eigen::Vector2d(0.2, 0.9), Eigen::VectorXd::Constant(1, 0.5)});
  const std::string s = om.str();
  CHECK(s.rfind("d,t,F_hat_d\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
