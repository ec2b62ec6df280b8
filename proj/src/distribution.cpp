#include "sgrc/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "sgrc/error.hpp"
#include "sgrc/parallel.hpp"
#include "sgrc/serialize.hpp"

namespace sgrc {

namespace {

constexpr double kClampTol = 1e-8;

bool dominated(const Eigen::Ref<const Eigen::RowVectorXd>& a,
               const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    if (a[d] > b[d]) return false;
  }
  return true;
}

// Cell mass on a lattice: a support point falls into the first lattice node
// that dominates it in every coordinate; points beyond the last node in any
// coordinate never count.
class LatticeHistogram {
 public:
  explicit LatticeHistogram(const Lattice& lattice) : lattice_(lattice) {
    const auto D = static_cast<std::size_t>(lattice.dim());
    stride_.assign(D, 1);
    for (std::size_t d = D; d-- > 1;) stride_[d - 1] = stride_[d] * lattice.axes[d].size();
    mass_.assign(static_cast<std::size_t>(lattice.size()), 0.0);
  }

  void add(const Eigen::Ref<const Eigen::RowVectorXd>& point, double w) {
    std::size_t cell = 0;
    for (std::size_t d = 0; d < stride_.size(); ++d) {
      const auto& axis = lattice_.axes[d];
      const auto k = static_cast<std::size_t>(
          std::lower_bound(axis.begin(), axis.end(), point[static_cast<Eigen::Index>(d)]) -
          axis.begin());
      if (k == axis.size()) return;
      cell += k * stride_[d];
    }
    mass_[cell] += w;
  }

  // In-place prefix sums along every axis turn cell mass into CDF values.
  Eigen::VectorXd cumulative() const {
    std::vector<double> f = mass_;
    for (std::size_t d = 0; d < stride_.size(); ++d) {
      const std::size_t n = lattice_.axes[d].size();
      const std::size_t s = stride_[d];
      for (std::size_t i = 0; i < f.size(); ++i) {
        if ((i / s) % n != 0) f[i] += f[i - s];
      }
    }
    return Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  }

 private:
  const Lattice& lattice_;
  std::vector<std::size_t> stride_;
  std::vector<double> mass_;
};

void check_dims(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension " + std::to_string(b) +
                          " does not match distribution dimension " + std::to_string(a));
  }
}

template <class Fn>
void for_each_mixture_chunk(const MixtureDgp& dgp, Eigen::Index samples, std::uint64_t seed,
                            Fn&& fn) {
  if (samples < 1) throw InvalidArgument("Monte Carlo truth needs at least one sample");
  std::mt19937_64 rng(seed);
  constexpr Eigen::Index kChunk = 65'536;
  for (Eigen::Index done = 0; done < samples; done += kChunk) {
    fn(dgp.sample(std::min(kChunk, samples - done), rng));
  }
}

}  // namespace

DiscreteDistribution DiscreteDistribution::from_weights(Eigen::MatrixXd support,
                                                        Eigen::VectorXd weights, int* clamped) {
  if (support.rows() != weights.size()) {
    throw InvalidArgument("support and weights have different lengths");
  }
  if (!weights.allFinite()) throw InvalidArgument("non-finite distribution weight");
  // Active inequality rows come back as exact zeros up to rounding; those are
  // zeroed silently and do not count as clamped.
  const double roundoff = 1e-12 * (weights.size() > 0 ? weights.cwiseAbs().maxCoeff() : 0.0);
  int count = 0;
  for (Eigen::Index r = 0; r < weights.size(); ++r) {
    if (weights[r] < 0.0 && weights[r] >= -roundoff) {
      weights[r] = 0.0;
      continue;
    }
    if (weights[r] < -kClampTol) {
      throw InvalidArgument("weight " + format_double(weights[r]) + " at support point " +
                            std::to_string(r) + " is below the clamping tolerance");
    }
    if (weights[r] < 0.0) {
      weights[r] = 0.0;
      ++count;
    }
  }
  const double total = weights.sum();
  if (!(total > 0.0)) throw InvalidArgument("distribution has no mass");
  if (count > 0) weights /= total;
  if (clamped) *clamped = count;
  return {std::move(support), std::move(weights)};
}

DiscreteDistribution DiscreteDistribution::from_fit(const FitResult& fit, int* clamped) {
  return from_weights(fit.support, fit.density_at_draws, clamped);
}

Eigen::Index Lattice::size() const {
  Eigen::Index n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= static_cast<Eigen::Index>(a.size());
  return n;
}

Eigen::MatrixXd Lattice::points() const {
  const Eigen::Index E = size();
  const Eigen::Index D = dim();
  Eigen::MatrixXd pts(E, D);
  std::vector<std::size_t> idx(static_cast<std::size_t>(D), 0);
  for (Eigen::Index e = 0; e < E; ++e) {
    for (Eigen::Index d = 0; d < D; ++d) pts(e, d) = axes[d][idx[d]];
    for (Eigen::Index d = D - 1; d >= 0; --d) {
      if (++idx[d] < axes[d].size()) break;
      idx[d] = 0;
    }
  }
  return pts;
}

Lattice evaluation_lattice(const Domain& domain, int per_dim) {
  if (per_dim < 2) throw InvalidArgument("evaluation lattice needs at least 2 points per dimension");
  Lattice lat;
  for (std::size_t d = 0; d < domain.dim(); ++d) {
    std::vector<double> axis(static_cast<std::size_t>(per_dim));
    for (int k = 0; k < per_dim; ++k) {
      axis[k] = domain.lower()[d] + domain.width(d) * k / (per_dim - 1);
    }
    axis.back() = domain.upper()[d];
    lat.axes.push_back(std::move(axis));
  }
  return lat;
}

Eigen::VectorXd joint_cdf(const DiscreteDistribution& dist, const Eigen::MatrixXd& points,
                          int workers) {
  check_dims(dist.dim(), points.cols(), "joint_cdf");
  Eigen::VectorXd out(points.rows());
  parallel_for(static_cast<std::size_t>(points.rows()), workers, [&](std::size_t e) {
    const auto q = points.row(static_cast<Eigen::Index>(e));
    double f = 0.0;
    for (Eigen::Index r = 0; r < dist.size(); ++r) {
      if (dominated(dist.support.row(r), q)) f += dist.weights[r];
    }
    out[static_cast<Eigen::Index>(e)] = f;
  });
  return out;
}

CdfEvaluation lattice_cdf(const DiscreteDistribution& dist, const Lattice& lattice) {
  check_dims(dist.dim(), lattice.dim(), "lattice_cdf");
  LatticeHistogram hist(lattice);
  for (Eigen::Index r = 0; r < dist.size(); ++r) hist.add(dist.support.row(r), dist.weights[r]);
  return {lattice.points(), hist.cumulative()};
}

Eigen::VectorXd basis_cdf(const FitResult& fit, const Eigen::MatrixXd& points) {
  if (!fit.grid) throw InvalidArgument("basis_cdf needs a sparse grid fit");
  const SparseGrid& grid = *fit.grid;
  check_dims(static_cast<Eigen::Index>(grid.dim()), points.cols(), "basis_cdf");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  for (std::size_t b = 0; b < grid.size(); ++b) {
    for (Eigen::Index e = 0; e < points.rows(); ++e) {
      double s = 0.0;
      for (Eigen::Index r = 0; r < fit.support.rows(); ++r) {
        if (dominated(fit.support.row(r), points.row(e))) {
          s += eval_nd(grid[b], fit.domain, fit.support.row(r).transpose());
        }
      }
      out[e] += fit.alpha[static_cast<Eigen::Index>(b)] * s;
    }
  }
  return out;
}

Eigen::VectorXd marginal_cdf(const DiscreteDistribution& dist, Eigen::Index d,
                             const std::vector<double>& grid) {
  if (d < 0 || d >= dist.dim()) {
    throw InvalidArgument("marginal dimension " + std::to_string(d) + " out of range");
  }
  std::vector<std::pair<double, double>> sorted(static_cast<std::size_t>(dist.size()));
  for (Eigen::Index r = 0; r < dist.size(); ++r) sorted[r] = {dist.support(r, d), dist.weights[r]};
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cum(sorted.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) cum[r] = acc += sorted[r].second;
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), grid[k],
                                     [](double t, const auto& s) { return t < s.first; });
    const auto n = static_cast<std::size_t>(it - sorted.begin());
    out[static_cast<Eigen::Index>(k)] = n == 0 ? 0.0 : cum[n - 1];
  }
  return out;
}

Eigen::VectorXd mean(const DiscreteDistribution& dist) {
  return dist.support.transpose() * dist.weights;
}

double integrated_squared_error(const CdfEvaluation& estimate, const CdfEvaluation& truth) {
  if (estimate.eval_points.rows() != truth.eval_points.rows() ||
      estimate.eval_points.cols() != truth.eval_points.cols() ||
      estimate.eval_points != truth.eval_points) {
    throw InvalidArgument("CDF evaluations are on different point sets");
  }
  if (estimate.values.size() != truth.values.size() || truth.values.size() == 0) {
    throw InvalidArgument("CDF evaluations have inconsistent value counts");
  }
  return (estimate.values - truth.values).squaredNorm() / static_cast<double>(truth.values.size());
}

double rmise(const std::vector<CdfEvaluation>& estimates, const CdfEvaluation& truth) {
  if (estimates.empty()) throw InvalidArgument("rmise needs at least one replicate");
  double s = 0.0;
  for (const auto& e : estimates) s += integrated_squared_error(e, truth);
  return std::sqrt(s / static_cast<double>(estimates.size()));
}

Eigen::VectorXd true_mixture_cdf(const MixtureDgp& dgp, const Eigen::MatrixXd& points,
                                 Eigen::Index samples, std::uint64_t seed) {
  check_dims(dgp.dim(), points.cols(), "true_mixture_cdf");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(points.rows());
  for_each_mixture_chunk(dgp, samples, seed, [&](const Eigen::MatrixXd& chunk) {
    for (Eigen::Index s = 0; s < chunk.rows(); ++s) {
      for (Eigen::Index e = 0; e < points.rows(); ++e) {
        if (dominated(chunk.row(s), points.row(e))) counts[e] += 1.0;
      }
    }
  });
  return counts / static_cast<double>(samples);
}

CdfEvaluation true_mixture_lattice_cdf(const MixtureDgp& dgp, const Lattice& lattice,
                                       Eigen::Index samples, std::uint64_t seed) {
  check_dims(dgp.dim(), lattice.dim(), "true_mixture_lattice_cdf");
  LatticeHistogram hist(lattice);
  for_each_mixture_chunk(dgp, samples, seed, [&](const Eigen::MatrixXd& chunk) {
    for (Eigen::Index s = 0; s < chunk.rows(); ++s) hist.add(chunk.row(s), 1.0);
  });
  return {lattice.points(), hist.cumulative() / static_cast<double>(samples)};
}

void write_cdf_csv(std::ostream& out, const CdfEvaluation& cdf) {
  for (Eigen::Index d = 0; d < cdf.eval_points.cols(); ++d) out << "beta_" << d + 1 << ',';
  out << "F_hat\n";
  for (Eigen::Index e = 0; e < cdf.eval_points.rows(); ++e) {
    for (Eigen::Index d = 0; d < cdf.eval_points.cols(); ++d) {
      out << format_double(cdf.eval_points(e, d)) << ',';
    }
    out << format_double(cdf.values[e]) << '\n';
  }
}

void write_marginals_csv(std::ostream& out, const std::vector<std::vector<double>>& grids,
                         const std::vector<Eigen::VectorXd>& values) {
  if (grids.size() != values.size()) throw InvalidArgument("one value vector per marginal grid");
  out << "d,t,F_hat_d\n";
  for (std::size_t d = 0; d < grids.size(); ++d) {
    if (static_cast<Eigen::Index>(grids[d].size()) != values[d].size()) {
      throw InvalidArgument("marginal grid and values differ in length");
    }
    for (std::size_t k = 0; k < grids[d].size(); ++k) {
      out << d + 1 << ',' << format_double(grids[d][k]) << ','
          << format_double(values[d][static_cast<Eigen::Index>(k)]) << '\n';
    }
  }
}

}  // namespace sgrc
