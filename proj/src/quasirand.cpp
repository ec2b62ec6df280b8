#include "sgrc/quasirand.hpp"

#include <ostream>
#include <string>

#include "sgrc/error.hpp"
#include "sgrc/serialize.hpp"

namespace sgrc {

double radical_inverse(std::uint64_t n, unsigned base) {
  if (base < 2) throw InvalidArgument("radical inverse base must be at least 2");
  const double inv = 1.0 / base;
  double scale = inv;
  double value = 0.0;
  while (n > 0) {
    value += static_cast<double>(n % base) * scale;
    n /= base;
    scale *= inv;
  }
  return value;
}

std::vector<unsigned> first_primes(int count) {
  static constexpr unsigned kPrimes[kMaxHaltonDim] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                                      31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
  if (count < 0 || count > kMaxHaltonDim) {
    throw InvalidArgument("Halton sequences support at most " + std::to_string(kMaxHaltonDim) +
                          " dimensions");
  }
  return {kPrimes, kPrimes + count};
}

DrawSet halton_draws(Eigen::Index count, const Domain& domain, int burn_in) {
  const int dim = static_cast<int>(domain.dim());
  if (dim > kMaxHaltonDim) {
    throw InvalidArgument("unsupported Halton dimension " + std::to_string(dim));
  }
  if (count < 1) throw InvalidArgument("draw count must be positive");
  if (burn_in < 0) throw InvalidArgument("burn-in must be nonnegative");
  const auto bases = first_primes(dim);
  Eigen::MatrixXd draws(count, dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    const auto n = static_cast<std::uint64_t>(burn_in + r + 1);
    for (int d = 0; d < dim; ++d) {
      draws(r, d) = domain.from_unit(radical_inverse(n, bases[d]), d);
    }
  }
  return DrawSet{std::move(draws), burn_in, domain};
}

void write_draws_csv(std::ostream& out, const DrawSet& draws) {
  for (Eigen::Index d = 0; d < draws.dim(); ++d) {
    out << (d ? "," : "") << "beta_" << (d + 1);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < draws.size(); ++r) {
    for (Eigen::Index d = 0; d < draws.dim(); ++d) {
      out << (d ? "," : "") << format_double(draws.draws(r, d));
    }
    out << '\n';
  }
}

}  // namespace sgrc
