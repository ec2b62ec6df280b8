#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

#include "sgrc/basis.hpp"

namespace sgrc {

inline constexpr int kMaxHaltonDim = 20;
inline constexpr int kDefaultBurnIn = 20;
inline constexpr int kDrawsPerDim = 2000;

/// Digit reversal of n in the given prime base, in [0, 1).
double radical_inverse(std::uint64_t n, unsigned base);

/// The first `count` primes (count <= kMaxHaltonDim).
std::vector<unsigned> first_primes(int count);

struct DrawSet {
  Eigen::MatrixXd draws;  ///< R x D, coefficient space
  int burn_in = kDefaultBurnIn;
  Domain domain;

  Eigen::Index size() const { return draws.rows(); }
  Eigen::Index dim() const { return draws.cols(); }
};

/// Rows burn_in+1 ... burn_in+R of the Halton sequence in the first D prime
/// bases, mapped affinely into the domain.
DrawSet halton_draws(Eigen::Index count, const Domain& domain, int burn_in = kDefaultBurnIn);

/// CSV with header beta_1..beta_D and one row per draw.
void write_draws_csv(std::ostream& out, const DrawSet& draws);

}  // namespace sgrc
