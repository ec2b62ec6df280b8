#pragma once

// JSON forms of configurations and results. Every top-level document carries
// "schema_version": 1; readers reject unknown keys and other versions.

#include <optional>

#include "sgrc/estimator.hpp"
#include "sgrc/serialize.hpp"
#include "sgrc/simulate.hpp"

namespace sgrc {

/// Throws FormatError unless j is an object with the supported schema_version.
void check_schema_version(const json& j);

json domain_to_json(const Domain& d);
Domain domain_from_json(const json& j);

/// Estimator settings as they appear in an estimate config (without domain
/// and schema_version). Missing keys keep their defaults.
json estimator_config_to_json(const EstimatorConfig& c);
EstimatorConfig estimator_config_from_json(const json& j);

struct EstimateConfig {
  EstimatorConfig estimator;
  std::optional<Domain> domain;  ///< defaults to [-4, 4]^D for the data at hand
};

json estimate_config_to_json(const EstimateConfig& c);
EstimateConfig estimate_config_from_json(const json& j);

/// Either {"preset": "two_normals" | "four_normals", "dim": D, "n_alternatives": J}
/// or {"components": [{weight, mean, cov}], "n_alternatives": J, "name": ...}.
json dgp_to_json(const MixtureDgp& dgp);
MixtureDgp dgp_from_json(const json& j);

struct SimulateConfig {
  MixtureDgp dgp = MixtureDgp::two_normals(2);
  Eigen::Index n_units = 1000;
  std::uint64_t seed = 1;
};

json simulate_config_to_json(const SimulateConfig& c);
SimulateConfig simulate_config_from_json(const json& j);

/// Descriptor written next to simulated data for later evaluation.
json truth_to_json(const SimulateConfig& c);
SimulateConfig truth_from_json(const json& j);

json mc_config_to_json(const McConfig& c);
McConfig mc_config_from_json(const json& j);

json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const json& j);

json report_to_json(const McReport& report);
McReport report_from_json(const json& j);

}  // namespace sgrc
