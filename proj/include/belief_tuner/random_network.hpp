#pragma once

#include <cstddef>
#include <random>

#include "belief_tuner/network.hpp"

namespace belief_tuner {

struct RandomNetworkOptions {
  std::size_t min_variables = 2;
  std::size_t max_variables = 10;
  std::size_t max_parents = 3;
  std::size_t max_states = 2;
  /// Entries are drawn from [min_entry, 1) before normalisation, keeping
  /// every parameter interior.
  double min_entry = 0.02;
  /// Chance that a row is replaced by a deterministic (0/1) row.
  double deterministic_row_chance = 0.0;
};

/// Random DAG over variables v0..vN-1 (parents drawn from lower indices),
/// states s0..sK-1, and random CPT rows.
Network random_network(std::mt19937_64& rng, const RandomNetworkOptions& options = {});

/// Observes up to `max_observed` variables, avoiding `exclude`, with
/// uniformly drawn states.
Evidence random_evidence(std::mt19937_64& rng, const Network& n, std::size_t max_observed,
                         const std::vector<std::string>& exclude = {});

}  // namespace belief_tuner
