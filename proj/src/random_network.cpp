#include "belief_tuner/random_network.hpp"

#include <algorithm>
#include <numeric>

namespace belief_tuner {

Network random_network(std::mt19937_64& rng, const RandomNetworkOptions& options) {
  std::uniform_int_distribution<std::size_t> count(options.min_variables, options.max_variables);
  std::uniform_int_distribution<std::size_t> states(2, std::max<std::size_t>(2, options.max_states));
  std::uniform_real_distribution<double> entry(options.min_entry, 1.0);
  std::bernoulli_distribution deterministic(options.deterministic_row_chance);

  const std::size_t n = count(rng);
  std::vector<Variable> vars(n);
  std::vector<CptTable> cpts(n);
  for (std::size_t v = 0; v < n; ++v) {
    vars[v].name = "v" + std::to_string(v);
    const std::size_t k = states(rng);
    for (std::size_t s = 0; s < k; ++s) vars[v].states.push_back("s" + std::to_string(s));

    std::vector<std::size_t> candidates(v);
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::uniform_int_distribution<std::size_t> parent_count(0, std::min(options.max_parents, v));
    candidates.resize(parent_count(rng));
    std::sort(candidates.begin(), candidates.end());
    std::size_t rows = 1;
    for (std::size_t p : candidates) {
      vars[v].parents.push_back(vars[p].name);
      rows *= vars[p].states.size();
    }

    CptTable t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      if (deterministic(rng)) {
        t.row(r).setZero();
        t(r, std::uniform_int_distribution<Eigen::Index>(0, t.cols() - 1)(rng)) = 1.0;
        continue;
      }
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = entry(rng);
      t.row(r) /= t.row(r).sum();
    }
    cpts[v] = std::move(t);
  }
  return Network::create(std::move(vars), std::move(cpts));
}

Evidence random_evidence(std::mt19937_64& rng, const Network& n, std::size_t max_observed,
                         const std::vector<std::string>& exclude) {
  std::vector<std::size_t> candidates;
  for (std::size_t v = 0; v < n.size(); ++v) {
    if (std::find(exclude.begin(), exclude.end(), n.variable(v).name) == exclude.end()) {
      candidates.push_back(v);
    }
  }
  std::shuffle(candidates.begin(), candidates.end(), rng);
  std::uniform_int_distribution<std::size_t> count(0, std::min(max_observed, candidates.size()));
  candidates.resize(count(rng));

  Evidence e;
  for (std::size_t v : candidates) {
    std::uniform_int_distribution<std::size_t> state(0, n.cardinality(v) - 1);
    e[n.variable(v).name] = n.variable(v).states[state(rng)];
  }
  return e;
}

}  // namespace belief_tuner
