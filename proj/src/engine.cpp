#include "belief_tuner/engine.hpp"

#include <algorithm>
#include <numeric>

#include "belief_tuner/factor.hpp"

namespace belief_tuner {
namespace {

// CPT of v as a factor over its family, with entries inconsistent with the
// instantiation zeroed.  Masking keeps the full family scope, which
// family_marginals relies on.
Factor cpt_factor(const Network& n, std::size_t v, const IndexedAssignment& inst) {
  const auto& parents = n.parent_indices(v);
  std::vector<std::size_t> family = parents;
  family.push_back(v);
  std::vector<std::size_t> vars = family;
  std::sort(vars.begin(), vars.end());
  std::vector<std::size_t> cards;
  std::size_t size = 1;
  for (std::size_t u : vars) {
    cards.push_back(n.cardinality(u));
    size *= n.cardinality(u);
  }

  const CptTable& table = n.cpt(v);
  Eigen::ArrayXd values(static_cast<Eigen::Index>(size));
  std::vector<std::size_t> state(vars.size(), 0);
  std::vector<std::size_t> parent_states(parents.size());
  for (std::size_t idx = 0; idx < size; ++idx) {
    bool consistent = true;
    std::size_t own = 0;
    for (std::size_t d = 0; d < vars.size(); ++d) {
      const int fixed = inst[vars[d]];
      if (fixed >= 0 && static_cast<std::size_t>(fixed) != state[d]) consistent = false;
      if (vars[d] == v) own = state[d];
    }
    double value = 0.0;
    if (consistent) {
      for (std::size_t k = 0; k < parents.size(); ++k) {
        const auto pos = std::lower_bound(vars.begin(), vars.end(), parents[k]) - vars.begin();
        parent_states[k] = state[static_cast<std::size_t>(pos)];
      }
      value = table(static_cast<Eigen::Index>(n.row_index(v, parent_states)),
                    static_cast<Eigen::Index>(own));
    }
    values[static_cast<Eigen::Index>(idx)] = value;
    for (std::size_t d = 0; d < vars.size(); ++d) {
      if (++state[d] < cards[d]) break;
      state[d] = 0;
    }
  }
  return Factor(std::move(vars), std::move(cards), std::move(values));
}

std::vector<Factor> cpt_factors(const Network& n, const IndexedAssignment& inst) {
  std::vector<Factor> out;
  out.reserve(n.size());
  for (std::size_t v = 0; v < n.size(); ++v) out.push_back(cpt_factor(n, v, inst));
  return out;
}

std::vector<std::vector<std::size_t>> scopes_of(const std::vector<Factor>& factors) {
  std::vector<std::vector<std::size_t>> scopes;
  scopes.reserve(factors.size());
  for (const auto& f : factors) scopes.push_back(f.vars());
  return scopes;
}

void check_instantiation(const Network& n, const IndexedAssignment& i) {
  if (i.size() != n.size()) throw ValidationError("instantiation does not match network size");
  for (std::size_t v = 0; v < n.size(); ++v) {
    if (i[v] >= static_cast<int>(n.cardinality(v))) {
      throw ValidationError("state index out of range for '" + n.variable(v).name + "'");
    }
  }
}

}  // namespace

double joint_prob(const Network& n, const IndexedAssignment& i) {
  check_instantiation(n, i);
  auto factors = cpt_factors(n, i);
  const auto order = min_fill_order(scopes_of(factors), std::vector<bool>(n.size(), true));
  return eliminate(std::move(factors), order).total();
}

double joint_prob(const Network& n, const Instantiation& i) { return joint_prob(n, resolve(n, i)); }

double posterior(const Network& n, const Event& y, const Evidence& e) {
  if (e.count(y.variable)) {
    throw ValidationError("query variable '" + y.variable + "' is part of the evidence");
  }
  IndexedAssignment ie = resolve(n, e);
  const std::size_t yv = n.index_of(y.variable);
  const int ys = static_cast<int>(n.state_index(yv, y.state));
  const double pe = joint_prob(n, ie);
  if (pe <= 0.0) throw ZeroProbabilityError("evidence has probability zero");
  ie[yv] = ys;
  return joint_prob(n, ie) / pe;
}

FamilyMarginals family_marginals(const Network& n, const IndexedAssignment& i) {
  check_instantiation(n, i);
  const auto factors = cpt_factors(n, i);
  const auto scopes = scopes_of(factors);
  FamilyMarginals out(n.size());

  for (std::size_t v = 0; v < n.size(); ++v) {
    std::vector<bool> drop(n.size(), true);
    drop[v] = false;
    for (std::size_t p : n.parent_indices(v)) drop[p] = false;
    const Factor fam = eliminate(factors, min_fill_order(scopes, drop));

    // Family factor (sorted scope, first fastest) -> CPT-shaped matrix.
    const auto& parents = n.parent_indices(v);
    Eigen::MatrixXd table(n.cpt(v).rows(), n.cpt(v).cols());
    std::vector<std::size_t> parent_states(parents.size());
    for (Eigen::Index r = 0; r < table.rows(); ++r) {
      parent_states = n.parent_states_of_row(v, static_cast<std::size_t>(r));
      std::size_t base = 0;
      for (std::size_t k = 0; k < parents.size(); ++k) base += parent_states[k] * fam.stride(parents[k]);
      for (Eigen::Index x = 0; x < table.cols(); ++x) {
        table(r, x) = fam.values()[static_cast<Eigen::Index>(base + static_cast<std::size_t>(x) * fam.stride(v))];
      }
    }
    out[v] = std::move(table);
  }
  return out;
}

FamilyMarginals family_marginals(const Network& n, const Instantiation& i) {
  return family_marginals(n, resolve(n, i));
}

double enumerate_joint_oracle(const Network& n, const Instantiation& i) {
  const IndexedAssignment fixed = resolve(n, i);
  std::size_t worlds = 1;
  for (std::size_t v = 0; v < n.size(); ++v) {
    worlds *= n.cardinality(v);
    if (worlds > kOracleMaxWorlds) throw DomainError("state space too large for enumeration");
  }

  std::vector<std::size_t> world(n.size(), 0);
  for (std::size_t v = 0; v < n.size(); ++v)
    if (fixed[v] >= 0) world[v] = static_cast<std::size_t>(fixed[v]);

  double total = 0.0;
  std::vector<std::size_t> parent_states;
  for (;;) {
    double p = 1.0;
    for (std::size_t v = 0; v < n.size() && p != 0.0; ++v) {
      const auto& parents = n.parent_indices(v);
      parent_states.resize(parents.size());
      for (std::size_t k = 0; k < parents.size(); ++k) parent_states[k] = world[parents[k]];
      p *= n.cpt(v)(static_cast<Eigen::Index>(n.row_index(v, parent_states)),
                    static_cast<Eigen::Index>(world[v]));
    }
    total += p;

    // Advance over the free variables only.
    std::size_t v = 0;
    for (; v < n.size(); ++v) {
      if (fixed[v] >= 0) continue;
      if (++world[v] < n.cardinality(v)) break;
      world[v] = 0;
    }
    if (v == n.size()) break;
  }
  return total;
}

}  // namespace belief_tuner
