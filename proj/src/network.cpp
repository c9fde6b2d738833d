#include "belief_tuner/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace belief_tuner {
namespace {

void validate_row(const Variable& var, std::size_t row, const Eigen::RowVectorXd& values) {
  if (static_cast<std::size_t>(values.size()) != var.states.size()) {
    throw ValidationError("variable '" + var.name + "': cpt row " + std::to_string(row) +
                          " has " + std::to_string(values.size()) + " entries, expected " +
                          std::to_string(var.states.size()));
  }
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    const double p = values[j];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("variable '" + var.name + "': cpt row " + std::to_string(row) +
                            " entry " + std::to_string(j) + " is not a probability");
    }
  }
  const double sum = values.sum();
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "variable '" << var.name << "': cpt row " << row << " sums to " << sum;
    throw ValidationError(msg.str());
  }
}

// Kahn's algorithm; on failure names the variables left on a cycle.
std::vector<std::size_t> topological_sort(const std::vector<Variable>& vars,
                                          const std::vector<std::vector<std::size_t>>& parents) {
  const std::size_t n = vars.size();
  std::vector<std::size_t> indegree(n, 0);
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    indegree[v] = parents[v].size();
    for (std::size_t p : parents[v]) children[p].push_back(v);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  // Smallest declared index first so the order is deterministic.
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    const std::size_t v = *it;
    ready.erase(it);
    order.push_back(v);
    for (std::size_t c : children[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (order.size() != n) {
    std::string names;
    for (std::size_t v = 0; v < n; ++v) {
      if (indegree[v] == 0) continue;
      if (!names.empty()) names += ", ";
      names += vars[v].name;
    }
    throw ValidationError("parent graph has a cycle through: " + names);
  }
  return order;
}

}  // namespace

Network Network::create(std::vector<Variable> variables, std::vector<CptTable> cpts) {
  if (variables.size() != cpts.size()) {
    throw ValidationError("expected one cpt per variable");
  }
  auto s = std::make_shared<Structure>();
  for (std::size_t v = 0; v < variables.size(); ++v) {
    const Variable& var = variables[v];
    if (var.name.empty()) throw ValidationError("variable " + std::to_string(v) + " has no name");
    if (!s->index.emplace(var.name, v).second) {
      throw ValidationError("duplicate variable name '" + var.name + "'");
    }
    if (var.states.size() < 2) {
      throw ValidationError("variable '" + var.name + "' needs at least two states");
    }
    std::set<std::string> seen;
    for (const auto& st : var.states) {
      if (st.empty()) throw ValidationError("variable '" + var.name + "' has an empty state label");
      if (!seen.insert(st).second) {
        throw ValidationError("variable '" + var.name + "' repeats state '" + st + "'");
      }
    }
  }

  s->parent_indices.resize(variables.size());
  for (std::size_t v = 0; v < variables.size(); ++v) {
    const Variable& var = variables[v];
    std::set<std::size_t> seen;
    for (const auto& p : var.parents) {
      auto it = s->index.find(p);
      if (it == s->index.end()) {
        throw ValidationError("variable '" + var.name + "' has unknown parent '" + p + "'");
      }
      if (!seen.insert(it->second).second) {
        throw ValidationError("variable '" + var.name + "' lists parent '" + p + "' twice");
      }
      s->parent_indices[v].push_back(it->second);
    }
  }
  s->topo = topological_sort(variables, s->parent_indices);

  for (std::size_t v = 0; v < variables.size(); ++v) {
    const Variable& var = variables[v];
    std::size_t rows = 1;
    for (std::size_t p : s->parent_indices[v]) rows *= variables[p].states.size();
    const CptTable& t = cpts[v];
    if (static_cast<std::size_t>(t.rows()) != rows) {
      throw ValidationError("variable '" + var.name + "': cpt has " + std::to_string(t.rows()) +
                            " rows, expected " + std::to_string(rows));
    }
    for (Eigen::Index r = 0; r < t.rows(); ++r) validate_row(var, r, t.row(r));
  }

  s->variables = std::move(variables);
  return Network(std::move(s), std::move(cpts), 0);
}

std::optional<std::size_t> Network::find(std::string_view name) const {
  auto it = structure_->index.find(name);
  if (it == structure_->index.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::index_of(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw ValidationError("unknown variable '" + std::string(name) + "'");
}

std::optional<std::size_t> Network::find_state(std::size_t v, std::string_view state) const {
  const auto& states = variable(v).states;
  auto it = std::find(states.begin(), states.end(), state);
  if (it == states.end()) return std::nullopt;
  return static_cast<std::size_t>(it - states.begin());
}

std::size_t Network::state_index(std::size_t v, std::string_view state) const {
  if (auto s = find_state(v, state)) return *s;
  throw ValidationError("unknown state '" + std::string(state) + "' for variable '" +
                        variable(v).name + "'");
}

std::size_t Network::row_index(std::size_t v, std::span<const std::size_t> parent_states) const {
  const auto& parents = parent_indices(v);
  std::size_t row = 0;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    row = row * cardinality(parents[k]) + parent_states[k];
  }
  return row;
}

std::vector<std::size_t> Network::parent_states_of_row(std::size_t v, std::size_t row) const {
  const auto& parents = parent_indices(v);
  std::vector<std::size_t> states(parents.size());
  for (std::size_t k = parents.size(); k-- > 0;) {
    const std::size_t card = cardinality(parents[k]);
    states[k] = row % card;
    row /= card;
  }
  return states;
}

Network Network::with_row(std::size_t v, std::size_t row, const Eigen::RowVectorXd& values) const {
  if (row >= static_cast<std::size_t>(cpt(v).rows())) {
    throw ValidationError("variable '" + variable(v).name + "' has no cpt row " +
                          std::to_string(row));
  }
  validate_row(variable(v), row, values);
  std::vector<CptTable> cpts = cpts_;
  cpts[v].row(row) = values;
  return Network(structure_, std::move(cpts), version_ + 1);
}

bool Network::same_model(const Network& other, double tolerance) const {
  if (variables() != other.variables()) return false;
  for (std::size_t v = 0; v < size(); ++v) {
    const CptTable& a = cpt(v);
    const CptTable& b = other.cpt(v);
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (((a - b).array().abs() > tolerance).any()) return false;
  }
  return true;
}

IndexedAssignment resolve(const Network& n, const Assignment& a) {
  IndexedAssignment out(n.size(), -1);
  for (const auto& [name, state] : a) {
    const std::size_t v = n.index_of(name);
    out[v] = static_cast<int>(n.state_index(v, state));
  }
  return out;
}

std::vector<MetaParameter> list_meta_parameters(const Network& n) {
  std::vector<MetaParameter> out;
  for (std::size_t v = 0; v < n.size(); ++v) {
    if (n.cardinality(v) != 2) continue;
    const Variable& var = n.variable(v);
    const CptTable& t = n.cpt(v);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      MetaParameter m;
      m.ref.variable = var.name;
      m.ref.state = var.states[0];
      const auto ps = n.parent_states_of_row(v, r);
      for (std::size_t k = 0; k < ps.size(); ++k) {
        const std::size_t p = n.parent_indices(v)[k];
        m.ref.parent_instantiation[n.variable(p).name] = n.variable(p).states[ps[k]];
      }
      m.variable = v;
      m.row = static_cast<std::size_t>(r);
      m.state = 0;
      m.tau = t(r, 0);
      m.tunable = m.tau != 0.0 && m.tau != 1.0;
      out.push_back(std::move(m));
    }
  }
  return out;
}

MetaParameter resolve(const Network& n, const MetaParameterRef& ref) {
  MetaParameter m;
  m.ref = ref;
  m.variable = n.index_of(ref.variable);
  if (n.cardinality(m.variable) != 2) {
    throw NonTunableError("variable '" + ref.variable + "' is not binary");
  }
  m.state = n.state_index(m.variable, ref.state);
  const auto& parents = n.parent_indices(m.variable);
  if (ref.parent_instantiation.size() != parents.size()) {
    throw ValidationError("parameter of '" + ref.variable + "' must instantiate exactly its " +
                          std::to_string(parents.size()) + " parent(s)");
  }
  std::vector<std::size_t> states;
  for (std::size_t p : parents) {
    const auto& pname = n.variable(p).name;
    auto it = ref.parent_instantiation.find(pname);
    if (it == ref.parent_instantiation.end()) {
      throw ValidationError("parameter of '" + ref.variable + "' does not instantiate parent '" +
                            pname + "'");
    }
    states.push_back(n.state_index(p, it->second));
  }
  m.row = n.row_index(m.variable, states);
  m.tau = n.cpt(m.variable)(m.row, m.state);
  m.tunable = m.tau != 0.0 && m.tau != 1.0;
  return m;
}

Network apply_change(const Network& n, const MetaParameterRef& ref, double new_tau) {
  const MetaParameter m = resolve(n, ref);
  if (!m.tunable) {
    throw NonTunableError("parameter " + to_string(ref) + " is fixed at " +
                          (m.tau == 0.0 ? "0" : "1"));
  }
  if (!(new_tau >= 0.0 && new_tau <= 1.0)) {
    throw DomainError("new value for " + to_string(ref) + " is outside [0, 1]");
  }
  Eigen::RowVectorXd row(2);
  row[static_cast<Eigen::Index>(m.state)] = new_tau;
  row[static_cast<Eigen::Index>(1 - m.state)] = 1.0 - new_tau;
  return n.with_row(m.variable, m.row, row);
}

std::string to_string(const Event& e) { return e.variable + "=" + e.state; }

std::string to_string(const MetaParameterRef& ref) {
  std::string out = ref.variable + "=" + ref.state;
  if (ref.parent_instantiation.empty()) return out;
  out += " |";
  bool first = true;
  for (const auto& [k, v] : ref.parent_instantiation) {
    out += first ? " " : ", ";
    first = false;
    out += k + "=" + v;
  }
  return out;
}

}  // namespace belief_tuner
