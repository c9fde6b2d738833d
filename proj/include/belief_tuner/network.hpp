#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "belief_tuner/error.hpp"

namespace belief_tuner {

/// Partial assignment of variables to states, keyed by name.  Used for
/// evidence, query instantiations and parent instantiations alike.
using Assignment = std::map<std::string, std::string>;
using Evidence = Assignment;
using Instantiation = Assignment;

/// A single variable/state pair, e.g. `tampering=true`.
struct Event {
  std::string variable;
  std::string state;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Variable {
  std::string name;
  std::vector<std::string> states;
  std::vector<std::string> parents;

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Conditional probability table of one variable.  Row r holds Pr(X | u_r)
/// for the r-th parent instantiation, enumerated with the last parent's
/// state varying fastest; column j is the j-th declared state of X.
using CptTable = Eigen::MatrixXd;

/// Row sums of a CPT must match 1 to within this tolerance.
inline constexpr double kRowSumTolerance = 1e-9;

/// Immutable discrete belief network.
///
/// The variable structure is shared between all versions derived from the
/// same network; every modification produces a new value with version + 1.
class Network {
 public:
  /// Validates and builds a network at version 0.  Throws ValidationError
  /// naming the offending variable on any invariant violation.
  static Network create(std::vector<Variable> variables, std::vector<CptTable> cpts);

  std::size_t size() const noexcept { return cpts_.size(); }
  std::uint64_t version() const noexcept { return version_; }

  const std::vector<Variable>& variables() const noexcept { return structure_->variables; }
  const Variable& variable(std::size_t v) const { return structure_->variables.at(v); }
  const CptTable& cpt(std::size_t v) const { return cpts_.at(v); }
  const std::vector<CptTable>& cpts() const noexcept { return cpts_; }

  std::size_t cardinality(std::size_t v) const { return variable(v).states.size(); }
  const std::vector<std::size_t>& parent_indices(std::size_t v) const {
    return structure_->parent_indices.at(v);
  }
  /// Variable indices with every parent before its children.
  const std::vector<std::size_t>& topological_order() const noexcept { return structure_->topo; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ValidationError for an unknown name.
  std::size_t index_of(std::string_view name) const;
  std::optional<std::size_t> find_state(std::size_t v, std::string_view state) const;
  /// Throws ValidationError for an unknown state label.
  std::size_t state_index(std::size_t v, std::string_view state) const;

  /// CPT row of variable v for the given parent states (in parent order).
  std::size_t row_index(std::size_t v, std::span<const std::size_t> parent_states) const;
  /// Inverse of row_index.
  std::vector<std::size_t> parent_states_of_row(std::size_t v, std::size_t row) const;

  /// Copy with one CPT row replaced and the version bumped.  The row is
  /// validated like any other.
  Network with_row(std::size_t v, std::size_t row, const Eigen::RowVectorXd& values) const;

  /// Same model under a different version stamp.  Used by version stores
  /// when a revert re-publishes an older model as the newest version.
  Network restamped(std::uint64_t version) const { return Network(structure_, cpts_, version); }

  /// Field-wise comparison, probabilities within `tolerance`.  Versions are
  /// not compared.
  bool same_model(const Network& other, double tolerance = 0.0) const;

 private:
  struct Structure {
    std::vector<Variable> variables;
    std::vector<std::vector<std::size_t>> parent_indices;
    std::vector<std::size_t> topo;
    std::map<std::string, std::size_t, std::less<>> index;
  };

  Network(std::shared_ptr<const Structure> structure, std::vector<CptTable> cpts,
          std::uint64_t version)
      : structure_(std::move(structure)), cpts_(std::move(cpts)), version_(version) {}

  std::shared_ptr<const Structure> structure_;
  std::vector<CptTable> cpts_;
  std::uint64_t version_ = 0;
};

/// Assignment resolved to state indices; -1 marks an unassigned variable.
using IndexedAssignment = std::vector<int>;

/// Throws ValidationError for unknown variables or states.
IndexedAssignment resolve(const Network& n, const Assignment& a);

/// Names a meta parameter tau_{x|u}: the distinguished state x of a binary
/// variable, together with a complete instantiation u of its parents.
/// Setting tau sets theta_{x|u} = tau and theta_{not x|u} = 1 - tau.
struct MetaParameterRef {
  std::string variable;
  std::string state;
  Assignment parent_instantiation;

  friend bool operator==(const MetaParameterRef&, const MetaParameterRef&) = default;
};

/// A meta parameter resolved against a particular network.
struct MetaParameter {
  MetaParameterRef ref;
  std::size_t variable = 0;
  std::size_t row = 0;
  std::size_t state = 0;  // column of the distinguished state
  double tau = 0.0;
  bool tunable = false;   // false when tau is 0 or 1
};

/// One entry per (binary variable, CPT row), distinguished state = first
/// declared state, in declaration order.  Non-binary variables contribute
/// nothing.
std::vector<MetaParameter> list_meta_parameters(const Network& n);

/// Throws ValidationError when the ref does not name a CPT entry,
/// NonTunableError when the variable is not binary.
MetaParameter resolve(const Network& n, const MetaParameterRef& ref);

/// Sets tau of `ref` to `new_tau` with its complement co-varying.  Throws
/// NonTunableError when the current tau is 0 or 1 and DomainError when
/// new_tau is outside [0, 1].
Network apply_change(const Network& n, const MetaParameterRef& ref, double new_tau);

/// Human-readable label, e.g. `report=true | leaving=false`.
std::string to_string(const MetaParameterRef& ref);
std::string to_string(const Event& e);

}  // namespace belief_tuner
