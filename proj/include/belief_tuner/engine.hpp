#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "belief_tuner/network.hpp"

namespace belief_tuner {

/// Per-family joint marginals Pr(i, x, u).  Entry v has the shape of the
/// CPT of variable v: row = parent instantiation u, column = state x.
using FamilyMarginals = std::vector<Eigen::MatrixXd>;

/// Exact Pr(i) by variable elimination with a min-fill order.
double joint_prob(const Network& n, const Instantiation& i);
double joint_prob(const Network& n, const IndexedAssignment& i);

/// Pr(y | e).  Throws ZeroProbabilityError when Pr(e) = 0 and
/// ValidationError when y's variable is part of e.
double posterior(const Network& n, const Event& y, const Evidence& e);

/// Pr(i, x, u) for every family instantiation, one elimination run per
/// family.
FamilyMarginals family_marginals(const Network& n, const Instantiation& i);
FamilyMarginals family_marginals(const Network& n, const IndexedAssignment& i);

/// Largest state space the enumeration oracle accepts.
inline constexpr std::size_t kOracleMaxWorlds = std::size_t{1} << 24;

/// Pr(i) by summing the chain-rule product over every complete world
/// consistent with i.  Independent of the elimination code path; throws
/// DomainError when the network has more than kOracleMaxWorlds worlds.
double enumerate_joint_oracle(const Network& n, const Instantiation& i);

}  // namespace belief_tuner
