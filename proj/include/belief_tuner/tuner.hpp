#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "belief_tuner/constraint.hpp"
#include "belief_tuner/engine.hpp"
#include "belief_tuner/network.hpp"

namespace belief_tuner {

/// Slopes of Pr(e), Pr(y, e) and Pr(z, e) as affine functions of one meta
/// parameter.
struct Coefficients {
  double alpha_e = 0.0;
  double alpha_ye = 0.0;
  double alpha_ze = 0.0;
};

/// Closed sub-interval of [0, 1].
struct ProbabilityInterval {
  double low = 0.0;
  double high = 1.0;
};

/// One single-parameter change that enforces a constraint.
struct Recommendation {
  MetaParameterRef param;
  std::size_t variable = 0;  // declaration index, for ordering
  std::size_t row = 0;       // CPT row index, for ordering
  double current_tau = 0.0;
  double minimal_delta = 0.0;
  double new_tau = 0.0;
  /// Empty when new_tau is 0 or 1: the change leaves the parameter
  /// non-tunable and its log-odds distance is unbounded.
  std::optional<double> log_odds_distance;
  /// Every tau that enforces the constraint; new_tau is its endpoint
  /// nearest current_tau.
  ProbabilityInterval feasible_interval;
  bool reaches_boundary = false;
};

enum class ParameterStatus {
  Recommended,
  Irrelevant,          // k = 0: the constraint does not depend on tau
  Infeasible,          // no tau in [0, 1] satisfies the constraint
  NonTunable,          // tau is currently 0 or 1
  UndefinedPosterior,  // the only enforcing change makes Pr(e) = 0
};

const char* to_string(ParameterStatus s);

/// Solver state for one meta parameter.  `k` is the coefficient of delta
/// in the linearised constraint  margin >= delta * k.
struct ParameterOutcome {
  MetaParameter parameter;
  Coefficients coefficients;
  double k = 0.0;
  ParameterStatus status = ParameterStatus::Irrelevant;
};

struct TuningReport {
  double pr_e = 0.0;
  /// Constraint margin in joint-probability form, e.g. for a difference
  /// constraint Pr(y,e) - Pr(z,e) - eps * Pr(e).  Non-negative iff the
  /// constraint already holds.
  double margin = 0.0;
  bool already_satisfied = false;
  /// Empty when the constraint already holds.
  std::vector<ParameterOutcome> outcomes;
  /// Sorted by log-odds distance, then declaration order and CPT row.
  std::vector<Recommendation> recommendations;
};

/// |k| at or below this (scaled by max(1, |eps|)) counts as zero.
inline constexpr double kIrrelevanceTolerance = 1e-12;
/// verify() accepts slack down to -kSlackTolerance.
inline constexpr double kSlackTolerance = 1e-9;

/// d Pr(i) / d tau for the meta parameter, from family marginals:
///   Pr(i, x, u) / theta_{x|u} - Pr(i, not x, u) / theta_{not x|u}.
/// Throws NonTunableError when tau is 0 or 1.
double alpha(const Network& n, const Instantiation& i, const MetaParameterRef& p);
double alpha(const FamilyMarginals& marginals, const MetaParameter& p, const Network& n);

/// Classifies every meta parameter against the constraint and computes the
/// minimal enforcing change where one exists.  Throws ZeroProbabilityError
/// when Pr(e) = 0 and ValidationError for a malformed constraint.
TuningReport analyze(const Network& n, const Evidence& e, const Constraint& c);

/// The recommendations of analyze(); empty when the constraint holds.
std::vector<Recommendation> solve(const Network& n, const Evidence& e, const Constraint& c);

/// Constraint margin divided by Pr(e), i.e. in posterior terms:
///   difference  Pr(y|e) - Pr(z|e) - eps
///   ratio       Pr(y|e) - eps * Pr(z|e)
///   at least    Pr(y|e) - eps
///   at most     eps - Pr(y|e)
/// Non-negative iff the constraint holds.
double constraint_slack(const Network& n, const Evidence& e, const Constraint& c);

struct Verification {
  bool satisfied = false;
  double slack = 0.0;
};

/// Applies the recommendation and re-runs inference.
Verification verify(const Network& n, const Evidence& e, const Constraint& c,
                    const Recommendation& r);

}  // namespace belief_tuner
