#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "belief_tuner/network.hpp"

namespace belief_tuner {

enum class ConstraintKind {
  Difference,  // Pr(y|e) - Pr(z|e) >= epsilon
  Ratio,       // Pr(y|e) / Pr(z|e) >= epsilon
  AtLeast,     // Pr(y|e) >= epsilon
  AtMost,      // Pr(y|e) <= epsilon
};

struct Constraint {
  ConstraintKind kind = ConstraintKind::AtLeast;
  Event y;
  std::optional<Event> z;
  double epsilon = 0.0;
};

/// Parses one of
///
///   P(VAR=STATE) >= NUM
///   P(VAR=STATE) <= NUM
///   P(VAR=STATE) - P(VAR=STATE) >= NUM
///   P(VAR=STATE) / P(VAR=STATE) >= NUM
///
/// Whitespace is ignored.  Throws ParseError with the offending offset.
Constraint parse_constraint(std::string_view text);

std::string to_string(const Constraint& c);

/// Checks the constraint against a network and evidence: events resolve,
/// query variables are unobserved, epsilon is finite (and positive for a
/// ratio).  Throws ValidationError.
void validate(const Network& n, const Evidence& e, const Constraint& c);

/// Parses `VAR=STATE,VAR=STATE,...`; empty text yields empty evidence.
/// Throws ParseError on syntax errors and duplicate variables.
Evidence parse_evidence(std::string_view text);

/// Parses a single `VAR=STATE`.
Event parse_event(std::string_view text);

}  // namespace belief_tuner
