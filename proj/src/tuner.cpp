#include "belief_tuner/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "belief_tuner/bounds.hpp"

namespace belief_tuner {
namespace {

// Margin = wy * Pr(y,e) + wz * Pr(z,e) + we * Pr(e).
struct LinearForm {
  double wy = 0.0;
  double wz = 0.0;
  double we = 0.0;
};

LinearForm linear_form(const Constraint& c) {
  switch (c.kind) {
    case ConstraintKind::Difference: return {1.0, -1.0, -c.epsilon};
    case ConstraintKind::Ratio: return {1.0, -c.epsilon, 0.0};
    case ConstraintKind::AtLeast: return {1.0, 0.0, -c.epsilon};
    case ConstraintKind::AtMost: return {-1.0, 0.0, c.epsilon};
  }
  return {};
}

struct JointTerms {
  double pe = 0.0;
  double pye = 0.0;
  double pze = 0.0;
};

JointTerms joint_terms(const Network& n, const Evidence& e, const Constraint& c) {
  IndexedAssignment ie = resolve(n, e);
  JointTerms t;
  t.pe = joint_prob(n, ie);
  if (t.pe <= 0.0) throw ZeroProbabilityError("evidence has probability zero");
  auto with = [&](const Event& ev) {
    IndexedAssignment i = ie;
    const std::size_t v = n.index_of(ev.variable);
    i[v] = static_cast<int>(n.state_index(v, ev.state));
    return joint_prob(n, i);
  };
  t.pye = with(c.y);
  if (c.z) t.pze = with(*c.z);
  return t;
}

double margin_of(const LinearForm& f, const JointTerms& t) {
  return f.wy * t.pye + f.wz * t.pze + f.we * t.pe;
}

double total(const FamilyMarginals& m) { return m.empty() ? 1.0 : m.front().sum(); }

}  // namespace

const char* to_string(ParameterStatus s) {
  switch (s) {
    case ParameterStatus::Recommended: return "recommended";
    case ParameterStatus::Irrelevant: return "irrelevant";
    case ParameterStatus::Infeasible: return "infeasible";
    case ParameterStatus::NonTunable: return "non-tunable";
    case ParameterStatus::UndefinedPosterior: return "undefined-posterior";
  }
  return "?";
}

double alpha(const FamilyMarginals& marginals, const MetaParameter& p, const Network& n) {
  if (!p.tunable) {
    throw NonTunableError("parameter " + to_string(p.ref) + " is fixed at 0 or 1");
  }
  const auto& table = marginals.at(p.variable);
  const auto r = static_cast<Eigen::Index>(p.row);
  const auto x = static_cast<Eigen::Index>(p.state);
  const auto other = static_cast<Eigen::Index>(1 - p.state);
  const auto& theta = n.cpt(p.variable);
  return table(r, x) / theta(r, x) - table(r, other) / theta(r, other);
}

double alpha(const Network& n, const Instantiation& i, const MetaParameterRef& p) {
  const MetaParameter m = resolve(n, p);
  if (!m.tunable) {
    throw NonTunableError("parameter " + to_string(p) + " is fixed at 0 or 1");
  }
  return alpha(family_marginals(n, i), m, n);
}

TuningReport analyze(const Network& n, const Evidence& e, const Constraint& c) {
  validate(n, e, c);
  const LinearForm form = linear_form(c);

  IndexedAssignment ie = resolve(n, e);
  const FamilyMarginals me = family_marginals(n, ie);
  TuningReport report;
  report.pr_e = total(me);
  if (report.pr_e <= 0.0) throw ZeroProbabilityError("evidence has probability zero");

  auto marginals_with = [&](const Event& ev) {
    IndexedAssignment i = ie;
    const std::size_t v = n.index_of(ev.variable);
    i[v] = static_cast<int>(n.state_index(v, ev.state));
    return family_marginals(n, i);
  };
  const FamilyMarginals mye = marginals_with(c.y);
  const FamilyMarginals mze = c.z ? marginals_with(*c.z) : FamilyMarginals{};

  JointTerms terms{report.pr_e, total(mye), c.z ? total(mze) : 0.0};
  report.margin = margin_of(form, terms);
  report.already_satisfied = report.margin >= 0.0;
  if (report.already_satisfied) return report;

  const double k_tolerance = kIrrelevanceTolerance * std::max(1.0, std::abs(c.epsilon));
  for (const MetaParameter& p : list_meta_parameters(n)) {
    ParameterOutcome out;
    out.parameter = p;
    if (!p.tunable) {
      out.status = ParameterStatus::NonTunable;
      report.outcomes.push_back(std::move(out));
      continue;
    }
    out.coefficients.alpha_e = alpha(me, p, n);
    out.coefficients.alpha_ye = alpha(mye, p, n);
    out.coefficients.alpha_ze = c.z ? alpha(mze, p, n) : 0.0;
    out.k = -(form.wy * out.coefficients.alpha_ye + form.wz * out.coefficients.alpha_ze +
              form.we * out.coefficients.alpha_e);

    // The constraint holds after a change delta iff margin >= delta * k,
    // with margin < 0 here.
    const double tau = p.tau;
    if (std::abs(out.k) <= k_tolerance) {
      out.status = ParameterStatus::Irrelevant;
      report.outcomes.push_back(std::move(out));
      continue;
    }
    const double threshold = report.margin / out.k;
    Recommendation rec;
    if (out.k > 0.0) {
      // delta <= threshold < 0
      if (threshold < -tau) {
        out.status = ParameterStatus::Infeasible;
        report.outcomes.push_back(std::move(out));
        continue;
      }
      rec.new_tau = std::clamp(tau + threshold, 0.0, 1.0);
      rec.feasible_interval = {0.0, rec.new_tau};
    } else {
      // delta >= threshold > 0
      if (threshold > 1.0 - tau) {
        out.status = ParameterStatus::Infeasible;
        report.outcomes.push_back(std::move(out));
        continue;
      }
      rec.new_tau = std::clamp(tau + threshold, 0.0, 1.0);
      rec.feasible_interval = {rec.new_tau, 1.0};
    }
    rec.param = p.ref;
    rec.variable = p.variable;
    rec.row = p.row;
    rec.current_tau = tau;
    rec.minimal_delta = rec.new_tau - tau;
    rec.reaches_boundary = rec.new_tau == 0.0 || rec.new_tau == 1.0;
    if (!rec.reaches_boundary) rec.log_odds_distance = log_odds_distance(tau, rec.new_tau).value;

    const double pe_after = report.pr_e + out.coefficients.alpha_e * rec.minimal_delta;
    if (pe_after <= kIrrelevanceTolerance * report.pr_e) {
      out.status = ParameterStatus::UndefinedPosterior;
      report.outcomes.push_back(std::move(out));
      continue;
    }
    out.status = ParameterStatus::Recommended;
    report.outcomes.push_back(std::move(out));
    report.recommendations.push_back(std::move(rec));
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::stable_sort(report.recommendations.begin(), report.recommendations.end(),
                   [&](const Recommendation& a, const Recommendation& b) {
                     const double da = a.log_odds_distance.value_or(inf);
                     const double db = b.log_odds_distance.value_or(inf);
                     if (da != db) return da < db;
                     if (a.variable != b.variable) return a.variable < b.variable;
                     return a.row < b.row;
                   });
  return report;
}

std::vector<Recommendation> solve(const Network& n, const Evidence& e, const Constraint& c) {
  return analyze(n, e, c).recommendations;
}

double constraint_slack(const Network& n, const Evidence& e, const Constraint& c) {
  validate(n, e, c);
  const JointTerms t = joint_terms(n, e, c);
  return margin_of(linear_form(c), t) / t.pe;
}

Verification verify(const Network& n, const Evidence& e, const Constraint& c,
                    const Recommendation& r) {
  const Network changed = apply_change(n, r.param, r.new_tau);
  Verification v;
  v.slack = constraint_slack(changed, e, c);
  v.satisfied = v.slack >= -kSlackTolerance;
  return v;
}

}  // namespace belief_tuner
