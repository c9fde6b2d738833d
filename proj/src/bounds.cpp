#include "belief_tuner/bounds.hpp"

#include <algorithm>

#include "belief_tuner/engine.hpp"

namespace belief_tuner {

OddsRatioBudget log_odds_distance(double p, double p_new) {
  require_interior(p, "probability");
  require_interior(p_new, "new probability");
  return {std::abs(log_odds(p_new) - log_odds(p))};
}

QueryInterval query_interval(double q, OddsRatioBudget budget) {
  if (!(budget.value >= 0.0)) throw DomainError("log-odds budget must be non-negative");
  if (q < 0.0 || q > 1.0) throw DomainError("query value must lie in [0, 1]");
  if (!is_interior(q)) return {q, q, true};
  return {shift_log_odds(q, -budget.value), shift_log_odds(q, budget.value), false};
}

ParameterChangeBound param_change_lower_bound(double q, double q_target, double p) {
  require_interior(q, "query value");
  require_interior(q_target, "target query value");
  require_interior(p, "parameter value");
  ParameterChangeBound out;
  out.budget = log_odds_distance(q, q_target);
  const double direction = q_target >= q ? 1.0 : -1.0;
  out.nearest_tau = shift_log_odds(p, direction * out.budget.value);
  return out;
}

std::vector<EnvelopePoint> envelope(double q0, double band_low, double band_high,
                                    std::span<const double> grid) {
  require_interior(q0, "query value");
  require_interior(band_low, "band lower edge");
  require_interior(band_high, "band upper edge");
  if (!(band_low <= q0 && q0 <= band_high)) {
    throw DomainError("query value must lie inside the band");
  }
  const double outer = log_odds_distance(q0, band_high).value;
  const double inner = log_odds_distance(q0, band_low).value;

  std::vector<EnvelopePoint> out;
  out.reserve(grid.size());
  for (double p : grid) {
    require_interior(p, "parameter value");
    EnvelopePoint pt;
    pt.p = p;
    pt.delta_plus_outer = shift_log_odds(p, outer) - p;
    pt.delta_plus_inner = shift_log_odds(p, inner) - p;
    pt.delta_minus_outer = p - shift_log_odds(p, -outer);
    pt.delta_minus_inner = p - shift_log_odds(p, -inner);
    out.push_back(pt);
  }
  return out;
}

std::vector<double> probability_grid(double step) {
  if (!(step > 0.0 && step < 1.0)) throw DomainError("grid step must lie strictly between 0 and 1");
  std::vector<double> grid;
  for (std::size_t k = 1;; ++k) {
    const double p = static_cast<double>(k) * step;
    // Guard against k * step landing a rounding error short of 1.
    if (p >= 1.0 - 1e-9) break;
    grid.push_back(p);
  }
  return grid;
}

double analytic_query_derivative(const Network& n, const Event& y, const Evidence& e,
                                 const MetaParameterRef& p) {
  const MetaParameter m = resolve(n, p);
  if (!m.tunable) throw NonTunableError("parameter " + to_string(p) + " is fixed at 0 or 1");
  if (e.count(y.variable)) {
    throw ValidationError("query variable '" + y.variable + "' is part of the evidence");
  }

  IndexedAssignment ie = resolve(n, e);
  const FamilyMarginals me = family_marginals(n, ie);
  const double pe = me.front().sum();
  if (pe <= 0.0) throw ZeroProbabilityError("evidence has probability zero");
  const std::size_t yv = n.index_of(y.variable);
  ie[yv] = static_cast<int>(n.state_index(yv, y.state));
  const FamilyMarginals mye = family_marginals(n, ie);

  const auto r = static_cast<Eigen::Index>(m.row);
  const auto x = static_cast<Eigen::Index>(m.state);
  const double theta = m.tau;
  const double y_e = mye.front().sum() / pe;
  const double yxu_e = mye[m.variable](r, x) / pe;
  const double xu_e = me[m.variable](r, x) / pe;
  const double yu_e = mye[m.variable].row(r).sum() / pe;
  const double u_e = me[m.variable].row(r).sum() / pe;

  return (yxu_e - y_e * xu_e - theta * (yu_e - y_e * u_e)) / (theta * (1.0 - theta));
}

}  // namespace belief_tuner
