#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "belief_tuner/error.hpp"
#include "belief_tuner/network.hpp"

namespace belief_tuner {

// Scalar kernels.  Templated so they can be evaluated in long double by the
// tests; the library itself uses double throughout.

template <std::floating_point Scalar>
bool is_interior(Scalar p) {
  return p > Scalar(0) && p < Scalar(1);
}

template <std::floating_point Scalar>
void require_interior(Scalar p, const char* what) {
  if (!is_interior(p)) throw DomainError(std::string(what) + " must lie strictly between 0 and 1");
}

template <std::floating_point Scalar>
Scalar odds(Scalar p) {
  return p / (Scalar(1) - p);
}

/// ln(p / (1 - p)).
template <std::floating_point Scalar>
Scalar log_odds(Scalar p) {
  return std::log(p) - std::log1p(-p);
}

/// Inverse of log_odds.
template <std::floating_point Scalar>
Scalar logistic(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// The probability whose log-odds differ from those of p by `shift`.
template <std::floating_point Scalar>
Scalar shift_log_odds(Scalar p, Scalar shift) {
  return logistic(log_odds(p) + shift);
}

/// Upper bound on |d Pr(y|e) / d tau_{x|u}| given q = Pr(y|e) and
/// p = Pr(x|u):  q(1 - q) / (p(1 - p)).
template <std::floating_point Scalar>
Scalar derivative_bound(Scalar q, Scalar p) {
  require_interior(p, "parameter value");
  if (q < Scalar(0) || q > Scalar(1)) throw DomainError("query value must lie in [0, 1]");
  return q * (Scalar(1) - q) / (p * (Scalar(1) - p));
}

/// Factor bounding infinitesimal relative change,
///   |dPr / Pr| <= factor * |dtau / tau|,  factor = (1 - q) / (1 - p),
/// for p in (0, .5].  Its supremum over that range is 2.  Callers with
/// p > .5 must switch to the complementary parameter 1 - p.
template <std::floating_point Scalar>
Scalar sensitivity_factor(Scalar q, Scalar p) {
  if (!(p > Scalar(0) && p <= Scalar(0.5))) {
    throw DomainError("sensitivity factor needs a parameter value in (0, .5]");
  }
  if (q < Scalar(0) || q > Scalar(1)) throw DomainError("query value must lie in [0, 1]");
  return (Scalar(1) - q) / (Scalar(1) - p);
}

/// New prior for a root X so that Pr(x | e) moves from `posterior` to
/// `target`.  The likelihood ratio Pr(e|x)/Pr(e|not x) does not depend on
/// the prior, so the odds scale by the same factor.
template <std::floating_point Scalar>
Scalar exact_root_change(Scalar prior, Scalar posterior, Scalar target) {
  require_interior(prior, "prior");
  require_interior(posterior, "posterior");
  require_interior(target, "target posterior");
  return shift_log_odds(prior, log_odds(target) - log_odds(posterior));
}

/// |ln O(p') - ln O(p)|.
struct OddsRatioBudget {
  double value = 0.0;
};

OddsRatioBudget log_odds_distance(double p, double p_new);

/// Guaranteed posterior range.  `degenerate` is set when the query was 0
/// or 1, in which case the interval is the single point q.
struct QueryInterval {
  double low = 0.0;
  double high = 0.0;
  bool degenerate = false;

  bool contains(double q) const { return low <= q && q <= high; }
};

/// Range the query can reach when every log-odds shift is bounded by
/// `budget`.
QueryInterval query_interval(double q, OddsRatioBudget budget);

struct ParameterChangeBound {
  OddsRatioBudget budget;  // log-odds change required at the query
  double nearest_tau = 0.0;  // parameter value at that log-odds distance
};

/// Lower bound on the parameter change needed to move the query from q to
/// q_target: the parameter must move at least as far in log-odds as the
/// query does.  `nearest_tau` is shifted in the direction of the target.
ParameterChangeBound param_change_lower_bound(double q, double q_target, double p);

/// Maximal parameter changes at current value p that keep a query
/// inside a band.  The `outer` columns use the log-odds budget to the upper
/// band edge, the `inner` columns the budget to the lower edge.
struct EnvelopePoint {
  double p = 0.0;
  double delta_plus_outer = 0.0;
  double delta_plus_inner = 0.0;
  double delta_minus_outer = 0.0;
  double delta_minus_inner = 0.0;

  /// Largest changes that keep the query inside the whole band.
  double safe_plus() const { return std::min(delta_plus_outer, delta_plus_inner); }
  double safe_minus() const { return std::min(delta_minus_outer, delta_minus_inner); }
};

std::vector<EnvelopePoint> envelope(double q0, double band_low, double band_high,
                                    std::span<const double> grid);

/// step, 2*step, ... strictly below 1.  Throws DomainError unless
/// 0 < step < 1.
std::vector<double> probability_grid(double step);

/// Exact d Pr(y|e) / d tau_{x|u} from conditional marginals,
///   [Pr(y,x,u|e) - Pr(y|e)Pr(x,u|e) - Pr(x|u)(Pr(y,u|e) - Pr(y|e)Pr(u|e))]
///     / (Pr(x|u)(1 - Pr(x|u))).
/// Throws ZeroProbabilityError when Pr(e) = 0, NonTunableError when tau is
/// 0 or 1.
double analytic_query_derivative(const Network& n, const Event& y, const Evidence& e,
                                 const MetaParameterRef& p);

}  // namespace belief_tuner
