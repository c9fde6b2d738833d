#pragma once

#include <string>
#include <vector>

#include "belief_tuner/bounds.hpp"
#include "belief_tuner/tuner.hpp"

namespace belief_tuner {

/// Fixed-point with `decimals` digits, e.g. format_fixed(0.5, 6) == "0.500000".
std::string format_fixed(double value, int decimals = 6);
/// Shortest text that reads back to the same double.
std::string format_exact(double value);

inline constexpr const char* kEnvelopeCsvHeader =
    "p,delta_plus_outer,delta_plus_inner,delta_minus_outer,delta_minus_inner";

/// Header line plus one row per point; values in round-trip precision.
std::string envelope_csv(const std::vector<EnvelopePoint>& points);

inline constexpr const char* kRecommendationCsvHeader =
    "parameter,current,suggested,delta,log_odds_distance";

/// Aligned text table (6 decimals) or CSV (round-trip precision).  A
/// boundary recommendation prints `boundary` in the distance column.
std::string recommendations_table(const std::vector<Recommendation>& recs);
std::string recommendations_csv(const std::vector<Recommendation>& recs);

}  // namespace belief_tuner
