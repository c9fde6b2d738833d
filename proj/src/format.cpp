#include "belief_tuner/format.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace belief_tuner {

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string format_exact(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ec == std::errc() ? end : buf);
}

std::string envelope_csv(const std::vector<EnvelopePoint>& points) {
  std::string out = kEnvelopeCsvHeader;
  out += '\n';
  for (const auto& pt : points) {
    out += format_exact(pt.p) + ',' + format_exact(pt.delta_plus_outer) + ',' +
           format_exact(pt.delta_plus_inner) + ',' + format_exact(pt.delta_minus_outer) + ',' +
           format_exact(pt.delta_minus_inner) + '\n';
  }
  return out;
}

namespace {

std::string signed_fixed(double v) { return (v >= 0.0 ? "+" : "") + format_fixed(v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

}  // namespace

std::string recommendations_table(const std::vector<Recommendation>& recs) {
  std::vector<std::string> labels;
  std::size_t width = std::string("parameter").size();
  for (const auto& r : recs) {
    labels.push_back(to_string(r.param));
    width = std::max(width, labels.back().size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };

  std::string out = pad("parameter", width + 2) + pad("current", 11) + pad("suggested", 11) +
                    pad("delta", 12) + "log_odds_distance\n";
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    out += pad(labels[i], width + 2) + pad(format_fixed(r.current_tau), 11) +
           pad(format_fixed(r.new_tau), 11) + pad(signed_fixed(r.minimal_delta), 12) +
           (r.log_odds_distance ? format_fixed(*r.log_odds_distance) : "boundary") + '\n';
  }
  return out;
}

std::string recommendations_csv(const std::vector<Recommendation>& recs) {
  std::string out = kRecommendationCsvHeader;
  out += '\n';
  for (const auto& r : recs) {
    out += csv_field(to_string(r.param)) + ',' + format_exact(r.current_tau) + ',' +
           format_exact(r.new_tau) + ',' + format_exact(r.minimal_delta) + ',' +
           (r.log_odds_distance ? format_exact(*r.log_odds_distance) : "boundary") + '\n';
  }
  return out;
}

}  // namespace belief_tuner
