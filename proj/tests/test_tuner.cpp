#include <doctest.h>

#include <random>

#include "belief_tuner/constraint.hpp"
#include "belief_tuner/tuner.hpp"
#include "oracles.hpp"
#include "property_checks.hpp"
#include "test_support.hpp"

using namespace belief_tuner;
using belief_tuner::testing::fire_alarm;
using belief_tuner::testing::report_no_smoke;
using belief_tuner::testing::smoke_no_report;

namespace {

Constraint tampering_gap() {
  return parse_constraint("P(tampering=true) - P(tampering=false) >= 0.30");
}

Constraint fire_at_least_half() { return parse_constraint("P(fire=true) >= 0.5"); }

const Recommendation* find(const std::vector<Recommendation>& recs, const MetaParameterRef& ref) {
  for (const auto& r : recs)
    if (r.param == ref) return &r;
  return nullptr;
}

}  // namespace

TEST_SUITE("tuner") {
  TEST_CASE("alpha of the tampering prior") {
    // Frozen from enumeration: .011055014262 / .02 - .011019826564908 / .98.
    CHECK(alpha(fire_alarm(), report_no_smoke(), testing::root_param("tampering")) ==
          doctest::Approx(0.5415059921154001).epsilon(1e-12));
  }

  TEST_CASE("alpha of a root prior without evidence is zero") {
    for (const char* v : {"fire", "tampering"})
      CHECK(std::abs(alpha(fire_alarm(), Instantiation{}, testing::root_param(v))) <= 1e-15);
  }

  TEST_CASE("alpha matches a finite-difference slope") {
    const Network& n = fire_alarm();
    Instantiation i = report_no_smoke();
    i["fire"] = "true";
    for (const auto& p : list_meta_parameters(n)) {
      const double fd = testing::finite_difference_slope(n, i, p);
      CHECK(testing::close_rel(alpha(n, i, p.ref), fd, 1e-6, 1e-12));
    }
  }

  TEST_CASE("alpha rejects non-tunable parameters") {
    const Network n = testing::agreement_network(0.3, 0.7);
    CHECK_THROWS_AS(alpha(n, {{"E", "true"}}, MetaParameterRef{"E", "true", {{"X", "true"}, {"Y", "true"}}}),
                    NonTunableError);
  }

  TEST_CASE("tampering gap yields exactly two recommendations") {
    const TuningReport report = analyze(fire_alarm(), report_no_smoke(), tampering_gap());
    CHECK_FALSE(report.already_satisfied);
    REQUIRE(report.recommendations.size() == 2);

    const auto* t = find(report.recommendations, testing::root_param("tampering"));
    REQUIRE(t != nullptr);
    CHECK(std::abs(t->minimal_delta - 0.016) <= 0.001);
    CHECK(t->new_tau >= 0.036);
    CHECK(t->new_tau == doctest::Approx(0.036405).epsilon(1e-4));

    const auto* r = find(report.recommendations,
                         MetaParameterRef{"report", "true", {{"leaving", "false"}}});
    REQUIRE(r != nullptr);
    CHECK(std::abs(r->minimal_delta + 0.005) <= 0.001);
    CHECK(r->new_tau <= 0.005);

    for (const auto& out : report.outcomes) {
      const std::string& v = out.parameter.ref.variable;
      if (v == "fire" || v == "smoke" || v == "leaving" || v == "alarm") {
        CHECK((out.status == ParameterStatus::Irrelevant ||
               out.status == ParameterStatus::Infeasible));
      }
    }
    // Ranked by log-odds distance.
    REQUIRE(report.recommendations[0].log_odds_distance.has_value());
    REQUIRE(report.recommendations[1].log_odds_distance.has_value());
    CHECK(*report.recommendations[0].log_odds_distance <=
          *report.recommendations[1].log_odds_distance);
  }

  TEST_CASE("fire threshold yields five recommendations") {
    const auto recs = solve(fire_alarm(), smoke_no_report(), fire_at_least_half());
    CHECK(recs.size() == 5);
    const struct {
      MetaParameterRef ref;
      double threshold;
    } expected[] = {
        {testing::root_param("fire"), 0.03},
        {testing::root_param("tampering"), 0.80},
        {{"smoke", "true", {{"fire", "false"}}}, 0.003},
        {{"leaving", "true", {{"alarm", "false"}}}, 0.923},
        {{"report", "true", {{"leaving", "false"}}}, 0.776},
    };
    for (const auto& x : expected) {
      CAPTURE(to_string(x.ref));
      const auto* r = find(recs, x.ref);
      REQUIRE(r != nullptr);
      CHECK(std::abs(r->new_tau - x.threshold) <= 0.002);
    }
  }

  TEST_CASE("satisfied constraint gives no recommendations") {
    const TuningReport report =
        analyze(fire_alarm(), report_no_smoke(), parse_constraint("P(tampering=true) >= 0.4"));
    CHECK(report.already_satisfied);
    CHECK(report.margin >= 0.0);
    CHECK(report.recommendations.empty());
    CHECK(solve(fire_alarm(), report_no_smoke(), parse_constraint("P(fire=true) <= 0.5")).empty());
  }

  TEST_CASE("verify closes the loop") {
    const auto recs = solve(fire_alarm(), report_no_smoke(), tampering_gap());
    const auto* t = find(recs, testing::root_param("tampering"));
    REQUIRE(t != nullptr);
    const Verification v = verify(fire_alarm(), report_no_smoke(), tampering_gap(), *t);
    CHECK(v.satisfied);
    CHECK(std::abs(v.slack) <= 1e-9);
    const Network tuned = apply_change(fire_alarm(), t->param, t->new_tau);
    CHECK(std::abs(posterior(tuned, {"tampering", "true"}, report_no_smoke()) - 0.65) <= 0.005);

    Recommendation halved = *t;
    halved.minimal_delta /= 2.0;
    halved.new_tau = halved.current_tau + halved.minimal_delta;
    CHECK_FALSE(verify(fire_alarm(), report_no_smoke(), tampering_gap(), halved).satisfied);

    const auto fire_recs = solve(fire_alarm(), smoke_no_report(), fire_at_least_half());
    const auto* f = find(fire_recs, testing::root_param("fire"));
    REQUIRE(f != nullptr);
    CHECK(verify(fire_alarm(), smoke_no_report(), fire_at_least_half(), *f).satisfied);
    const Network fire_tuned = apply_change(fire_alarm(), f->param, f->new_tau);
    CHECK(posterior(fire_tuned, {"fire", "true"}, smoke_no_report()) ==
          doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("recommendation invariants") {
    for (const auto& r : solve(fire_alarm(), smoke_no_report(), fire_at_least_half())) {
      CHECK(r.new_tau == doctest::Approx(r.current_tau + r.minimal_delta).epsilon(1e-15));
      CHECK(r.new_tau >= 0.0);
      CHECK(r.new_tau <= 1.0);
      CHECK(r.feasible_interval.low <= r.feasible_interval.high);
      const bool at_endpoint =
          r.new_tau == r.feasible_interval.low || r.new_tau == r.feasible_interval.high;
      CHECK(at_endpoint);
      CHECK_FALSE((r.current_tau >= r.feasible_interval.low &&
                   r.current_tau <= r.feasible_interval.high));
    }
  }

  TEST_CASE("zero evidence probability is an error") {
    const Network n = testing::agreement_network(0.3, 0.7);
    const Network x_false = apply_change(n, testing::root_param("X"), 0.0);
    const Network both = apply_change(x_false, testing::root_param("Y"), 1.0);
    CHECK_THROWS_AS(analyze(both, {{"E", "true"}}, parse_constraint("P(X=true) >= 0.5")),
                    ZeroProbabilityError);
  }

  TEST_CASE("invalid constraints are rejected") {
    CHECK_THROWS_AS(analyze(fire_alarm(), report_no_smoke(), parse_constraint("P(smoke=true) >= .5")),
                    ValidationError);
    CHECK_THROWS_AS(analyze(fire_alarm(), report_no_smoke(), parse_constraint("P(fire=hot) >= .5")),
                    ValidationError);
    CHECK_THROWS_AS(
        analyze(fire_alarm(), report_no_smoke(), parse_constraint("P(fire=true) / P(alarm=true) >= 0")),
        ValidationError);
  }

  TEST_CASE("deterministic rows are reported non-tunable") {
    const Network n = testing::agreement_network(0.3, 0.7);
    const TuningReport report = analyze(n, {{"E", "true"}}, parse_constraint("P(X=true) >= 0.9"));
    for (const auto& out : report.outcomes) {
      CHECK((out.status == ParameterStatus::NonTunable) == (out.parameter.ref.variable == "E"));
    }
  }

  TEST_CASE("property: soundness, minimality and completeness against grid search") {
    std::mt19937_64 rng(4242);
    const auto res = testing::check_tuner_completeness(rng, 40);
    INFO(res.first_failure);
    CHECK(res.cases == 40);
    CHECK(res.failures == 0);
  }
}

TEST_SUITE("constraint grammar") {
  TEST_CASE("the four forms") {
    const Constraint d = parse_constraint("P(a=x) - P(b=y) >= 0.3");
    CHECK(d.kind == ConstraintKind::Difference);
    CHECK(d.y == Event{"a", "x"});
    REQUIRE(d.z.has_value());
    CHECK(*d.z == Event{"b", "y"});
    CHECK(d.epsilon == 0.3);

    const Constraint r = parse_constraint("P(a=x)/P(b=y)>=2");
    CHECK(r.kind == ConstraintKind::Ratio);
    CHECK(r.epsilon == 2.0);

    const Constraint lo = parse_constraint("  P( a = x ) >= .5 ");
    CHECK(lo.kind == ConstraintKind::AtLeast);
    CHECK_FALSE(lo.z.has_value());
    CHECK(lo.epsilon == 0.5);

    const Constraint hi = parse_constraint("P(a_1=x2) <= 1e-3");
    CHECK(hi.kind == ConstraintKind::AtMost);
    CHECK(hi.y == Event{"a_1", "x2"});
    CHECK(hi.epsilon == 0.001);

    CHECK(parse_constraint("P(a=x) - P(b=y) >= -0.25").epsilon == -0.25);
  }

  TEST_CASE("to_string round-trips") {
    for (const char* text : {"P(a=x) - P(b=y) >= 0.3", "P(a=x) / P(b=y) >= 2", "P(a=x) >= 0.5",
                             "P(a=x) <= 0.125"}) {
      const Constraint c = parse_constraint(text);
      const Constraint again = parse_constraint(to_string(c));
      CHECK(again.kind == c.kind);
      CHECK(again.y == c.y);
      CHECK(again.z == c.z);
      CHECK(again.epsilon == c.epsilon);
    }
  }

  TEST_CASE("errors carry the offending offset") {
    auto offset_of = [](const char* text) -> std::size_t {
      try {
        parse_constraint(text);
      } catch (const ParseError& e) {
        return e.position();
      }
      FAIL("expected a parse error for " << text);
      return 0;
    };
    CHECK(offset_of("Q(a=x) >= 1") == 0);
    CHECK(offset_of("P(a x) >= 1") == 4);
    CHECK(offset_of("P(a=x) > 1") == 7);
    CHECK(offset_of("P(a=x) >= ") == 10);
    CHECK(offset_of("P(a=x) >= 1 junk") == 12);
    CHECK(offset_of("P(a=x) - P(b=y) <= 1") == 16);
  }

  TEST_CASE("evidence lists") {
    CHECK(parse_evidence("").empty());
    CHECK(parse_evidence("  ").empty());
    const Evidence e = parse_evidence("report=true, smoke=false");
    CHECK(e == Evidence{{"report", "true"}, {"smoke", "false"}});
    CHECK(parse_event("fire=true") == Event{"fire", "true"});
    CHECK_THROWS_AS(parse_evidence("a=b,a=c"), ParseError);
    CHECK_THROWS_AS(parse_evidence("a=b,c"), ParseError);
    CHECK_THROWS_AS(parse_evidence("=b"), ParseError);
    try {
      parse_evidence("a=b,c");
      FAIL("expected a parse error");
    } catch (const ParseError& err) {
      CHECK(err.position() == 4);
    }
  }
}
