#include "belief_tuner/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <random>

#include "belief_tuner/bounds.hpp"
#include "belief_tuner/constraint.hpp"
#include "belief_tuner/engine.hpp"
#include "belief_tuner/format.hpp"
#include "belief_tuner/network_io.hpp"
#include "belief_tuner/random_network.hpp"
#include "belief_tuner/service.hpp"
#include "belief_tuner/tuner.hpp"

namespace belief_tuner {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Errors in the network file itself, as opposed to the command line.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Network load(const std::string& path) {
  if (path.empty()) throw UsageError("--network is required for this command");
  try {
    return read_network_file(path);
  } catch (const ParseError& e) {
    throw ModelError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ModelError(path + ": " + e.what());
  }
}

double parse_number(std::string_view text, const char* what) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw UsageError(std::string(what) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--band must look like LOW:HIGH");
  const double lo = parse_number(std::string_view(text).substr(0, colon), "--band");
  const double hi = parse_number(std::string_view(text).substr(colon + 1), "--band");
  if (!(lo <= hi)) throw UsageError("--band: LOW must not exceed HIGH");
  return {lo, hi};
}

double need(const std::optional<double>& v, const char* flag) {
  if (!v) throw UsageError(std::string(flag) + " is required for this bound");
  return *v;
}

struct Globals {
  std::string network;
  std::string evidence;
  std::string format = "text";
};

int cmd_query(const Globals& g, const std::string& target, std::ostream& out) {
  const Network n = load(g.network);
  const Event y = parse_event(target);
  const double q = posterior(n, y, parse_evidence(g.evidence));
  if (g.format == "csv") {
    out << "target,posterior\n" << to_string(y) << ',' << format_exact(q) << '\n';
  } else {
    out << format_fixed(q) << '\n';
  }
  return kExitOk;
}

int cmd_recommend(const Globals& g, const std::string& text, std::ostream& out, std::ostream& err) {
  const Network n = load(g.network);
  const Constraint c = parse_constraint(text);
  const TuningReport report = analyze(n, parse_evidence(g.evidence), c);
  out << (g.format == "csv" ? recommendations_csv(report.recommendations)
                            : recommendations_table(report.recommendations));
  if (report.already_satisfied) {
    err << "constraint already holds\n";
    return kExitOk;
  }
  if (report.recommendations.empty()) {
    err << "no single parameter change enforces " << to_string(c) << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_envelope(double q0, const std::string& band, double step, std::ostream& out) {
  const auto [lo, hi] = parse_band(band);
  const auto grid = probability_grid(step);
  out << envelope_csv(envelope(q0, lo, hi, grid));
  return kExitOk;
}

struct BoundArgs {
  bool derivative = false;
  bool interval = false;
  bool root_change = false;
  bool sensitivity = false;
  bool lower_bound = false;
  std::optional<double> q, p, p_new, prior, posterior, target;
};

int cmd_bound(const BoundArgs& a, std::ostream& out) {
  if (a.derivative) {
    out << format_fixed(derivative_bound(need(a.q, "-q"), need(a.p, "-p"))) << '\n';
  } else if (a.sensitivity) {
    out << format_fixed(sensitivity_factor(need(a.q, "-q"), need(a.p, "-p"))) << '\n';
  } else if (a.interval) {
    const OddsRatioBudget budget = log_odds_distance(need(a.p, "-p"), need(a.p_new, "--p-new"));
    const QueryInterval iv = query_interval(need(a.q, "-q"), budget);
    out << '[' << format_fixed(iv.low) << ", " << format_fixed(iv.high) << "]\n";
  } else if (a.root_change) {
    out << format_fixed(exact_root_change(need(a.prior, "--prior"), need(a.posterior, "--posterior"),
                                          need(a.target, "--target")))
        << '\n';
  } else {
    const ParameterChangeBound b =
        param_change_lower_bound(need(a.q, "-q"), need(a.target, "--target"), need(a.p, "-p"));
    out << "budget " << format_fixed(b.budget.value) << '\n'
        << "nearest_tau " << format_fixed(b.nearest_tau) << '\n';
  }
  return kExitOk;
}

std::uint64_t selftest_seed() {
  const char* env = std::getenv("BELIEF_TUNER_SEED");
  if (!env || !*env) return 20240601;
  std::uint64_t seed = 0;
  const std::string_view text(env);
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw UsageError("BELIEF_TUNER_SEED must be an unsigned integer");
  }
  return seed;
}

// Quick randomized consistency checks on generated networks.
int cmd_selftest(int trials, std::ostream& out) {
  if (trials <= 0) throw UsageError("--trials must be positive");
  const std::uint64_t seed = selftest_seed();
  std::mt19937_64 rng(seed);
  out << "seed " << seed << '\n';

  RandomNetworkOptions opts;
  opts.max_states = 3;
  int failures = 0;
  auto report = [&](const char* name, int bad) {
    out << (bad == 0 ? "PASS " : "FAIL ") << name << " (" << trials << " networks";
    if (bad) out << ", " << bad << " failed";
    out << ")\n";
    failures += bad;
  };

  int bad = 0;
  for (int t = 0; t < trials; ++t) {
    const Network n = random_network(rng, opts);
    const Evidence e = random_evidence(rng, n, 3);
    if (std::abs(joint_prob(n, e) - enumerate_joint_oracle(n, e)) > 1e-10) ++bad;
  }
  report("elimination matches enumeration", bad);

  bad = 0;
  for (int t = 0; t < trials; ++t) {
    const Network n = random_network(rng, opts);
    const Evidence e = random_evidence(rng, n, 3);
    for (const auto& p : list_meta_parameters(n)) {
      if (!p.tunable) continue;
      const double f0 = joint_prob(apply_change(n, p.ref, 0.0), e);
      const double f1 = joint_prob(apply_change(n, p.ref, 1.0), e);
      const double slope = alpha(n, e, p.ref);
      if (std::abs((f1 - f0) - slope) > 1e-9) ++bad;
    }
  }
  report("evidence probability is linear in each parameter", bad);

  bad = 0;
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  for (int t = 0; t < trials; ++t) {
    const Network n = random_network(rng, opts);
    const Evidence e = random_evidence(rng, n, 2);
    const auto params = list_meta_parameters(n);
    if (params.empty()) continue;
    for (std::size_t v = 0; v < n.size(); ++v) {
      if (e.count(n.variable(v).name)) continue;
      const Event y{n.variable(v).name, n.variable(v).states[0]};
      const MetaParameter& p = params[t % params.size()];
      if (!p.tunable) break;
      const double tau = unit(rng);
      const double q = posterior(n, y, e);
      const double q_new = posterior(apply_change(n, p.ref, tau), y, e);
      if (is_interior(q) && is_interior(q_new) &&
          log_odds_distance(q, q_new).value > log_odds_distance(p.tau, tau).value + 1e-9) {
        ++bad;
      }
      break;
    }
  }
  report("query log-odds change within parameter log-odds change", bad);

  return failures == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Belief-network parameter tuning and sensitivity bounds", "belief-tuner"};
  app.fallthrough();
  app.require_subcommand(1);

  Globals g;
  app.add_option("-n,--network", g.network, "Network document (JSON)")->check(CLI::ExistingFile);
  app.add_option("-e,--evidence", g.evidence, "Evidence as VAR=STATE,VAR=STATE");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"text", "csv"}));

  auto* query = app.add_subcommand("query", "Posterior probability of one event");
  std::string target;
  query->add_option("-t,--target", target, "Event VAR=STATE")->required();

  auto* recommend = app.add_subcommand("recommend", "Single-parameter changes enforcing a constraint");
  std::string constraint;
  recommend->add_option("-c,--constraint", constraint, "e.g. 'P(a=x) - P(b=y) >= 0.3'")->required();

  auto* env = app.add_subcommand("envelope", "CSV of admissible parameter changes over p");
  double q0 = 0.0, step = 0.01;
  std::string band;
  env->add_option("--q0", q0, "Current query value")->required();
  env->add_option("--band", band, "Query band LOW:HIGH")->required();
  env->add_option("--step", step, "Grid step over p")->capture_default_str();

  auto* bound = app.add_subcommand("bound", "Sensitivity bounds");
  BoundArgs b;
  auto* mode = bound->add_option_group("mode");
  mode->add_flag("--derivative", b.derivative, "Bound on the query derivative (-q, -p)");
  mode->add_flag("--sensitivity", b.sensitivity, "Relative-change factor (-q, -p)");
  mode->add_flag("--interval", b.interval, "Guaranteed query interval (-q, -p, --p-new)");
  mode->add_flag("--root-change", b.root_change, "Exact root prior (--prior, --posterior, --target)");
  mode->add_flag("--lower-bound", b.lower_bound, "Least parameter change (-q, --target, -p)");
  mode->require_option(1);
  bound->add_option("-q", b.q, "Query probability");
  bound->add_option("-p", b.p, "Parameter value");
  bound->add_option("--p-new", b.p_new, "New parameter value");
  bound->add_option("--prior", b.prior, "Current prior");
  bound->add_option("--posterior", b.posterior, "Current posterior");
  bound->add_option("--target", b.target, "Target posterior");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP service");
  int port = 8374;
  std::string host = "127.0.0.1";
  std::string export_dir;
  ServiceOptions service_options;
  serve_cmd->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--max-versions", service_options.max_versions)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-watches", service_options.max_watches)->capture_default_str();
  serve_cmd->add_option("--export-dir", export_dir, "Directory for exported snapshots");

  auto* selftest = app.add_subcommand("selftest", "Randomized consistency checks (BELIEF_TUNER_SEED)");
  int trials = 50;
  selftest->add_option("--trials", trials)->capture_default_str();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("belief-tuner");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (query->parsed()) return cmd_query(g, target, out);
    if (recommend->parsed()) return cmd_recommend(g, constraint, out, err);
    if (env->parsed()) return cmd_envelope(q0, band, step, out);
    if (bound->parsed()) return cmd_bound(b, out);
    if (selftest->parsed()) return cmd_selftest(trials, out);
    if (serve_cmd->parsed()) {
      if (!export_dir.empty()) service_options.export_dir = export_dir;
      if (!serve(host, port, service_options, err)) {
        err << "error: cannot listen on " << host << ':' << port << '\n';
        return kExitFailure;
      }
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace belief_tuner
