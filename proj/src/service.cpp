#include "belief_tuner/service.hpp"

#include <httplib.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "belief_tuner/bounds.hpp"
#include "belief_tuner/constraint.hpp"
#include "belief_tuner/engine.hpp"
#include "belief_tuner/format.hpp"
#include "belief_tuner/network_io.hpp"
#include "belief_tuner/tuner.hpp"

namespace belief_tuner {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- store

ModelStore::ModelStore(std::size_t max_versions, std::size_t max_watches)
    : max_versions_(max_versions), max_watches_(max_watches), rng_(std::random_device{}()) {
  if (max_versions_ == 0) throw DomainError("a session must keep at least one version");
}

std::string ModelStore::fresh_id() {
  std::lock_guard lock(rng_mutex_);
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng_();
  return out.str();
}

std::string ModelStore::create(Network n) {
  auto s = std::make_shared<Session>();
  s->history.push_back(std::make_shared<const Network>(std::move(n)));
  std::unique_lock lock(sessions_mutex_);
  for (;;) {
    std::string id = fresh_id();
    if (sessions_.emplace(id, s).second) return id;
  }
}

std::shared_ptr<ModelStore::Session> ModelStore::session(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no network with id '" + id + "'");
  return it->second;
}

void ModelStore::push(Session& s, std::shared_ptr<const Network> n) {
  s.history.push_back(std::move(n));
  while (s.history.size() > max_versions_) s.history.pop_front();
}

std::shared_ptr<const Network> ModelStore::get(const std::string& id,
                                               std::optional<std::size_t> version) const {
  const auto s = session(id);
  std::shared_lock lock(s->mutex);
  if (!version) return s->history.back();
  const std::size_t oldest = s->history.front()->version();
  if (*version < oldest || *version > s->history.back()->version()) {
    throw NotFoundError("network '" + id + "' has no version " + std::to_string(*version));
  }
  return s->history[*version - oldest];
}

std::pair<std::shared_ptr<const Network>, std::shared_ptr<const Network>> ModelStore::append(
    const std::string& id, const std::function<Network(const Network&)>& next) {
  const auto s = session(id);
  std::unique_lock lock(s->mutex);
  auto before = s->history.back();
  auto after = std::make_shared<const Network>(next(*before));
  if (after->version() != before->version() + 1) {
    throw Error("internal: appended version is not consecutive");
  }
  push(*s, after);
  return {before, after};
}

std::shared_ptr<const Network> ModelStore::revert(const std::string& id, std::size_t version) {
  const auto target = get(id, version);
  return append(id, [&](const Network& latest) { return target->restamped(latest.version() + 1); })
      .second;
}

std::vector<std::size_t> ModelStore::versions(const std::string& id) const {
  const auto s = session(id);
  std::shared_lock lock(s->mutex);
  std::vector<std::size_t> out;
  for (const auto& n : s->history) out.push_back(n->version());
  return out;
}

std::size_t ModelStore::add_watch(const std::string& id, WatchQuery w) {
  const auto s = session(id);
  std::unique_lock lock(s->mutex);
  if (s->watches.size() >= max_watches_) {
    throw DomainError("at most " + std::to_string(max_watches_) + " watch queries per network");
  }
  s->watches.push_back(std::move(w));
  return s->watches.size();
}

std::vector<WatchQuery> ModelStore::watches(const std::string& id) const {
  const auto s = session(id);
  std::shared_lock lock(s->mutex);
  return s->watches;
}

// ---------------------------------------------------------------- JSON helpers

namespace {

// Request-shape problems are reported as 400s like any other parse error.
[[noreturn]] void bad_request(const std::string& what) { throw ParseError(what, 0); }

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ParseError("request body is not valid JSON", e.byte);
  }
}

const json& field(const json& body, const char* name) {
  if (!body.is_object()) bad_request("request body must be a JSON object");
  const auto it = body.find(name);
  if (it == body.end()) bad_request(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const json& v, const char* name) {
  if (!v.is_string()) bad_request(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

double number_field(const json& v, const char* name) {
  if (!v.is_number()) bad_request(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

Assignment assignment_of(const json& v, const char* name) {
  if (v.is_string()) return parse_evidence(v.get<std::string>());
  if (!v.is_object()) bad_request(std::string("field '") + name + "' must be an object or a string");
  Assignment out;
  for (const auto& [var, state] : v.items()) out[var] = string_field(state, name);
  return out;
}

Evidence evidence_of(const json& body) {
  if (!body.contains("evidence") || body["evidence"].is_null()) return {};
  return assignment_of(body["evidence"], "evidence");
}

Event event_of(const json& v, const char* name) {
  if (v.is_string()) return parse_event(v.get<std::string>());
  if (!v.is_object()) bad_request(std::string("field '") + name + "' must be an object or a string");
  return {string_field(field(v, "variable"), "variable"), string_field(field(v, "state"), "state")};
}

std::optional<std::size_t> version_of(const json& body) {
  if (!body.contains("version") || body["version"].is_null()) return std::nullopt;
  const json& v = body["version"];
  if (!v.is_number_unsigned()) bad_request("field 'version' must be a non-negative integer");
  return v.get<std::size_t>();
}

MetaParameterRef param_of(const json& v) {
  if (!v.is_object()) bad_request("field 'param' must be an object");
  MetaParameterRef ref;
  ref.variable = string_field(field(v, "variable"), "variable");
  ref.state = string_field(field(v, "state"), "state");
  if (v.contains("parents")) ref.parent_instantiation = assignment_of(v["parents"], "parents");
  return ref;
}

json to_json(const Event& e) { return {{"variable", e.variable}, {"state", e.state}}; }

json to_json(const Assignment& a) {
  json out = json::object();
  for (const auto& [k, v] : a) out[k] = v;
  return out;
}

json to_json(const MetaParameterRef& p) {
  return {{"variable", p.variable}, {"state", p.state}, {"parents", to_json(p.parent_instantiation)}};
}

json to_json(const Recommendation& r) {
  json out;
  out["param"] = to_json(r.param);
  out["label"] = to_string(r.param);
  out["current_tau"] = r.current_tau;
  out["minimal_delta"] = r.minimal_delta;
  out["new_tau"] = r.new_tau;
  out["log_odds_distance"] = r.log_odds_distance ? json(*r.log_odds_distance) : json(nullptr);
  out["feasible_interval"] = {r.feasible_interval.low, r.feasible_interval.high};
  out["reaches_boundary"] = r.reaches_boundary;
  return out;
}

json to_json(const QueryInterval& iv) {
  return {{"low", iv.low}, {"high", iv.high}, {"degenerate", iv.degenerate}};
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

// Runs a handler and maps library errors onto status codes.  `domain_status`
// is the status used for DomainError, which means bad user input for most
// routes but an out-of-range parameter value for /apply.
template <typename Handler>
void guarded(httplib::Response& res, Handler&& handler, int domain_status = 400) {
  try {
    handler();
  } catch (const NotFoundError& e) {
    send_error(res, 404, e.what());
  } catch (const ZeroProbabilityError& e) {
    send_error(res, 409, e.what());
  } catch (const NonTunableError& e) {
    send_error(res, 422, e.what());
  } catch (const DomainError& e) {
    send_error(res, domain_status, e.what());
  } catch (const ParseError& e) {
    send_error(res, 400, e.position() == 0 ? e.message() : std::string(e.what()));
  } catch (const ValidationError& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

// Posterior before and after a change plus the interval the log-odds
// budget of the change guarantees for it.
json watch_report(const WatchQuery& w, const Network& before, const Network& after,
                  const MetaParameterRef& changed) {
  json out;
  out["target"] = to_json(w.target);
  out["evidence"] = to_json(w.evidence);
  try {
    const double q = posterior(before, w.target, w.evidence);
    out["before"] = q;
    const MetaParameter old_p = resolve(before, changed);
    const MetaParameter new_p = resolve(after, changed);
    if (is_interior(new_p.tau)) {
      out["interval"] = to_json(query_interval(q, log_odds_distance(old_p.tau, new_p.tau)));
    } else {
      // A change to 0 or 1 has an unbounded log-odds budget.
      out["interval"] = to_json(QueryInterval{0.0, 1.0, false});
    }
  } catch (const ZeroProbabilityError&) {
    out["before"] = nullptr;
    out["interval"] = nullptr;
  }
  try {
    out["exact"] = posterior(after, w.target, w.evidence);
  } catch (const ZeroProbabilityError&) {
    out["exact"] = nullptr;
  }
  return out;
}

double query_param(const httplib::Request& req, const char* name, std::optional<double> fallback) {
  if (!req.has_param(name)) {
    if (fallback) return *fallback;
    bad_request(std::string("missing query parameter '") + name + "'");
  }
  const std::string text = req.get_param_value(name);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    bad_request(std::string("query parameter '") + name + "' is not a number");
  }
  return v;
}

constexpr const char* kNetworkPath = R"(/api/v1/networks/([0-9a-f]+))";

std::string route(const char* suffix) { return std::string(kNetworkPath) + suffix; }

}  // namespace

// ---------------------------------------------------------------- routes

Service::Service(ServiceOptions options)
    : options_(std::move(options)), store_(options_.max_versions, options_.max_watches) {}

void Service::mount(httplib::Server& server) {
  server.set_payload_max_length(options_.max_body_bytes);
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Post("/api/v1/networks", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = store_.create(parse_network(req.body));
      send_json(res, {{"id", id}, {"version", 0}}, 201);
    });
  });

  server.Get(kNetworkPath, [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      std::optional<std::size_t> version;
      if (req.has_param("version")) {
        const double v = query_param(req, "version", std::nullopt);
        if (v < 0 || v != std::floor(v)) bad_request("query parameter 'version' must be an integer");
        version = static_cast<std::size_t>(v);
      }
      const auto n = store_.get(id, version);
      json out;
      out["id"] = id;
      out["version"] = n->version();
      out["versions"] = store_.versions(id);
      out["network"] = json::parse(serialize_network(*n));
      json watches = json::array();
      for (const auto& w : store_.watches(id)) {
        watches.push_back({{"target", to_json(w.target)}, {"evidence", to_json(w.evidence)}});
      }
      out["watches"] = std::move(watches);
      send_json(res, out);
    });
  });

  server.Post(route("/query"), [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto n = store_.get(req.matches[1], version_of(body));
      const Event target = event_of(field(body, "target"), "target");
      const double q = posterior(*n, target, evidence_of(body));
      send_json(res, {{"posterior", q}, {"version", n->version()}});
    });
  });

  server.Post(route("/recommend"), [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto n = store_.get(req.matches[1], version_of(body));
      const Constraint c = parse_constraint(string_field(field(body, "constraint"), "constraint"));
      const TuningReport report = analyze(*n, evidence_of(body), c);
      json recs = json::array();
      for (const auto& r : report.recommendations) recs.push_back(to_json(r));
      json params = json::array();
      for (const auto& o : report.outcomes) {
        params.push_back({{"param", to_json(o.parameter.ref)},
                          {"label", to_string(o.parameter.ref)},
                          {"current_tau", o.parameter.tau},
                          {"status", to_string(o.status)}});
      }
      send_json(res, {{"version", n->version()},
                      {"constraint", to_string(c)},
                      {"already_satisfied", report.already_satisfied},
                      {"slack", report.margin / report.pr_e},
                      {"recommendations", std::move(recs)},
                      {"parameters", std::move(params)}});
    });
  });

  server.Post(route("/apply"), [this](const httplib::Request& req, httplib::Response& res) {
    guarded(
        res,
        [&] {
          const json body = parse_body(req);
          const std::string id = req.matches[1];
          const MetaParameterRef ref = param_of(field(body, "param"));
          const double new_tau = number_field(field(body, "new_tau"), "new_tau");
          const auto [before, after] =
              store_.append(id, [&](const Network& latest) { return apply_change(latest, ref, new_tau); });
          json watches = json::array();
          for (const auto& w : store_.watches(id)) watches.push_back(watch_report(w, *before, *after, ref));
          send_json(res, {{"version", after->version()}, {"watches", std::move(watches)}});
        },
        422);
  });

  server.Post(route("/watch"), [this](const httplib::Request& req, httplib::Response& res) {
    guarded(
        res,
        [&] {
          const json body = parse_body(req);
          const std::string id = req.matches[1];
          WatchQuery w{event_of(field(body, "target"), "target"), evidence_of(body)};
          const auto n = store_.get(id);
          // Validate names now rather than on every apply.
          resolve(*n, w.evidence);
          const std::size_t v = n->index_of(w.target.variable);
          n->state_index(v, w.target.state);
          if (w.evidence.count(w.target.variable)) {
            throw ValidationError("query variable '" + w.target.variable + "' is part of the evidence");
          }
          const std::size_t count = store_.add_watch(id, std::move(w));
          send_json(res, {{"watches", count}}, 201);
        },
        422);
  });

  server.Post(route("/revert"), [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto version = version_of(body);
      if (!version) bad_request("missing field 'version'");
      const auto n = store_.revert(req.matches[1], *version);
      send_json(res, {{"version", n->version()}});
    });
  });

  server.Post(route("/export"), [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      json out;
      out["id"] = id;
      json items = json::array();
      for (const std::size_t v : store_.versions(id)) {
        const std::string doc = serialize_network(*store_.get(id, v));
        if (options_.export_dir) {
          std::filesystem::create_directories(*options_.export_dir);
          const auto path = *options_.export_dir / (id + "-v" + std::to_string(v) + ".json");
          std::ofstream file(path, std::ios::binary);
          file << doc;
          if (!file) throw Error("cannot write " + path.string());
          items.push_back({{"version", v}, {"path", path.string()}});
        } else {
          items.push_back({{"version", v}, {"network", json::parse(doc)}});
        }
      }
      out["versions"] = std::move(items);
      send_json(res, out);
    });
  });

  server.Get("/api/v1/bounds/envelope", [](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const double q0 = query_param(req, "q0", std::nullopt);
      const double lo = query_param(req, "lo", std::nullopt);
      const double hi = query_param(req, "hi", std::nullopt);
      const double step = query_param(req, "step", 0.01);
      const auto grid = probability_grid(step);
      if (grid.empty()) throw DomainError("grid step leaves no points inside (0, 1)");
      res.set_content(envelope_csv(envelope(q0, lo, hi, grid)), "text/csv");
    });
  });
}

bool serve(const std::string& host, int port, const ServiceOptions& options, std::ostream& log) {
  Service service(options);
  httplib::Server server;
  service.mount(server);
  std::mutex log_mutex;
  server.set_logger([&](const httplib::Request& req, const httplib::Response& res) {
    std::lock_guard lock(log_mutex);
    log << req.method << ' ' << req.path << ' ' << res.status << '\n';
  });
  if (!server.bind_to_port(host, port)) return false;
  log << "listening on http://" << host << ':' << port << "/api/v1/\n" << std::flush;
  return server.listen_after_bind();
}

}  // namespace belief_tuner
