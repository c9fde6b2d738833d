#include <doctest.h>

// Eigen must precede httplib.h: glibc's <resolv.h> defines a macro `_res`
// that collides with Eigen parameter names.
#include "belief_tuner/network.hpp"

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "belief_tuner/engine.hpp"
#include "belief_tuner/network_io.hpp"
#include "belief_tuner/service.hpp"
#include "test_support.hpp"

using namespace belief_tuner;
using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A service on an ephemeral localhost port for the lifetime of the object.
class LiveService {
 public:
  explicit LiveService(ServiceOptions options = {}) : service_(std::move(options)) {
    service_.mount(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveService() {
    server_.stop();
    thread_.join();
  }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

  json post(const std::string& path, const json& body, int expected) const {
    return post_raw(path, body.dump(), expected);
  }

  json post_raw(const std::string& path, const std::string& body, int expected) const {
    auto res = client().Post(path, body, "application/json");
    REQUIRE(res);
    CHECK_MESSAGE(res->status == expected, res->body);
    return res->body.empty() ? json() : json::parse(res->body);
  }

  std::string upload(const std::string& doc) const {
    return post_raw("/api/v1/networks", doc, 201)["id"].get<std::string>();
  }

  ModelStore& store() { return service_.store(); }

 private:
  Service service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

const std::string& fixture_doc() {
  static const std::string doc = read_file(testing::fixture_path("fire_alarm.json"));
  return doc;
}

std::string net(const std::string& id, const char* suffix = "") {
  return "/api/v1/networks/" + id + suffix;
}

const json kReportNoSmoke = {{"report", "true"}, {"smoke", "false"}};
const json kTamperingPrior = {{"variable", "tampering"}, {"state", "true"}, {"parents", json::object()}};

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("upload returns a fresh id at version zero") {
    LiveService s;
    const json a = s.post_raw("/api/v1/networks", fixture_doc(), 201);
    CHECK(a["version"] == 0);
    CHECK(a["id"].get<std::string>().size() == 16);
    const json b = s.post_raw("/api/v1/networks", fixture_doc(), 201);
    CHECK(a["id"] != b["id"]);

    auto res = s.client().Get(net(a["id"]));
    REQUIRE(res);
    CHECK(res->status == 200);
    const json got = json::parse(res->body);
    CHECK(got["versions"] == json::array({0}));
    CHECK(parse_network(got["network"].dump()).same_model(testing::fire_alarm()));
  }

  TEST_CASE("invalid uploads") {
    LiveService s;
    const auto cyclic = R"({"variables": [
      {"name": "A", "states": ["t", "f"], "parents": ["B"], "cpt": [[0.5, 0.5], [0.5, 0.5]]},
      {"name": "B", "states": ["t", "f"], "parents": ["A"], "cpt": [[0.5, 0.5], [0.5, 0.5]]}]})";
    const json err = s.post_raw("/api/v1/networks", cyclic, 400);
    CHECK(err["error"].get<std::string>().find("cycle through: A, B") != std::string::npos);
    s.post_raw("/api/v1/networks", "{not json", 400);

    std::string big = fixture_doc();
    big.insert(big.size() - 2, std::string(1 << 20, ' '));
    auto res = s.client().Post("/api/v1/networks", big, "application/json");
    REQUIRE(res);
    CHECK(res->status == 413);
  }

  TEST_CASE("query and pinned versions") {
    LiveService s;
    const std::string id = s.upload(fixture_doc());
    const json q = s.post(net(id, "/query"), {{"evidence", kReportNoSmoke}, {"target", "tampering=true"}}, 200);
    CHECK(std::abs(q["posterior"].get<double>() - 0.50) <= 0.005);

    // Evidence and target also accepted in the CLI's text form.
    const json q2 = s.post(net(id, "/query"),
                           {{"evidence", "report=true,smoke=false"},
                            {"target", {{"variable", "tampering"}, {"state", "true"}}}},
                           200);
    CHECK(q2["posterior"] == q["posterior"]);

    s.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", 0.3}}, 200);
    const json pinned = s.post(
        net(id, "/query"), {{"evidence", kReportNoSmoke}, {"target", "tampering=true"}, {"version", 0}}, 200);
    CHECK(pinned["posterior"] == q["posterior"]);
    CHECK(pinned["version"] == 0);
    const json latest =
        s.post(net(id, "/query"), {{"evidence", kReportNoSmoke}, {"target", "tampering=true"}}, 200);
    CHECK(latest["version"] == 1);
    CHECK(latest["posterior"].get<double>() > 0.9);

    s.post(net(id, "/query"), {{"target", "tampering=true"}, {"version", 7}}, 404);
    s.post(net("0123456789abcdef", "/query"), {{"target", "tampering=true"}}, 404);
    s.post(net(id, "/query"), {{"evidence", kReportNoSmoke}}, 400);
    s.post(net(id, "/query"), {{"target", "tampering=maybe"}}, 400);
    s.post(net(id, "/query"), {{"target", "smoke=true"}, {"evidence", kReportNoSmoke}}, 400);
  }

  TEST_CASE("impossible evidence is a conflict") {
    LiveService s;
    const std::string id = s.upload(read_file(testing::fixture_path("impossible_root.json")));
    const json err = s.post(net(id, "/query"), {{"evidence", {{"A", "t"}}}, {"target", "B=t"}}, 409);
    CHECK(err.contains("error"));
  }

  TEST_CASE("recommend") {
    LiveService s;
    const std::string id = s.upload(fixture_doc());
    const json gap = s.post(net(id, "/recommend"),
                            {{"evidence", kReportNoSmoke},
                             {"constraint", "P(tampering=true) - P(tampering=false) >= .3"}},
                            200);
    REQUIRE(gap["recommendations"].size() == 2);
    CHECK(gap["already_satisfied"] == false);
    CHECK(gap["parameters"].size() == 12);
    const json& top = gap["recommendations"][0];
    CHECK(top.contains("feasible_interval"));
    CHECK(top["param"].contains("parents"));

    const json five = s.post(net(id, "/recommend"),
                             {{"evidence", {{"smoke", "true"}, {"report", "false"}}},
                              {"constraint", "P(fire=true) >= .5"}},
                             200);
    CHECK(five["recommendations"].size() == 5);

    const json none = s.post(net(id, "/recommend"),
                             {{"evidence", kReportNoSmoke}, {"constraint", "P(tampering=true) >= .1"}}, 200);
    CHECK(none["recommendations"].empty());
    CHECK(none["already_satisfied"] == true);

    s.post(net(id, "/recommend"), {{"constraint", "P(fire=true) >> .5"}}, 400);
  }

  TEST_CASE("apply reports watch intervals") {
    LiveService s;
    const std::string id = s.upload(fixture_doc());
    const json w = s.post(net(id, "/watch"), {{"target", "fire=true"}, {"evidence", kReportNoSmoke}}, 201);
    CHECK(w["watches"] == 1);

    const json applied = s.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", 0.036}}, 200);
    CHECK(applied["version"] == 1);
    REQUIRE(applied["watches"].size() == 1);
    const json& report = applied["watches"][0];
    const double low = report["interval"]["low"], high = report["interval"]["high"];
    const double exact = report["exact"];
    CHECK(std::abs(low - 0.016) <= 0.002);
    CHECK(std::abs(high - 0.053) <= 0.002);
    CHECK(std::abs(exact - 0.021) <= 0.002);
    CHECK(low <= exact);
    CHECK(exact <= high);
    CHECK(std::abs(report["before"].get<double>() - 0.029) <= 0.001);
  }

  TEST_CASE("apply errors") {
    LiveService s;
    const std::string id = s.upload(fixture_doc());
    s.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", 1.5}}, 422);
    s.post(net(id, "/apply"), {{"param", kTamperingPrior}}, 400);
    s.post(net(id, "/apply"), {{"param", {{"variable", "tampering"}}}, {"new_tau", 0.5}}, 400);
    s.post(net(id, "/apply"),
           {{"param", {{"variable", "smoke"}, {"state", "true"}, {"parents", json::object()}}},
            {"new_tau", 0.5}},
           400);
    s.post(net("ffffffffffffffff", "/apply"), {{"param", kTamperingPrior}, {"new_tau", 0.5}}, 404);

    const std::string agree = s.upload(serialize_network(testing::agreement_network(0.3, 0.7)));
    s.post(net(agree, "/apply"),
           {{"param", {{"variable", "E"}, {"state", "true"}, {"parents", {{"X", "true"}, {"Y", "true"}}}}},
            {"new_tau", 0.5}},
           422);
    // Failed applies store nothing.
    CHECK(s.store().versions(id) == std::vector<std::size_t>{0});
  }

  TEST_CASE("revert and repeated apply") {
    LiveService s;
    const std::string id = s.upload(fixture_doc());
    const json body = {{"evidence", kReportNoSmoke}, {"target", "tampering=true"}};
    const json original = s.post(net(id, "/query"), body, 200);

    s.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", 0.2}}, 200);
    s.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", 0.2}}, 200);
    CHECK(s.store().get(id, 1)->same_model(*s.store().get(id, 2)));

    const json reverted = s.post(net(id, "/revert"), {{"version", 0}}, 200);
    CHECK(reverted["version"] == 3);
    CHECK(s.post(net(id, "/query"), body, 200)["posterior"] == original["posterior"]);
    s.post(net(id, "/revert"), {{"version", 42}}, 404);
    s.post(net(id, "/revert"), json::object(), 400);
  }

  TEST_CASE("export inline and to a directory") {
    const auto dir = std::filesystem::temp_directory_path() / "belief_tuner_export_test";
    std::filesystem::remove_all(dir);
    ServiceOptions opts;
    opts.export_dir = dir;
    LiveService with_dir(opts);
    const std::string id = with_dir.upload(fixture_doc());
    with_dir.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", 0.2}}, 200);
    const json files = with_dir.post(net(id, "/export"), json::object(), 200);
    REQUIRE(files["versions"].size() == 2);
    const std::string path = files["versions"][1]["path"];
    CHECK(parse_network(read_file(path)).same_model(*with_dir.store().get(id, 1)));
    std::filesystem::remove_all(dir);

    LiveService inline_export;
    const std::string id2 = inline_export.upload(fixture_doc());
    const json docs = inline_export.post(net(id2, "/export"), json::object(), 200);
    REQUIRE(docs["versions"].size() == 1);
    CHECK(parse_network(docs["versions"][0]["network"].dump()).same_model(testing::fire_alarm()));
  }

  TEST_CASE("watch limit and validation") {
    ServiceOptions opts;
    opts.max_watches = 2;
    LiveService s(opts);
    const std::string id = s.upload(fixture_doc());
    s.post(net(id, "/watch"), {{"target", "fire=true"}}, 201);
    s.post(net(id, "/watch"), {{"target", "ghost=true"}}, 400);
    s.post(net(id, "/watch"), {{"target", "fire=true"}, {"evidence", {{"fire", "true"}}}}, 400);
    s.post(net(id, "/watch"), {{"target", "alarm=true"}}, 201);
    s.post(net(id, "/watch"), {{"target", "smoke=true"}}, 422);
  }

  TEST_CASE("old versions are evicted") {
    ServiceOptions opts;
    opts.max_versions = 3;
    LiveService s(opts);
    const std::string id = s.upload(fixture_doc());
    for (double t : {0.1, 0.2, 0.3, 0.4}) {
      s.post(net(id, "/apply"), {{"param", kTamperingPrior}, {"new_tau", t}}, 200);
    }
    CHECK(s.store().versions(id) == std::vector<std::size_t>{2, 3, 4});
    s.post(net(id, "/query"), {{"target", "fire=true"}, {"version", 0}}, 404);
    s.post(net(id, "/query"), {{"target", "fire=true"}, {"version", 2}}, 200);
  }

  TEST_CASE("envelope endpoint") {
    LiveService s;
    auto res = s.client().Get("/api/v1/bounds/envelope?q0=0.9&lo=0.85&hi=0.95&step=0.01");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "text/csv");
    std::istringstream in(res->body);
    std::vector<std::string> rows;
    for (std::string l; std::getline(in, l);) rows.push_back(l);
    REQUIRE(rows.size() == 100);
    CHECK(rows[50].rfind("0.5,0.1785", 0) == 0);

    auto defaulted = s.client().Get("/api/v1/bounds/envelope?q0=0.6&lo=0.55&hi=0.65");
    REQUIRE(defaulted);
    CHECK(defaulted->status == 200);

    for (const char* bad : {"/api/v1/bounds/envelope?q0=0.9&lo=0.85&hi=0.95&step=2",
                            "/api/v1/bounds/envelope?q0=0.9&lo=0.85",
                            "/api/v1/bounds/envelope?q0=x&lo=0.85&hi=0.95",
                            "/api/v1/bounds/envelope?q0=0.5&lo=0.85&hi=0.95"}) {
      auto r = s.client().Get(bad);
      REQUIRE(r);
      CHECK(r->status == 400);
    }
  }

  TEST_CASE("concurrent apply and query see whole versions") {
    LiveService s;
    const std::string id = s.upload(fixture_doc());
    const Evidence e = testing::report_no_smoke();
    const Event y{"tampering", "true"};
    std::vector<double> allowed;
    for (double t : {0.02, 0.1, 0.4}) {
      allowed.push_back(posterior(apply_change(testing::fire_alarm(), testing::root_param("tampering"), t), y, e));
    }

    std::atomic<int> unexpected{0};
    std::atomic<int> failures{0};
    std::vector<std::thread> threads;
    for (int w = 0; w < 2; ++w) {
      threads.emplace_back([&, w] {
        auto c = s.client();
        for (int i = 0; i < 20; ++i) {
          const json body = {{"param", kTamperingPrior}, {"new_tau", (i + w) % 2 ? 0.1 : 0.4}};
          auto r = c.Post(net(id, "/apply"), body.dump(), "application/json");
          if (!r || r->status != 200) ++failures;
        }
      });
    }
    for (int r = 0; r < 3; ++r) {
      threads.emplace_back([&] {
        auto c = s.client();
        const json body = {{"evidence", kReportNoSmoke}, {"target", "tampering=true"}};
        for (int i = 0; i < 30; ++i) {
          auto res = c.Post(net(id, "/query"), body.dump(), "application/json");
          if (!res || res->status != 200) {
            ++failures;
            continue;
          }
          const double q = json::parse(res->body)["posterior"];
          bool ok = false;
          for (double a : allowed) ok = ok || std::abs(q - a) <= 1e-12;
          if (!ok) ++unexpected;
        }
      });
    }
    for (auto& t : threads) t.join();
    CHECK(failures == 0);
    CHECK(unexpected == 0);
    CHECK(s.store().versions(id).back() == 40);
  }
}
