#include <filesystem>
#include <thread>

#include "adaptmt/error.hpp"
#include "adaptmt/harness.hpp"
#include "adaptmt/server.hpp"
#include "adaptmt/version.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"

using namespace adaptmt;
using nlohmann::json;

namespace {

Clock ticking_clock() {
  return [t = 0.0]() mutable { return t += 0.125; };
}

ServiceOptions quiet_options() {
  ServiceOptions o;
  o.clock = ticking_clock();
  return o;
}

json lines(const ParallelCorpus& corpus, bool target) {
  json out = json::array();
  for (const auto& p : corpus.pairs()) out.push_back(join(target ? p.target : p.source));
  return out;
}

json test_document(std::size_t first, std::size_t count) {
  const auto& pairs = testing::small_task().in_domain_test.pairs();
  json src = json::array(), ref = json::array();
  for (std::size_t i = first; i < first + count; ++i) {
    src.push_back(join(pairs[i].source));
    ref.push_back(join(pairs[i].target));
  }
  return {{"name", "T" + std::to_string(first)}, {"source", src}, {"reference", ref}};
}

std::string new_session(WorkbenchService& s, const std::string& mode, const json& doc) {
  const auto d = s.create_document(doc);
  return s.create_session({{"document_id", d.at("document_id")}, {"mode", mode}}).at("session_id");
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("health reports version and checkpoint") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto r = s.handle("GET", "/health", "");
  CHECK(r.status == 200);
  CHECK(r.body.at("version") == kVersion);
  CHECK(r.body.at("checkpoint_hash") == "small-fixture");
}

TEST_CASE("document upload validation") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto ok = s.handle("POST", "/documents", R"({"name":"d","source":"a b\nc d\n"})");
  CHECK(ok.status == 201);
  CHECK(ok.body.at("segments") == 2);
  CHECK(s.handle("POST", "/documents", R"({"source":["a"],"reference":["x","y"]})").status == 400);
  CHECK(s.handle("POST", "/documents", R"({"source":["a",""]})").status == 400);
  CHECK(s.handle("POST", "/documents", "{\"source\":[\"a \xC0\xAF\"]}").status == 400);
  CHECK(s.handle("POST", "/documents", R"({"name":"no source"})").status == 400);
  CHECK(s.handle("POST", "/documents", "not json").status == 400);
}

TEST_CASE("session creation errors") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const std::string doc = s.create_document(test_document(0, 2)).at("document_id");
  const auto unknown_doc = s.handle("POST", "/sessions", R"({"document_id":"doc-99"})");
  CHECK(unknown_doc.status == 404);
  CHECK(unknown_doc.body.at("error").get<std::string>().find("doc-99") != std::string::npos);
  const auto unknown_ck = s.handle("POST", "/sessions", json{{"document_id", doc}, {"checkpoint", "abc"}}.dump());
  CHECK(unknown_ck.status == 404);
  CHECK(unknown_ck.body.at("error").get<std::string>().find("abc") != std::string::npos);
  CHECK(s.handle("POST", "/sessions", json{{"document_id", doc}, {"mode", "fast"}}.dump()).status == 400);
  CHECK(s.handle("GET", "/sessions/session-42/report", "").status == 404);
  CHECK(s.handle("POST", "/nowhere", "").status == 404);
}

TEST_CASE("translate and confirm follow the document order") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto id = new_session(s, "adaptive", test_document(0, 3));
  const std::string base = "/sessions/" + id;

  CHECK(s.handle("POST", base + "/confirm", R"({"index":1,"post_edit":"x"})").status == 409);
  const auto early = s.handle("POST", base + "/translate", R"({"index":2})");
  CHECK(early.status == 409);
  CHECK(early.body.at("error").get<std::string>().find("expected segment 1") != std::string::npos);
  CHECK(s.handle("POST", base + "/translate", R"({"index":9})").status == 400);

  const auto first = s.handle("POST", base + "/translate", R"({"index":1})");
  REQUIRE(first.status == 200);
  const auto again = s.handle("POST", base + "/translate", R"({"index":1})");
  CHECK(again.body.at("hypothesis") == first.body.at("hypothesis"));

  const auto confirmed = s.handle(
      "POST", base + "/confirm",
      json{{"index", 1}, {"post_edit", first.body.at("hypothesis")}, {"edit_duration", 4.5}}.dump());
  REQUIRE(confirmed.status == 200);
  CHECK(confirmed.body.at("record").at("hter") == 0.0);
  CHECK(confirmed.body.at("update_latency").get<double>() > 0.0);
  CHECK(confirmed.body.at("record").at("sgd_steps") == 2);
  CHECK_FALSE(confirmed.body.contains("warning"));

  CHECK(s.handle("POST", base + "/translate", R"({"index":1})").status == 409);
  CHECK(s.handle("POST", base + "/confirm", R"({"index":2,"post_edit":"x"})").status == 409);
  CHECK(s.handle("POST", base + "/translate", R"({"index":2})").status == 200);
  CHECK(s.handle("POST", base + "/confirm", R"({"index":2,"post_edit":""})").status == 400);
  CHECK(s.handle("POST", base + "/confirm", R"({"index":2,"post_edit":"a","edit_duration":"slow"})").status == 400);
}

TEST_CASE("static sessions never update") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto id = new_session(s, "static", test_document(0, 2));
  for (int i = 1; i <= 2; ++i) {
    const auto hyp = s.translate(id, {{"index", i}});
    const auto c = s.confirm(id, {{"index", i}, {"post_edit", "yo bumu"}});
    CHECK(c.at("update_latency") == 0.0);
    CHECK(c.at("record").at("sgd_steps") == 0);
    CHECK(c.at("record").at("version") == 1);
    CHECK(hyp.at("hypothesis").get<std::string>() ==
          join(translate(*testing::small_system(), testing::small_task().in_domain_test.pairs()[i - 1].source).text));
  }
  const auto report = s.report(id);
  CHECK(report.at("systems").at(0).at("sentences") == 2);
  CHECK(report.at("systems").at(0).at("latency").at("mean_update").is_null());
}

TEST_CASE("sessions over one checkpoint are isolated") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto a = new_session(s, "adaptive", test_document(0, 6));
  const auto b = new_session(s, "adaptive", test_document(0, 6));
  const auto& pairs = testing::small_task().in_domain_test.pairs();
  for (int i = 1; i <= 5; ++i) {
    s.translate(a, {{"index", i}});
    s.confirm(a, {{"index", i}, {"post_edit", "vi vi vi vi vi vi"}});
  }
  const auto probe = s.translate(b, {{"index", 1}});
  CHECK(probe.at("hypothesis").get<std::string>() == join(translate(*testing::small_system(), pairs[0].source).text));
}

TEST_CASE("a repeated segment moves toward its post-edit") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto& pair = testing::small_task().in_domain_test.pairs()[1];
  const std::string src = join(pair.source), ref = join(pair.target);
  const auto id = new_session(s, "adaptive", json{{"name", "rep"}, {"source", {src, src}}});
  const auto first = s.translate(id, {{"index", 1}});
  const auto c1 = s.confirm(id, {{"index", 1}, {"post_edit", ref}});
  const auto second = s.translate(id, {{"index", 2}});
  const double before = c1.at("record").at("hter");
  const double after = ter(tokenize(second.at("hypothesis").get<std::string>()), pair.target).value;
  CHECK(after <= before);
}

TEST_CASE("blind pair hides modes until close") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const std::string d1 = s.create_document(test_document(0, 3)).at("document_id");
  const std::string d2 = s.create_document(test_document(3, 3)).at("document_id");
  const auto pair = s.handle("POST", "/sessions", json{{"mode", "blind-pair"}, {"documents", {d1, d2}}}.dump());
  REQUIRE(pair.status == 201);
  REQUIRE(pair.body.at("sessions").size() == 2);
  CHECK(s.handle("POST", "/sessions", R"({"mode":"blind-pair","documents":["doc-1"]})").status == 400);

  std::vector<std::string> modes;
  for (const auto& h : pair.body.at("sessions")) {
    CHECK_FALSE(h.contains("mode"));
    CHECK(h.at("blind") == true);
    const std::string id = h.at("session_id");
    for (int i = 1; i <= 3; ++i) {
      const auto t = s.translate(id, {{"index", i}});
      const auto c = s.confirm(id, {{"index", i}, {"post_edit", t.at("hypothesis")}});
      CHECK_FALSE(c.dump().find("mode") != std::string::npos);
      CHECK_FALSE(c.contains("update_latency"));
    }
    const auto hidden = s.handle("GET", "/sessions/" + id + "/report", "");
    CHECK(hidden.status == 200);
    CHECK(hidden.body.dump().find("\"mode\"") == std::string::npos);
    CHECK(s.handle("GET", "/sessions/" + id + "/log", "").status == 409);

    const auto closed = s.handle("POST", "/sessions/" + id + "/close", "");
    CHECK(closed.status == 200);
    modes.push_back(closed.body.at("mode"));
    const auto revealed = s.report(id);
    CHECK(revealed.at("systems").at(0).at("mode") == modes.back());

    const auto download = s.handle("GET", "/sessions/" + id + "/log", "");
    REQUIRE(download.text);
    const auto log = parse_log(*download.text);
    CHECK(log.records.size() == 3);
    const auto replayed = replay_log(testing::small_system(), log, ticking_clock());
    CHECK(replayed.mismatches.empty());
    CHECK(s.handle("POST", "/sessions/" + id + "/translate", R"({"index":1})").status == 409);
  }
  std::sort(modes.begin(), modes.end());
  CHECK(modes == std::vector<std::string>{"adaptive", "static"});
}

TEST_CASE("report numbers match recomputation from the log") {
  WorkbenchService s(testing::small_system(), quiet_options());
  const auto id = new_session(s, "adaptive", test_document(0, 5));
  const auto& pairs = testing::small_task().in_domain_test.pairs();
  for (int i = 1; i <= 5; ++i) {
    s.translate(id, {{"index", i}});
    s.confirm(id, {{"index", i}, {"post_edit", join(pairs[i - 1].target)}, {"edit_duration", 2.0 * i}});
  }
  const auto report = s.report(id);
  CHECK(report.at("systems").at(0).at("sentences") == 5);
  ReportOptions ro;
  ro.test_name = "T0";
  ro.scored_against = "post-edit";
  const auto recomputed = build_report({parse_log(s.log(id))}, ro);
  CHECK(report.at("systems").at(0).at("ter").get<double>() == recomputed.systems[0].ter);
  CHECK(report.at("systems").at(0).at("bleu").get<double>() == recomputed.systems[0].bleu);
  CHECK(report.at("systems").at(0).at("mean_edit_duration").get<double>() == 6.0);
}

TEST_CASE("failed updates roll back and warn") {
  auto options = quiet_options();
  options.session_defaults.policy.learning_rate = 1e300;
  WorkbenchService s(testing::small_system(), options);
  const auto id = new_session(s, "adaptive", test_document(0, 2));
  const auto t = s.translate(id, {{"index", 1}});
  const auto c = s.handle("POST", "/sessions/" + id + "/confirm", json{{"index", 1}, {"post_edit", "vi"}}.dump());
  CHECK(c.status == 200);
  CHECK(c.body.contains("warning"));
  CHECK(c.body.at("record").at("version") == 1);
  const auto next = s.translate(id, {{"index", 2}});
  CHECK(next.at("hypothesis").get<std::string>() ==
        join(translate(*testing::small_system(), testing::small_task().in_domain_test.pairs()[1].source).text));
}

TEST_CASE("a restarted service resumes from its logs") {
  TempDir dir("adaptmt-server-resume");
  auto options = quiet_options();
  options.log_dir = dir.path;
  const auto& pairs = testing::small_task().in_domain_test.pairs();
  std::string id, expected;
  {
    WorkbenchService s(testing::small_system(), options);
    id = new_session(s, "adaptive", test_document(0, 5));
    for (int i = 1; i <= 3; ++i) {
      s.translate(id, {{"index", i}});
      s.confirm(id, {{"index", i}, {"post_edit", join(pairs[i - 1].target)}});
    }
    expected = s.translate(id, {{"index", 4}}).at("hypothesis");
  }
  WorkbenchService restarted(testing::small_system(), options);
  CHECK(restarted.resume() == 1);
  CHECK(restarted.translate(id, {{"index", 4}}).at("hypothesis") == expected);
  CHECK(restarted.handle("POST", "/sessions/" + id + "/translate", R"({"index":1})").status == 409);
  const auto fresh = new_session(restarted, "static", test_document(0, 1));
  CHECK(fresh != id);
}

TEST_CASE("HTTP round trip") {
  WorkbenchService s(testing::small_system(), quiet_options());
  auto server = make_http_server(s);
  const int port = server->bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server->listen_after_bind(); });
  server->wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body).at("checkpoint_hash") == "small-fixture");

  auto doc = client.Post("/documents", test_document(0, 1).dump(), "application/json");
  REQUIRE(doc);
  CHECK(doc->status == 201);
  const std::string doc_id = json::parse(doc->body).at("document_id");
  auto session = client.Post("/sessions", json{{"document_id", doc_id}, {"mode", "adaptive"}}.dump(), "application/json");
  REQUIRE(session);
  const std::string id = json::parse(session->body).at("session_id");
  auto t = client.Post("/sessions/" + id + "/translate", R"({"index":1})", "application/json");
  REQUIRE(t);
  CHECK(t->status == 200);
  auto c = client.Post("/sessions/" + id + "/confirm", R"({"index":1,"post_edit":"yo bumu","edit_duration":3})",
                       "application/json");
  REQUIRE(c);
  CHECK(c->status == 200);
  auto log = client.Get("/sessions/" + id + "/log");
  REQUIRE(log);
  CHECK(log->get_header_value("Content-Type") == "application/x-ndjson");
  CHECK(parse_log(log->body).records.size() == 1);
  auto missing = client.Get("/sessions/nope/report");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server->stop();
  worker.join();
}
