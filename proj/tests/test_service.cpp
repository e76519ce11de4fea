#include "support.h"

#include <httplib.h>

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "acn/providers/scripted.h"
#include "acn/service/config.h"
#include "acn/service/engine.h"
#include "acn/service/http_server.h"

using namespace acn;
using namespace acn::service;
namespace fs = std::filesystem;

namespace {

fs::path demo_dir() { return test_support::fixtures() / "demo"; }
fs::path golden_dir() { return demo_dir() / "golden"; }

std::vector<std::string> demo_messages() {
  return json::parse(io::read_file(demo_dir() / "session.json")).at("messages").get<std::vector<std::string>>();
}

ServiceConfig demo_config(const fs::path& data) {
  auto cfg = load_config(demo_dir() / "demo.conf");
  cfg.data_dir = data;
  return cfg;
}

// Blocks Optimizer requests until released, so a run can be held open.
class GateChat : public providers::ChatProvider {
 public:
  explicit GateChat(std::shared_ptr<providers::ChatProvider> inner) : inner_(std::move(inner)) {}

  void wait_entered() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return entered_; });
  }
  void release() {
    std::lock_guard lock(mu_);
    open_ = true;
    cv_.notify_all();
  }

 protected:
  providers::ChatResponse do_complete(const providers::ChatRequest& req) override {
    if (req.role == "Optimizer") {
      std::unique_lock lock(mu_);
      entered_ = true;
      cv_.notify_all();
      cv_.wait(lock, [&] { return open_; });
    }
    return inner_->complete(req);
  }

 private:
  std::shared_ptr<providers::ChatProvider> inner_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool entered_ = false;
  bool open_ = false;
};

// Engine plus HTTP front end on a free port, served from a background thread.
struct Server {
  Engine engine;
  HttpService http;
  int port;
  std::thread thread;

  Server(ServiceConfig cfg, providers::ProviderSet ps)
      : engine(std::move(cfg), std::move(ps), make_clock("fixed:2024-01-01T00:00:00Z")),
        http(engine),
        port(http.bind("127.0.0.1", 0)),
        thread([this] { http.serve(); }) {
    while (!http.running()) std::this_thread::yield();
  }
  explicit Server(const ServiceConfig& cfg) : Server(cfg, make_providers(cfg)) {}
  ~Server() {
    http.stop();
    thread.join();
  }

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }
  httplib::Result post(const std::string& path, const json& body) const {
    return client().Post(path, body.dump(), "application/json");
  }
  httplib::Result get(const std::string& path) const { return client().Get(path); }
};

json body_of(const httplib::Result& r) { return json::parse(r->body); }

std::string create(const Server& s, const std::string& user) {
  auto r = s.post("/sessions", {{"user_id", user}});
  REQUIRE(r);
  REQUIRE(r->status == 201);
  return body_of(r).at("session_id").get<std::string>();
}

json message(const Server& s, const std::string& sid, const std::string& text) {
  auto r = s.post("/sessions/" + sid + "/messages", {{"text", text}});
  REQUIRE(r);
  CHECK(r->status == 200);
  return body_of(r);
}

std::string golden(const std::string& name) {
  std::string s = io::read_file(golden_dir() / name);
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

}  // namespace

TEST_CASE("config: parse, resolve, validate") {
  const auto cfg = parse_config(
      "# comment\nlisten.port = 9090\ndata.dir = state  # trailing\nprovider.chat = scripted:chat.json\n"
      "provider.vlm = scripted:vlm.json\nprovider.search = scripted:corpus\nprofile.gamma = 0.7\n"
      "retrieval.lambda = 0.25\nagents.max_steps = 5\nclock = fixed:2024-02-02T00:00:00Z\n",
      "/base");
  CHECK(cfg.port == 9090);
  CHECK(cfg.data_dir == fs::path("/base/state"));
  CHECK(cfg.similarity.gamma == 0.7);
  CHECK(cfg.filter.lambda == 0.25);
  CHECK(cfg.agents.max_steps == 5u);
  CHECK(cfg.clock == "fixed:2024-02-02T00:00:00Z");
  CHECK(text::contains(cfg.chat_provider, "/base"));
  CHECK_NOTHROW(cfg.validate());

  CHECK_ERROR(parse_config("nonsense line", "."), ErrorCode::Parse);
  CHECK_ERROR(parse_config("colour = blue", "."), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_config("profile.gamma = lots", "."), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_config("clock = tomorrow", "."), ErrorCode::InvalidArgument);
  CHECK_ERROR(ServiceConfig{}.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("config: environment overrides") {
  CHECK(env_name("profile.gamma") == "ACN_PROFILE_GAMMA");
  CHECK(env_name("retrieval.top_pages") == "ACN_RETRIEVAL_TOP_PAGES");
  ::setenv("ACN_RETRIEVAL_LAMBDA", "0.35", 1);
  ::setenv("ACN_LISTEN_PORT", "7001", 1);
  const auto cfg = load_config(demo_dir() / "demo.conf");
  ::unsetenv("ACN_RETRIEVAL_LAMBDA");
  ::unsetenv("ACN_LISTEN_PORT");
  CHECK(cfg.filter.lambda == 0.35);
  CHECK(cfg.port == 7001);
  CHECK(load_config(demo_dir() / "demo.conf").filter.lambda == 0.2);
}

TEST_CASE("clock specs") {
  CHECK(make_clock("fixed:X")() == "X");
  CHECK(make_clock("system")().size() == 20);
  CHECK_ERROR(make_clock("lunar"), ErrorCode::InvalidArgument);
}

TEST_CASE("http status mapping") {
  CHECK(http_status(ErrorCode::NotFound) == 404);
  CHECK(http_status(ErrorCode::Conflict) == 409);
  CHECK(http_status(ErrorCode::InvalidArgument) == 422);
  CHECK(http_status(ErrorCode::ProviderUnavailable) == 503);
  CHECK(http_status(ErrorCode::MalformedProviderOutput) == 500);
}

TEST_CASE("http: scripted session end to end") {
  test_support::TempDir dir;
  Server s(demo_config(dir.path() / "data"));

  auto health = s.get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(body_of(health).at("live_providers") == false);

  const std::string sid = create(s, "demo-user");
  CHECK(sid == "s0");
  const auto msgs = demo_messages();

  const auto r1 = message(s, sid, msgs[0]);
  CHECK(r1.at("outcome") == "reply");
  CHECK_FALSE(r1.at("reply").get<std::string>().empty());
  CHECK(message(s, sid, msgs[1]).at("outcome") == "profile_update");
  CHECK(message(s, sid, msgs[2]).at("outcome") == "clarify");
  const auto r4 = message(s, sid, msgs[3]);
  CHECK(r4.at("outcome") == "dispatch");
  CHECK(r4.at("article") == golden("turn-4.article.md"));

  auto trace = s.get("/sessions/s0/trace/" + r4.at("trace_id").get<std::string>());
  REQUIRE(trace);
  CHECK(trace->status == 200);
  CHECK(body_of(trace) == json::parse(io::read_file(golden_dir() / "turn-4.trace.json")));

  auto session = s.get("/sessions/s0");
  REQUIRE(session);
  CHECK(body_of(session).at("turns").size() == 4);

  auto prof = s.get("/profile/demo-user");
  REQUIRE(prof);
  CHECK(prof->status == 200);
  CHECK(text::contains(prof->body, "dislikes beef"));

  auto reports = s.get("/sessions/s0/rfo-reports");
  REQUIRE(reports);
  CHECK(body_of(reports).empty());

  // Feedback over the endpoint optimizes the latest trace.
  auto fb = s.post("/sessions/s0/feedback", {{"text", msgs[4]}});
  REQUIRE(fb);
  CHECK(fb->status == 202);
  CHECK(body_of(fb).at("rfo_report_id") == "r0");
  reports = s.get("/sessions/s0/rfo-reports");
  REQUIRE(body_of(reports).size() == 1);
  CHECK(body_of(reports)[0].at("trace_id") == r4.at("trace_id"));

  for (RoleId r : kAllRoles) {
    const auto file = agents::prompt_file_name(r);
    CHECK(io::read_file(dir.path() / "data" / "prompts" / file) == io::read_file(golden_dir() / "prompts" / file));
  }
}

TEST_CASE("http: error statuses") {
  test_support::TempDir dir;
  Server s(demo_config(dir.path() / "data"));
  const std::string sid = create(s, "demo-user");

  auto bad_json = s.client().Post("/sessions/" + sid + "/messages", "{not json", "application/json");
  REQUIRE(bad_json);
  CHECK(bad_json->status == 422);
  CHECK(body_of(bad_json).at("error") == "ParseError");
  auto missing = s.post("/sessions/" + sid + "/messages", {{"txt", "hi"}});
  CHECK(missing->status == 422);
  auto blank = s.post("/sessions/" + sid + "/messages", {{"text", "   "}});
  CHECK(blank->status == 422);
  CHECK(s.post("/sessions", json::object())->status == 422);
  CHECK(s.post("/sessions", {{"user_id", "../etc"}})->status == 422);

  CHECK(s.post("/sessions/s99/messages", {{"text", "hi"}})->status == 404);
  CHECK(s.post("/sessions/s99/feedback", {{"text", "bad"}})->status == 404);
  CHECK(s.post("/sessions/..%2F/feedback", {{"text", "bad"}})->status == 404);
  CHECK(s.get("/sessions/s99")->status == 404);
  CHECK(s.get("/sessions/" + sid + "/trace/t42")->status == 404);
  CHECK(s.get("/sessions/" + sid + "/trace/nope")->status == 404);
  CHECK(s.get("/profile/nobody")->status == 404);
  auto unknown = s.get("/nowhere");
  CHECK(unknown->status == 404);
  CHECK(body_of(unknown).at("error") == "NotFound");

  // Feedback before any answer exists.
  CHECK(s.post("/sessions/" + sid + "/feedback", {{"text", "meh"}})->status == 422);
}

TEST_CASE("http: provider outage maps to 503") {
  test_support::TempDir dir;
  auto cfg = demo_config(dir.path() / "data");
  auto ps = make_providers(cfg);
  ps.chat = std::make_shared<providers::ScriptedChat>(
      json::parse(R"({"rules": [{"role": "AccountManager", "response": {"error": "offline"}}]})"));
  Server s(cfg, ps);
  const std::string sid = create(s, "u");
  auto r = s.post("/sessions/" + sid + "/messages", {{"text", "Hi there!"}});
  REQUIRE(r);
  CHECK(r->status == 503);
  CHECK(body_of(r).at("error") == "ProviderUnavailable");
  // The failed turn leaves nothing behind.
  CHECK(body_of(s.get("/sessions/" + sid)).at("turns").empty());
}

TEST_CASE("http: concurrent feedback is a conflict") {
  test_support::TempDir dir;
  auto cfg = demo_config(dir.path() / "data");
  auto ps = make_providers(cfg);
  auto gate = std::make_shared<GateChat>(ps.chat);
  ps.chat = gate;
  Server s(cfg, ps);
  const std::string sid = create(s, "demo-user");
  const auto msgs = demo_messages();
  for (std::size_t k = 0; k < 4; ++k) message(s, sid, msgs[k]);

  int first_status = 0;
  std::thread first([&] {
    auto r = s.post("/sessions/" + sid + "/feedback", {{"text", msgs[4]}});
    first_status = r ? r->status : -1;
  });
  gate->wait_entered();
  auto second = s.post("/sessions/" + sid + "/feedback", {{"text", msgs[4]}});
  gate->release();
  first.join();
  REQUIRE(second);
  CHECK(second->status == 409);
  CHECK(body_of(second).at("error") == "Conflict");
  CHECK(first_status == 202);
  CHECK(body_of(s.get("/sessions/" + sid + "/rfo-reports")).size() == 1);
}

TEST_CASE("restart resumes with identical traces") {
  test_support::TempDir dir;
  const auto msgs = demo_messages();
  const auto cfg = demo_config(dir.path() / "data");
  {
    Engine e(cfg, make_providers(cfg), make_clock(cfg.clock));
    const auto sid = e.create_session("demo-user");
    for (std::size_t k = 0; k < 3; ++k) e.post_message(sid, msgs[k]);
  }
  Engine e(cfg, make_providers(cfg), make_clock(cfg.clock));
  for (std::size_t k = 3; k < msgs.size(); ++k) e.post_message("s0", msgs[k]);
  const auto s = e.session("s0");
  REQUIRE(s.turns.size() == msgs.size());
  for (std::size_t k = 0; k < s.turns.size(); ++k) {
    CAPTURE(k);
    CHECK(e.trace_json("s0", s.turns[k].trace_id) ==
          json::parse(io::read_file(golden_dir() / ("turn-" + std::to_string(k + 1) + ".trace.json"))));
  }
  CHECK(to_json(s) == json::parse(io::read_file(golden_dir() / "session.json")));
  CHECK(e.rfo_reports("s0").size() == 1);
  const auto images = e.image_archive("s0");
  std::set<std::string> urls;
  for (const auto& img : images) CHECK(urls.insert(img.url).second);
}

TEST_CASE("corrupt profile is isolated to its user") {
  test_support::TempDir dir;
  Server s(demo_config(dir.path() / "data"));
  const auto a = create(s, "alice");
  const auto b = create(s, "bob");
  message(s, a, "By the way, I really dislike beef.");
  message(s, b, "By the way, I really dislike beef.");
  std::ofstream(dir.path() / "data" / "profiles" / "alice.json") << "{ truncated";

  CHECK(s.get("/profile/alice")->status == 503);
  auto broken = s.post("/sessions/" + a + "/messages", {{"text", "By the way, I really dislike beef."}});
  CHECK(broken->status == 503);
  CHECK(s.get("/profile/bob")->status == 200);
  CHECK(message(s, b, "Hi there!").at("outcome") == "reply");
}

TEST_CASE("concurrent sessions stay independent") {
  test_support::TempDir dir;
  Server s(demo_config(dir.path() / "data"));
  constexpr int kSessions = 4;
  std::vector<std::string> sids(kSessions);
  std::vector<std::vector<std::string>> traces(kSessions);
  std::vector<std::thread> threads;
  for (int i = 0; i < kSessions; ++i) {
    threads.emplace_back([&, i] {
      auto c = s.client();
      auto r = c.Post("/sessions", json{{"user_id", "user" + std::to_string(i)}}.dump(), "application/json");
      if (!r || r->status != 201) return;
      sids[i] = json::parse(r->body).at("session_id").get<std::string>();
      for (const char* text : {"Hi there!", "By the way, I really dislike beef."}) {
        auto m = c.Post("/sessions/" + sids[i] + "/messages", json{{"text", text}}.dump(), "application/json");
        if (m && m->status == 200) traces[i].push_back(json::parse(m->body).at("trace_id").get<std::string>());
      }
    });
  }
  for (auto& t : threads) t.join();

  std::set<std::string> all_sids, all_traces;
  for (int i = 0; i < kSessions; ++i) {
    CHECK(all_sids.insert(sids[i]).second);
    REQUIRE(traces[i].size() == 2);
    for (const auto& t : traces[i]) CHECK(all_traces.insert(t).second);
    const auto session = body_of(s.get("/sessions/" + sids[i]));
    CHECK(session.at("user_id") == "user" + std::to_string(i));
    CHECK(session.at("turns").size() == 2);
    CHECK(text::contains(body_of(s.get("/profile/user" + std::to_string(i))).dump(), "dislikes beef"));
  }
}
