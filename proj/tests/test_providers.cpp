#include "support.h"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "acn/providers/http.h"
#include "acn/providers/providers.h"
#include "acn/providers/scripted.h"

using namespace acn;
using namespace acn::providers;

namespace {

ChatRequest am_request(std::string user_text) {
  ChatRequest r;
  r.role = "AccountManager";
  r.system_prompt = "sys";
  r.messages.push_back({Speaker::User, std::move(user_text)});
  r.available_functions = role_registry(RoleId::AccountManager);
  return r;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("scripted chat: exact match returns the canned function call") {
  ScriptedChat chat(json::parse(R"({
    "rules": [
      {"role": "AccountManager", "match": "Hello  THERE",
       "response": {"function_call": {"name": "NormalReply", "arguments": {"content": "hi!"}}}},
      {"role": "AccountManager", "system_contains": "vip",
       "response": {"function_call": {"name": "NormalReply", "arguments": {"content": "welcome back"}}}}
    ],
    "defaults": {"AccountManager": {"text": "fallback"}}
  })"));
  auto r = chat.complete(am_request("hello there"));
  REQUIRE(r.is_call());
  CHECK(r.function_call->name == "NormalReply");
  CHECK(r.function_call->arg("content") == "hi!");

  auto vip = am_request("something else");
  vip.system_prompt = "a vip customer";
  CHECK(chat.complete(vip).function_call->arg("content") == "welcome back");
  CHECK(chat.complete(am_request("unmatched")).assistant_text == "fallback");
  CHECK(chat.calls() == 3);
}

TEST_CASE("scripted chat: unknown function is malformed") {
  ScriptedChat chat(json::parse(R"({"defaults": {"AccountManager":
    {"function_call": {"name": "Teleport", "arguments": {}}}}})"));
  CHECK_ERROR(chat.complete(am_request("go")), ErrorCode::MalformedProviderOutput);
}

TEST_CASE("scripted chat: empty messages is a precondition violation") {
  ScriptedChat chat(json::parse(R"({"defaults": {"AccountManager": {"text": "x"}}})"));
  auto req = am_request("x");
  req.messages.clear();
  CHECK_ERROR(chat.complete(req), ErrorCode::Precondition);
  CHECK(chat.calls() == 0);
}

TEST_CASE("scripted chat: response sequences, errors, missing rules") {
  ScriptedChat chat(json::parse(R"({"rules": [
    {"role": "SolutionStrategist", "responses": [{"text": "one"}, {"text": "two"}]},
    {"role": "Judge", "response": {"error": "down"}}
  ]})"));
  ChatRequest req;
  req.role = "SolutionStrategist";
  req.messages = {{Speaker::User, "q"}};
  CHECK(chat.complete(req).assistant_text == "one");
  req.messages.push_back({Speaker::Assistant, "one"});
  req.messages.push_back({Speaker::FunctionResult, "ok"});
  CHECK(chat.complete(req).assistant_text == "two");
  req.messages.push_back({Speaker::Assistant, "two"});
  CHECK(chat.complete(req).assistant_text == "two");
  req.role = "Judge";
  CHECK_ERROR(chat.complete(req), ErrorCode::ProviderUnavailable);
  req.role = "Nobody";
  CHECK_ERROR(chat.complete(req), ErrorCode::ProviderUnavailable);
}

TEST_CASE("validate_response: registry and argument checks") {
  auto req = am_request("x");
  validate_response(req, ChatResponse::text("plain"));
  validate_response(req, ChatResponse::call("TrackingUserPreferences", {{"text", "t"}, {"attitude", "Negative"}}));
  CHECK_ERROR(validate_response(req, ChatResponse::call("TrackingUserPreferences", {{"text", "t"}, {"attitude", "Meh"}})),
              ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(validate_response(req, ChatResponse::call("NormalReply", {})), ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(validate_response(req, ChatResponse::call("NormalReply", {{"content", "a"}, {"extra", "b"}})),
              ErrorCode::MalformedProviderOutput);
  ChatResponse both = ChatResponse::text("a");
  both.function_call = FunctionCall{"NormalReply", {{"content", "b"}}};
  CHECK_ERROR(validate_response(req, both), ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(validate_response(req, ChatResponse{}), ErrorCode::MalformedProviderOutput);
}

TEST_CASE("chat response JSON and text lists") {
  auto r = chat_response_from_json(json::parse(R"({"function_call": {"name": "F", "arguments": {"a": ["1", 2]}}})"));
  CHECK(r.function_call->arg("a") == R"(["1",2])");
  CHECK(parse_text_list(r.function_call->arg("a")) == std::vector<std::string>{"1", "2"});
  CHECK(parse_text_list("").empty());
  CHECK(parse_text_list("None").empty());
  CHECK(parse_text_list("null").empty());
  CHECK_ERROR(parse_text_list("three, four"), ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(chat_response_from_json(json::parse(R"({"nothing": 1})")), ErrorCode::MalformedProviderOutput);
  const auto j = to_json(ChatResponse::call("G", {{"k", "v"}}));
  CHECK(chat_response_from_json(j).function_call->arg("k") == "v");
}

TEST_CASE("scripted embedder") {
  ScriptedEmbedder e(64);
  const auto a = e.embed("protein rich foods");
  const auto b = e.embed("protein rich foods");
  CHECK(a.dense == b.dense);
  CHECK(a.lexical == b.lexical);
  const auto c1 = e.embed("cats");
  CHECK(cosine(c1.dense, e.embed("cats").dense) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_ERROR(e.embed(""), ErrorCode::Precondition);
  CHECK(a.lexical.at("protein") == 1.0);

  EmbeddingPair pinned{std::vector<double>(64, 0.0), {}};
  pinned.dense[0] = 1;
  ScriptedEmbedder o(64, {{"pinned", pinned}});
  CHECK(o.embed("pinned").dense == pinned.dense);
  CHECK_ERROR(ScriptedEmbedder(4, {{"bad", pinned}}), ErrorCode::DimensionMismatch);
  CHECK_ERROR(ScriptedEmbedder(0), ErrorCode::InvalidArgument);
}

TEST_CASE("scripted VLM against the demo fixture table") {
  auto vlm = ScriptedVlm::from_file(test_support::fixtures() / "demo" / "vlm.json");
  const auto c = vlm->caption_image("", "https://nutrition.example/img/beef-steak.jpg");
  CHECK(c.caption == "Grilled lean beef steak");
  CHECK_FALSE(c.summary.empty());
  const auto rfo = vlm->caption_image("Here is a diagram of RFO in action.", "https://docs.example/img/flow.png");
  CHECK(text::contains(rfo.caption, "RFO"));
  CHECK_FALSE(text::contains(vlm->caption_image("unrelated", "https://docs.example/img/flow.png").caption, "RFO"));
  CHECK_ERROR(vlm->caption_image("", "https://nowhere.example/x.png"), ErrorCode::ProviderUnavailable);
  CHECK_ERROR(vlm->caption_image("", ""), ErrorCode::Precondition);
}

TEST_CASE("fixture search") {
  FixtureSearch s(test_support::fixtures() / "demo" / "corpus");
  const auto hits = s.web_search("muscle diet", 5);
  REQUIRE(hits.size() == 5);
  for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i].rank == i + 1);
  CHECK(s.web_search("quantum chromodynamics", 3).empty());
  CHECK_ERROR(s.web_search("muscle diet", 0), ErrorCode::Precondition);
  bool saw_404 = false;
  for (const auto& h : s.web_search("protein muscle", 10)) saw_404 |= h.status == 404;
  CHECK(saw_404);
}

TEST_CASE("provider factory specs") {
  const auto dir = test_support::fixtures() / "demo";
  CHECK_FALSE(make_chat("scripted:" + (dir / "chat.json").string())->is_live());
  CHECK(make_embedder("scripted:", 32)->dimension() == 32);
  CHECK(make_chat("http://127.0.0.1:1/chat")->is_live());
  CHECK(make_search("http:http://127.0.0.1:1/search")->is_live());
  CHECK_ERROR(make_chat("carrier-pigeon:x"), ErrorCode::InvalidArgument);
  CHECK_ERROR(make_chat("nocolon"), ErrorCode::InvalidArgument);
  CHECK_ERROR(make_chat("scripted:/does/not/exist.json"), ErrorCode::ProviderUnavailable);
}

TEST_CASE("http adapters against a local mock server") {
  httplib::Server mock;
  json last_chat;
  mock.Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
    last_chat = json::parse(req.body);
    res.set_content(R"({"function_call": {"name": "NormalReply", "arguments": {"content": "pong"}}})",
                    "application/json");
  });
  mock.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
    const auto t = json::parse(req.body).at("text").get<std::string>();
    res.set_content(json{{"dense", {1.0, 0.0}}, {"lexical", {{t, 1.0}}}}.dump(), "application/json");
  });
  mock.Post("/vlm", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"caption": "c", "summary": "s"})", "application/json");
  });
  mock.Post("/search", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"hits": [{"url": "u1", "raw_content": "x"}, {"url": "u2", "status": 404}]})",
                    "application/json");
  });
  mock.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  mock.Post("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = mock.bind_to_any_port("127.0.0.1");
  std::thread th([&] { mock.listen_after_bind(); });
  struct Joiner {
    httplib::Server& s;
    std::thread& t;
    ~Joiner() {
      s.stop();
      if (t.joinable()) t.join();
    }
  } joiner{mock, th};
  mock.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  HttpChat chat(HttpEndpoint::parse(base + "/chat"));
  const auto r = chat.complete(am_request("ping"));
  CHECK(r.function_call->arg("content") == "pong");
  CHECK(last_chat.at("role") == "AccountManager");
  CHECK(last_chat.at("messages").size() == 1);

  HttpEmbedder emb(HttpEndpoint::parse(base + "/embed"), 2);
  CHECK(emb.embed("w").lexical.at("w") == 1.0);
  HttpEmbedder wrong_dim(HttpEndpoint::parse(base + "/embed"), 3);
  CHECK_ERROR(wrong_dim.embed("w"), ErrorCode::MalformedProviderOutput);

  HttpVlm vlm(HttpEndpoint::parse(base + "/vlm"));
  CHECK(vlm.caption_image("ctx", "u").caption == "c");

  HttpSearch search(HttpEndpoint::parse(base + "/search"));
  const auto hits = search.web_search("q", 5);
  REQUIRE(hits.size() == 2);
  CHECK(hits[1].rank == 2);
  CHECK(hits[1].status == 404);

  HttpChat broken(HttpEndpoint::parse(base + "/broken"));
  CHECK_ERROR(broken.complete(am_request("x")), ErrorCode::MalformedProviderOutput);
  HttpChat down(HttpEndpoint::parse(base + "/down"));
  CHECK_ERROR(down.complete(am_request("x")), ErrorCode::ProviderUnavailable);

  mock.stop();
  th.join();
  HttpChat gone(HttpEndpoint::parse(base + "/chat"));
  CHECK_ERROR(gone.complete(am_request("x")), ErrorCode::ProviderUnavailable);
  CHECK_ERROR(HttpEndpoint::parse("localhost:80"), ErrorCode::InvalidArgument);
}

TEST_CASE("scripted embedder: degenerate texts still embed to something") {
  ScriptedEmbedder e(16);
  for (const std::string t : {"the and is", "!!!", "  ?  "}) {
    CAPTURE(t);
    const auto p = e.embed(t);
    CHECK_FALSE(p.lexical.empty());
    CHECK(std::any_of(p.dense.begin(), p.dense.end(), [](double x) { return x != 0.0; }));
  }
  // Content words win over stopwords when both are present.
  CHECK(e.embed("the beef").lexical == std::map<std::string, double>{{"beef", 1.0}});
}
