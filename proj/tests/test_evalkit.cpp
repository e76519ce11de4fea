#include "support.h"

#include <functional>

#include "acn/evalkit/evalkit.h"
#include "acn/providers/scripted.h"

using namespace acn;
using namespace acn::evalkit;
using providers::ChatRequest;
using providers::ChatResponse;

namespace {

class FnChat : public providers::ChatProvider {
 public:
  explicit FnChat(std::function<ChatResponse(const ChatRequest&)> f) : f_(std::move(f)) {}

 protected:
  ChatResponse do_complete(const ChatRequest& req) override { return f_(req); }

 private:
  std::function<ChatResponse(const ChatRequest&)> f_;
};

// Text between "[label]\n" and the next blank-line section.
std::string slot(const std::string& s, const std::string& label) {
  const auto at = s.find("[" + label + "]\n");
  if (at == std::string::npos) return {};
  const auto start = at + label.size() + 3;
  return s.substr(start, s.find("\n\n[", start) - start);
}

JudgeVerdict verdict(Winner w, Criterion c = Criterion::Richness) { return {w, c, ""}; }

PairJudgment judged(std::string id, std::string topic, FinalResult f, Criterion c = Criterion::Richness) {
  PairJudgment j;
  j.judgment_id = std::move(id);
  j.pair_id = j.judgment_id;
  j.topic = std::move(topic);
  j.system_a = "acn";
  j.system_b = "baseline";
  j.criterion = c;
  j.final = f;
  return j;
}

const RateBucket& bucket(const TallyReport& r, const std::string& topic, const std::string& criterion = "richness") {
  for (const auto& b : r.buckets) {
    if (b.topic == topic && b.criterion == criterion) return b;
  }
  FAIL("no bucket for " << topic << "/" << criterion);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("default taxonomy shape and JSON round trip") {
  const auto t = default_taxonomy();
  CHECK(t.main_topics.size() == kDefaultMainTopics);
  for (const auto& m : t.main_topics) CHECK_FALSE(m.subtopics.empty());
  for (Attitude a : {Attitude::Positive, Attitude::Neutral, Attitude::Negative}) CHECK_FALSE(t.attitudes.at(a).empty());
  CHECK(to_json(taxonomy_from_json(to_json(t))).dump() == to_json(t).dump());

  auto broken = t;
  broken.main_topics[0].subtopics.clear();
  CHECK_ERROR(broken.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("parse_turn_range and parse_criteria") {
  CHECK(parse_turn_range("3..10") == std::pair<std::size_t, std::size_t>{3, 10});
  CHECK(parse_turn_range("4") == std::pair<std::size_t, std::size_t>{4, 4});
  CHECK_ERROR(parse_turn_range("0..2"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_turn_range("5..2"), ErrorCode::InvalidArgument);
  CHECK_ERROR(parse_turn_range("a..b"), ErrorCode::InvalidArgument);

  CHECK(parse_criteria("all").size() == std::size(kAllCriteria));
  CHECK(parse_criteria("richness,personalization") ==
        std::vector<Criterion>{Criterion::Richness, Criterion::Personalization});
  for (Criterion c : kAllCriteria) CHECK(criterion_from_string(to_string(c)) == c);
  CHECK_THROWS(parse_criteria("charm"));
}

TEST_CASE("attitude probabilities") {
  CHECK_NOTHROW(validate_probs(uniform_attitudes()));
  CHECK_ERROR(validate_probs({{Attitude::Positive, 0.5}}), ErrorCode::InvalidArgument);
  CHECK_ERROR(validate_probs({{Attitude::None, 1.0}}), ErrorCode::InvalidArgument);
  CHECK_ERROR(validate_probs({{Attitude::Positive, 1.5}, {Attitude::Negative, -0.5}}), ErrorCode::InvalidArgument);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) CHECK(sample_attitude(rng, {{Attitude::Negative, 1.0}}) == Attitude::Negative);
  CHECK_ERROR(uniform_index(rng, 0), ErrorCode::InvalidArgument);
  for (int i = 0; i < 200; ++i) {
    const double u = uniform_unit(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("generate_sessions: deterministic per seed") {
  TemplateDialogueChat chat;
  const auto tax = default_taxonomy();
  const SessionCounts counts{4, 2, 5};
  const auto a = generate_sessions(tax, 7, counts, uniform_attitudes(), chat);
  const auto b = generate_sessions(tax, 7, counts, uniform_attitudes(), chat);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]).dump() == to_json(b[i]).dump());

  const auto c = generate_sessions(tax, 8, counts, uniform_attitudes(), chat);
  std::string da, dc;
  for (const auto& s : a) da += to_json(s).dump();
  for (const auto& s : c) dc += to_json(s).dump();
  CHECK(da != dc);

  for (const auto& s : a) {
    CHECK(s.turns.size() >= 2);
    CHECK(s.turns.size() <= 5);
    bool known = false;
    for (const auto& m : tax.main_topics) {
      if (m.name == s.topic) known = std::find(m.subtopics.begin(), m.subtopics.end(), s.subtopic) != m.subtopics.end();
    }
    CHECK(known);
    CHECK(to_json(session_from_json(to_json(s))).dump() == to_json(s).dump());
  }
}

TEST_CASE("generate_sessions: fixed length and point-mass attitude") {
  TemplateDialogueChat chat;
  const auto s = generate_sessions(default_taxonomy(), 3, {1, 3, 3}, {{Attitude::Positive, 1.0}}, chat);
  REQUIRE(s.size() == 1);
  REQUIRE(s[0].turns.size() == 3);
  for (const auto& t : s[0].turns) CHECK(t.user_attitude == Attitude::Positive);
  CHECK(generate_sessions(default_taxonomy(), 3, {0, 1, 1}, uniform_attitudes(), chat).empty());
  CHECK_ERROR(generate_sessions(default_taxonomy(), 3, {1, 0, 2}, uniform_attitudes(), chat),
              ErrorCode::InvalidArgument);
}

TEST_CASE("generation request carries topic, attitude and actions; history grows") {
  const auto tax = default_taxonomy();
  std::vector<ChatRequest> seen;
  FnChat chat([&](const ChatRequest& req) {
    seen.push_back(req);
    return ChatResponse::text(R"({"user_utterance": "q", "assistant_response": "a"})");
  });
  const auto s = generate_sessions(tax, 11, {1, 3, 3}, {{Attitude::Negative, 1.0}}, chat);
  REQUIRE(seen.size() == 3);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(text::contains(seen[i].system_prompt, s[0].topic));
    CHECK(text::contains(seen[i].system_prompt, "Negative"));
    CHECK(text::contains(seen[i].system_prompt, tax.attitudes.at(Attitude::Negative).front()));
    CHECK(seen[i].messages.size() == 2 * i + 1);
  }
}

TEST_CASE("parse_generated_turn rejects malformed output") {
  CHECK_ERROR(parse_generated_turn(ChatResponse::text("not json"), Attitude::Neutral),
              ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(parse_generated_turn(ChatResponse::text(R"({"user_utterance": "x"})"), Attitude::Neutral),
              ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(parse_generated_turn(ChatResponse::text(R"({"user_utterance": " ", "assistant_response": "a"})"),
                                   Attitude::Neutral),
              ErrorCode::MalformedProviderOutput);
  const auto t = parse_generated_turn(ChatResponse::text(R"({"user_utterance": "u", "assistant_response": "a"})"),
                                      Attitude::Positive);
  CHECK(t.user_utterance == "u");
  CHECK(t.user_attitude == Attitude::Positive);
}

TEST_CASE("judge_pair: scripted verdicts") {
  const JudgeContext ctx{"best protein foods?", "- dislikes beef (attitude: Negative)"};
  providers::ScriptedChat first(json::parse(R"({"rules": [
      {"role": "Judge", "response": {"function_call": {"name": "SubmitVerdict",
                                     "arguments": {"winner": "first", "rationale": "richer"}}}}]})"));
  const auto v = judge_pair(ctx, "long answer", "short", Criterion::Richness, first);
  CHECK(v.winner == Winner::First);
  CHECK(v.criterion == Criterion::Richness);
  CHECK(v.rationale == "richer");

  providers::ScriptedChat vague(json::parse(R"({"rules": [{"role": "Judge", "response": {"text": "both are great"}}]})"));
  CHECK_ERROR(judge_pair(ctx, "x", "y", Criterion::Usefulness, vague), ErrorCode::MalformedProviderOutput);
  CHECK_ERROR(judge_pair(ctx, " ", "y", Criterion::Usefulness, vague), ErrorCode::Precondition);

  CHECK(parse_verdict(ChatResponse::text("Tie"), Criterion::Usefulness).winner == Winner::Tie);
}

TEST_CASE("judge request shows the profile only for personalization") {
  const JudgeContext ctx{"q", "- likes tea (attitude: Positive)"};
  const auto p = build_judge_request(ctx, "A", "B", Criterion::Personalization);
  CHECK(text::contains(p.system_prompt, "likes tea"));
  const auto r = build_judge_request(ctx, "A", "B", Criterion::Richness);
  CHECK_FALSE(text::contains(r.system_prompt, "likes tea"));
  CHECK(slot(r.messages.back().text, "First Response") == "A");
  CHECK(slot(r.messages.back().text, "Second Response") == "B");
}

TEST_CASE("identical responses tie after both orders") {
  // A judge that can only tell the two slots apart by content.
  FnChat equality([](const ChatRequest& req) {
    const auto& body = req.messages.back().text;
    const auto a = slot(body, "First Response");
    const auto b = slot(body, "Second Response");
    const std::string w = a == b ? "tie" : (a.size() > b.size() ? "first" : "second");
    return ChatResponse::call("SubmitVerdict", {{"winner", w}});
  });
  ResponsePair same{"p0", "Health", "q", "", "acn", "baseline", "same text", "same text"};
  for (const auto& j : judge_pairs(same, {Criterion::Richness, Criterion::Usefulness}, equality)) {
    CHECK(j.final == FinalResult::Tie);
  }
  ResponsePair longer{"p1", "Health", "q", "", "acn", "baseline", "a much longer answer", "short"};
  const auto js = judge_pairs(longer, {Criterion::Richness}, equality);
  REQUIRE(js.size() == 1);
  CHECK(js[0].verdict_ab.winner == Winner::First);
  CHECK(js[0].verdict_ba.winner == Winner::Second);
  CHECK(js[0].final == FinalResult::AWins);
  CHECK(to_json(judgment_from_json(to_json(js[0]))).dump() == to_json(js[0]).dump());
}

TEST_CASE("combine_verdicts: full table") {
  // Rows: verdict with A first; columns: verdict with A second.
  const Winner ws[] = {Winner::First, Winner::Second, Winner::Tie};
  const FinalResult expected[3][3] = {
      {FinalResult::Tie, FinalResult::AWins, FinalResult::Tie},
      {FinalResult::BWins, FinalResult::Tie, FinalResult::Tie},
      {FinalResult::Tie, FinalResult::Tie, FinalResult::Tie},
  };
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(combine_verdicts(verdict(ws[i]), verdict(ws[j])) == expected[i][j]);
    }
  }
  CHECK_ERROR(combine_verdicts(verdict(Winner::First, Criterion::Richness), verdict(Winner::Second, Criterion::Usefulness)),
              ErrorCode::CriterionMismatch);
}

TEST_CASE("tally: rates and adjusted win rate") {
  const auto r = tally({judged("j1", "Health", FinalResult::AWins), judged("j2", "Health", FinalResult::AWins),
                        judged("j3", "Health", FinalResult::Tie), judged("j4", "Travel", FinalResult::BWins)});
  const auto& all = bucket(r, "*");
  CHECK(all.total == 4);
  CHECK(all.win_rate == doctest::Approx(0.5));
  CHECK(all.tie_rate == doctest::Approx(0.25));
  CHECK(all.loss_rate == doctest::Approx(0.25));
  // (2 + 0.5) / 4 and (1 + 0.5) / 4 already sum to one.
  CHECK(all.adjusted_win_rate.at("acn") == doctest::Approx(0.625));
  CHECK(all.adjusted_win_rate.at("baseline") == doctest::Approx(0.375));

  const auto& health = bucket(r, "Health");
  CHECK(health.total == 3);
  CHECK(health.wins == 2);
  CHECK(health.adjusted_win_rate.at("acn") == doctest::Approx(2.5 / 3));
  CHECK(bucket(r, "Travel").losses == 1);

  const auto radar = radar_series(r);
  CHECK_FALSE(radar.dump().empty());
  CHECK(text::contains(to_json(r).dump(), "0.625"));
}

TEST_CASE("tally: all ties, empty input, order independence") {
  const auto ties = tally({judged("a", "T", FinalResult::Tie), judged("b", "T", FinalResult::Tie)});
  const auto& b = bucket(ties, "*");
  CHECK(b.win_rate == 0.0);
  CHECK(b.tie_rate == 1.0);
  CHECK(b.loss_rate == 0.0);
  CHECK(b.adjusted_win_rate.at("acn") == doctest::Approx(0.5));

  CHECK(tally({}).buckets.empty());

  std::vector<PairJudgment> js{judged("x", "A", FinalResult::AWins, Criterion::Usefulness),
                               judged("y", "B", FinalResult::BWins), judged("z", "A", FinalResult::Tie)};
  const auto fwd = to_json(tally(js)).dump();
  std::reverse(js.begin(), js.end());
  CHECK(to_json(tally(js)).dump() == fwd);
}

TEST_CASE("heuristic judge") {
  CHECK(heuristic_score("word word word", "", false) == 1.0);
  CHECK(heuristic_score("alpha beta ![](x.png)", "", false) == doctest::Approx(7.0));
  auto judge = make_eval_chat("heuristic");
  ResponsePair p{"p", "Food", "q", "- dislikes beef", "acn", "baseline",
                 "Chicken, lentils and tofu give lean protein without beef. ![](img.png)", "Eat meat."};
  for (const auto& j : judge_pairs(p, parse_criteria("richness,personalization"), *judge)) {
    CHECK(j.final == FinalResult::AWins);
  }
  ResponsePair same{"s", "Food", "q", "", "acn", "baseline", "identical answer text", "identical answer text"};
  for (const auto& j : judge_pairs(same, parse_criteria("all"), *judge)) CHECK(j.final == FinalResult::Tie);
}

TEST_CASE("jsonl round trip and pair JSON") {
  test_support::TempDir dir;
  const auto path = dir.path() / "rows.jsonl";
  const std::vector<json> rows{{{"a", 1}}, {{"b", "two"}}, json::object()};
  write_jsonl(path, rows);
  CHECK(read_jsonl(path) == rows);
  CHECK_ERROR(read_jsonl(dir.path() / "missing.jsonl"), ErrorCode::NotFound);

  const ResponsePair p{"p", "t", "q", "prof", "A", "B", "ra", "rb"};
  CHECK(to_json(pair_from_json(to_json(p))).dump() == to_json(p).dump());
}
