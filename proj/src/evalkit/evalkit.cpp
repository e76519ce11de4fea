#include "acn/evalkit/evalkit.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "acn/core/error.h"
#include "acn/core/io.h"
#include "acn/core/text.h"
#include "acn/providers/scripted.h"
#include "acn/retrieval/retrieval.h"

namespace acn::evalkit {

using providers::ChatRequest;
using providers::ChatResponse;
using providers::Speaker;

namespace {

constexpr Attitude kSampledAttitudes[] = {Attitude::Positive, Attitude::Neutral, Attitude::Negative};

}  // namespace

void TopicTaxonomy::validate() const {
  if (main_topics.empty()) throw Error(ErrorCode::InvalidArgument, "taxonomy has no main topics");
  for (const auto& t : main_topics) {
    if (text::trim(t.name).empty()) throw Error(ErrorCode::InvalidArgument, "main topic without a name");
    if (t.subtopics.empty()) throw Error(ErrorCode::InvalidArgument, "main topic '" + t.name + "' has no subtopics");
  }
  for (Attitude a : kSampledAttitudes) {
    auto it = attitudes.find(a);
    if (it == attitudes.end() || it->second.empty()) {
      throw Error(ErrorCode::InvalidArgument, "taxonomy lacks response actions for " + std::string(to_string(a)));
    }
  }
}

TopicTaxonomy default_taxonomy() {
  TopicTaxonomy t;
  t.main_topics = {
      {"Food and Cooking", {"Healthy recipes", "Regional cuisines", "Baking", "Meal planning"}},
      {"Fitness and Health", {"Strength training", "Running", "Nutrition for athletes", "Sleep"}},
      {"Travel", {"City trips", "Hiking routes", "Budget travel", "Travel with children"}},
      {"Technology", {"Smartphones", "Home networking", "Programming", "Smart home devices"}},
      {"Finance", {"Personal budgeting", "Index funds", "Retirement planning", "Taxes"}},
      {"Education", {"Language learning", "Online courses", "Exam preparation", "Study habits"}},
      {"Entertainment", {"Movies", "Board games", "Video games", "Music festivals"}},
      {"Home and Garden", {"Indoor plants", "Vegetable gardening", "Interior design", "Home repair"}},
      {"Parenting", {"Toddlers", "School choice", "Screen time", "Family activities"}},
      {"Careers", {"Job interviews", "Career change", "Remote work", "Negotiating salary"}},
      {"Science and Nature", {"Astronomy", "Climate", "Wildlife", "Oceans"}},
      {"Arts and Culture", {"Museums", "Photography", "Literature", "Painting"}},
      {"Automotive", {"Electric cars", "Car maintenance", "Road trips", "Buying a used car"}},
  };
  t.attitudes = {
      {Attitude::Positive,
       {"expresses approval of the answer", "asks to go deeper on the same subject",
        "shares a related personal preference"}},
      {Attitude::Neutral,
       {"asks a follow-up factual question", "changes to a nearby subtopic", "requests a summary or a list"}},
      {Attitude::Negative,
       {"points out that the answer missed a requirement", "rejects a suggestion and explains why",
        "asks for a different kind of content"}},
  };
  return t;
}

json to_json(const TopicTaxonomy& t) {
  json topics = json::array();
  for (const auto& m : t.main_topics) topics.push_back({{"name", m.name}, {"subtopics", m.subtopics}});
  json atts = json::object();
  for (Attitude a : kSampledAttitudes) {
    auto it = t.attitudes.find(a);
    if (it != t.attitudes.end()) atts[std::string(to_string(a))] = it->second;
  }
  return {{"main_topics", topics}, {"attitudes", atts}};
}

TopicTaxonomy taxonomy_from_json(const json& j) {
  TopicTaxonomy t;
  try {
    for (const auto& m : j.at("main_topics")) {
      t.main_topics.push_back({m.at("name").get<std::string>(), m.at("subtopics").get<std::vector<std::string>>()});
    }
    for (const auto& [k, v] : j.at("attitudes").items()) {
      t.attitudes[attitude_from_string(k)] = v.get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad taxonomy: ") + e.what());
  }
  t.validate();
  return t;
}

TopicTaxonomy load_taxonomy(const std::filesystem::path& path) {
  json j = json::parse(io::read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, path.string() + " is not valid JSON");
  return taxonomy_from_json(j);
}

json to_json(const DialogueSession& s) {
  json turns = json::array();
  for (const auto& t : s.turns) {
    turns.push_back({{"user_utterance", t.user_utterance},
                     {"assistant_response", t.assistant_response},
                     {"user_attitude", to_string(t.user_attitude)}});
  }
  return {{"session_id", s.session_id}, {"topic", s.topic}, {"subtopic", s.subtopic}, {"turns", turns}};
}

DialogueSession session_from_json(const json& j) {
  DialogueSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.topic = j.at("topic").get<std::string>();
  s.subtopic = j.at("subtopic").get<std::string>();
  for (const auto& t : j.at("turns")) {
    s.turns.push_back({t.at("user_utterance").get<std::string>(), t.at("assistant_response").get<std::string>(),
                       attitude_from_string(t.at("user_attitude").get<std::string>())});
  }
  return s;
}

std::pair<std::size_t, std::size_t> parse_turn_range(const std::string& s) {
  auto num = [&](const std::string& part) {
    const std::string t = text::trim(part);
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw Error(ErrorCode::InvalidArgument, "bad turn range '" + s + "'");
    }
    return static_cast<std::size_t>(std::stoull(t));
  };
  const auto dots = s.find("..");
  const std::size_t lo = num(dots == std::string::npos ? s : s.substr(0, dots));
  const std::size_t hi = dots == std::string::npos ? lo : num(s.substr(dots + 2));
  if (lo < 1 || hi < lo) throw Error(ErrorCode::InvalidArgument, "turn range needs 1 <= MIN <= MAX");
  return {lo, hi};
}

AttitudeProbs uniform_attitudes() {
  return {{Attitude::Positive, 1.0 / 3}, {Attitude::Neutral, 1.0 / 3}, {Attitude::Negative, 1.0 / 3}};
}

void validate_probs(const AttitudeProbs& probs) {
  double sum = 0.0;
  for (const auto& [a, p] : probs) {
    if (a == Attitude::None) throw Error(ErrorCode::InvalidArgument, "attitude None cannot be sampled");
    if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative attitude probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "attitude probabilities must sum to 1");
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "uniform_index over an empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Attitude sample_attitude(std::mt19937_64& rng, const AttitudeProbs& probs) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  Attitude last = Attitude::Neutral;
  for (Attitude a : kSampledAttitudes) {
    auto it = probs.find(a);
    const double p = it == probs.end() ? 0.0 : it->second;
    if (p <= 0.0) continue;
    last = a;
    acc += p;
    if (u < acc) return a;
  }
  return last;
}

ChatRequest build_generation_request(const TopicTaxonomy& taxonomy, const DialogueSession& session,
                                     Attitude attitude, std::size_t turn_index, std::size_t total_turns) {
  std::string actions;
  for (const auto& a : taxonomy.attitudes.at(attitude)) actions += "- " + a + "\n";
  ChatRequest req;
  req.role = "DialogueGenerator";
  req.system_prompt =
      "Simulate one turn of a conversation between a user and an AI search engine. The whole session stays on "
      "the topic below. The user's attitude towards the previous answer shapes the utterance through one of the "
      "listed response actions. The assistant answers helpfully and may produce informative content.\n\n"
      "[Topic]\n" + session.topic + " / " + session.subtopic + "\n\n[Turn]\n" + std::to_string(turn_index + 1) +
      " of " + std::to_string(total_turns) + "\n\n[User Attitude]\n" + std::string(to_string(attitude)) +
      "\n\n[Response Actions]\n" + actions +
      "\nReply with a JSON object holding `user_utterance` and `assistant_response`.";
  for (const auto& t : session.turns) {
    req.messages.push_back({Speaker::User, t.user_utterance});
    req.messages.push_back({Speaker::Assistant, t.assistant_response});
  }
  req.messages.push_back({Speaker::User, "topic: " + session.topic + "; subtopic: " + session.subtopic +
                                             "; attitude: " + std::string(to_string(attitude))});
  return req;
}

DialogueTurn parse_generated_turn(const ChatResponse& resp, Attitude attitude) {
  if (resp.is_call()) throw Error(ErrorCode::MalformedProviderOutput, "dialogue generator must answer with text");
  json j = json::parse(*resp.assistant_text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("user_utterance") || !j.contains("assistant_response") ||
      !j.at("user_utterance").is_string() || !j.at("assistant_response").is_string()) {
    throw Error(ErrorCode::MalformedProviderOutput, "dialogue turn must be a JSON object with two strings");
  }
  DialogueTurn t{j.at("user_utterance").get<std::string>(), j.at("assistant_response").get<std::string>(), attitude};
  if (text::trim(t.user_utterance).empty()) throw Error(ErrorCode::MalformedProviderOutput, "empty user utterance");
  return t;
}

std::vector<DialogueSession> generate_sessions(const TopicTaxonomy& taxonomy, std::uint64_t seed,
                                               const SessionCounts& counts, const AttitudeProbs& probs,
                                               providers::ChatProvider& chat) {
  taxonomy.validate();
  validate_probs(probs);
  if (counts.min_turns < 1 || counts.max_turns < counts.min_turns) {
    throw Error(ErrorCode::InvalidArgument, "turn bounds need 1 <= min <= max");
  }
  std::mt19937_64 rng(seed);
  std::vector<DialogueSession> out;
  out.reserve(counts.sessions);
  for (std::size_t k = 0; k < counts.sessions; ++k) {
    DialogueSession s;
    s.session_id = "session-" + std::to_string(k);
    const auto& topic = taxonomy.main_topics[uniform_index(rng, taxonomy.main_topics.size())];
    s.topic = topic.name;
    s.subtopic = topic.subtopics[uniform_index(rng, topic.subtopics.size())];
    const std::size_t turns = counts.min_turns + uniform_index(rng, counts.max_turns - counts.min_turns + 1);
    for (std::size_t i = 0; i < turns; ++i) {
      const Attitude a = sample_attitude(rng, probs);
      const auto req = build_generation_request(taxonomy, s, a, i, turns);
      s.turns.push_back(parse_generated_turn(chat.complete(req), a));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::Richness: return "richness";
    case Criterion::Usefulness: return "usefulness";
    case Criterion::Personalization: return "personalization";
    case Criterion::LogicalityDepth: return "logicality-depth";
    case Criterion::LogicalityComprehensiveness: return "logicality-comprehensiveness";
    case Criterion::LogicalityReasonability: return "logicality-reasonability";
  }
  return "richness";
}

Criterion criterion_from_string(std::string_view s) {
  for (Criterion c : kAllCriteria) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown criterion '" + std::string(s) + "'");
}

std::vector<Criterion> parse_criteria(const std::string& list) {
  std::vector<Criterion> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = text::trim(item);
    if (item.empty()) continue;
    if (item == "all") {
      out.assign(std::begin(kAllCriteria), std::end(kAllCriteria));
      continue;
    }
    const Criterion c = criterion_from_string(item);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no criteria given");
  return out;
}

std::string_view to_string(Winner w) {
  switch (w) {
    case Winner::First: return "first";
    case Winner::Second: return "second";
    case Winner::Tie: return "tie";
  }
  return "tie";
}

Winner winner_from_string(std::string_view s) {
  const std::string n = text::normalize(s);
  if (n == "first") return Winner::First;
  if (n == "second") return Winner::Second;
  if (n == "tie") return Winner::Tie;
  throw Error(ErrorCode::MalformedProviderOutput, "verdict '" + std::string(s) + "' is not first, second or tie");
}

std::string_view to_string(FinalResult f) {
  switch (f) {
    case FinalResult::AWins: return "A-wins";
    case FinalResult::BWins: return "B-wins";
    case FinalResult::Tie: return "tie";
  }
  return "tie";
}

FinalResult final_from_string(std::string_view s) {
  if (s == "A-wins") return FinalResult::AWins;
  if (s == "B-wins") return FinalResult::BWins;
  if (s == "tie") return FinalResult::Tie;
  throw Error(ErrorCode::Parse, "unknown final result '" + std::string(s) + "'");
}

namespace {

std::string criterion_description(Criterion c) {
  switch (c) {
    case Criterion::Richness:
      return "Content richness: breadth of information and use of varied media such as images.";
    case Criterion::Usefulness:
      return "Information usefulness: how well the response answers the query with accurate, actionable content.";
    case Criterion::Personalization:
      return "Content personalization: how closely the response aligns with the user profile below.";
    case Criterion::LogicalityDepth:
      return "Writing logicality, depth: how far the response goes beyond surface statements.";
    case Criterion::LogicalityComprehensiveness:
      return "Writing logicality, comprehensiveness: whether the response covers all relevant aspects.";
    case Criterion::LogicalityReasonability:
      return "Writing logicality, reasonability: whether the structure and argument are sound and coherent.";
  }
  return {};
}

const FunctionSpec& verdict_function() {
  static const FunctionSpec spec{std::string(kSubmitVerdict),
                                 "Report which response is better under the criterion.",
                                 {{"winner", ParamType::Text, true, "first, second or tie"},
                                  {"rationale", ParamType::Text, false, "Short justification"}}};
  return spec;
}

}  // namespace

ChatRequest build_judge_request(const JudgeContext& ctx, const std::string& first, const std::string& second,
                                Criterion criterion) {
  ChatRequest req;
  req.role = "Judge";
  req.system_prompt =
      "You compare two anonymous responses to the same query under one criterion. Answer with SubmitVerdict, "
      "setting winner to first, second or tie.\n\n[Criterion]\n" +
      criterion_description(criterion) + "\n";
  if (criterion == Criterion::Personalization) {
    req.system_prompt += "\n[User Profile]\n" + (ctx.profile.empty() ? std::string("None") : ctx.profile) + "\n";
  }
  req.messages.push_back({Speaker::User, "[Query]\n" + ctx.query + "\n\n[First Response]\n" + first +
                                             "\n\n[Second Response]\n" + second});
  req.available_functions = {verdict_function()};
  return req;
}

JudgeVerdict parse_verdict(const ChatResponse& resp, Criterion criterion) {
  JudgeVerdict v;
  v.criterion = criterion;
  if (resp.is_call()) {
    v.winner = winner_from_string(resp.function_call->arg("winner"));
    v.rationale = resp.function_call->arg_or("rationale", "");
  } else {
    v.winner = winner_from_string(*resp.assistant_text);
  }
  return v;
}

JudgeVerdict judge_pair(const JudgeContext& ctx, const std::string& response_x, const std::string& response_y,
                        Criterion criterion, providers::ChatProvider& judge) {
  if (text::trim(response_x).empty() || text::trim(response_y).empty()) {
    throw Error(ErrorCode::Precondition, "both responses must be non-empty");
  }
  return parse_verdict(judge.complete(build_judge_request(ctx, response_x, response_y, criterion)), criterion);
}

FinalResult combine_verdicts(const JudgeVerdict& v_ab, const JudgeVerdict& v_ba) {
  if (v_ab.criterion != v_ba.criterion) throw Error(ErrorCode::CriterionMismatch, "verdicts judge different criteria");
  if (v_ab.winner == Winner::First && v_ba.winner == Winner::Second) return FinalResult::AWins;
  if (v_ab.winner == Winner::Second && v_ba.winner == Winner::First) return FinalResult::BWins;
  return FinalResult::Tie;
}

ResponsePair pair_from_json(const json& j) {
  ResponsePair p;
  try {
    p.pair_id = j.at("pair_id").get<std::string>();
    p.topic = j.value("topic", "");
    p.query = j.at("query").get<std::string>();
    p.profile = j.value("profile", "");
    p.system_a = j.value("system_a", "A");
    p.system_b = j.value("system_b", "B");
    p.response_a = j.at("response_a").get<std::string>();
    p.response_b = j.at("response_b").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad pair record: ") + e.what());
  }
  return p;
}

json to_json(const ResponsePair& p) {
  return {{"pair_id", p.pair_id},       {"topic", p.topic},           {"query", p.query},
          {"profile", p.profile},       {"system_a", p.system_a},     {"system_b", p.system_b},
          {"response_a", p.response_a}, {"response_b", p.response_b}};
}

namespace {

json verdict_to_json(const JudgeVerdict& v) {
  return {{"winner", to_string(v.winner)}, {"criterion", to_string(v.criterion)}, {"rationale", v.rationale}};
}

JudgeVerdict verdict_from_json(const json& j) {
  return {winner_from_string(j.at("winner").get<std::string>()),
          criterion_from_string(j.at("criterion").get<std::string>()), j.value("rationale", "")};
}

}  // namespace

json to_json(const PairJudgment& j) {
  return {{"judgment_id", j.judgment_id},
          {"pair_id", j.pair_id},
          {"topic", j.topic},
          {"system_a", j.system_a},
          {"system_b", j.system_b},
          {"criterion", to_string(j.criterion)},
          {"verdict_ab", verdict_to_json(j.verdict_ab)},
          {"verdict_ba", verdict_to_json(j.verdict_ba)},
          {"final", to_string(j.final)}};
}

PairJudgment judgment_from_json(const json& j) {
  PairJudgment p;
  try {
    p.judgment_id = j.at("judgment_id").get<std::string>();
    p.pair_id = j.value("pair_id", "");
    p.topic = j.value("topic", "");
    p.system_a = j.value("system_a", "A");
    p.system_b = j.value("system_b", "B");
    p.criterion = criterion_from_string(j.at("criterion").get<std::string>());
    p.verdict_ab = verdict_from_json(j.at("verdict_ab"));
    p.verdict_ba = verdict_from_json(j.at("verdict_ba"));
    p.final = final_from_string(j.at("final").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad judgment record: ") + e.what());
  }
  if (p.final != combine_verdicts(p.verdict_ab, p.verdict_ba)) {
    throw Error(ErrorCode::Parse, "judgment " + p.judgment_id + " has a final result inconsistent with its verdicts");
  }
  return p;
}

std::vector<PairJudgment> judge_pairs(const ResponsePair& pair, const std::vector<Criterion>& criteria,
                                      providers::ChatProvider& judge) {
  const JudgeContext ctx{pair.query, pair.profile};
  std::vector<PairJudgment> out;
  for (Criterion c : criteria) {
    PairJudgment j;
    j.judgment_id = pair.pair_id + "/" + std::string(to_string(c));
    j.pair_id = pair.pair_id;
    j.topic = pair.topic;
    j.system_a = pair.system_a;
    j.system_b = pair.system_b;
    j.criterion = c;
    j.verdict_ab = judge_pair(ctx, pair.response_a, pair.response_b, c, judge);
    j.verdict_ba = judge_pair(ctx, pair.response_b, pair.response_a, c, judge);
    j.final = combine_verdicts(j.verdict_ab, j.verdict_ba);
    out.push_back(std::move(j));
  }
  return out;
}

TallyReport tally(std::vector<PairJudgment> judgments) {
  std::stable_sort(judgments.begin(), judgments.end(),
                   [](const PairJudgment& a, const PairJudgment& b) { return a.judgment_id < b.judgment_id; });
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, RateBucket> buckets;
  auto add = [&](const PairJudgment& j, const std::string& topic) {
    const Key key{j.system_a, j.system_b, std::string(to_string(j.criterion)), topic};
    auto& b = buckets[key];
    b.system_a = j.system_a;
    b.system_b = j.system_b;
    b.criterion = std::get<2>(key);
    b.topic = topic;
    ++b.total;
    switch (j.final) {
      case FinalResult::AWins: ++b.wins; break;
      case FinalResult::BWins: ++b.losses; break;
      case FinalResult::Tie: ++b.ties; break;
    }
  };
  for (const auto& j : judgments) {
    add(j, j.topic);
    if (j.topic != "*") add(j, "*");
  }
  TallyReport report;
  for (auto& [key, b] : buckets) {
    const double n = static_cast<double>(b.total);
    b.win_rate = b.wins / n;
    b.tie_rate = b.ties / n;
    b.loss_rate = b.losses / n;
    const double adj_a = (b.wins + 0.5 * b.ties) / n;
    const double adj_b = (b.losses + 0.5 * b.ties) / n;
    const double sum = adj_a + adj_b;
    if (b.system_a == b.system_b) {
      b.adjusted_win_rate[b.system_a] = 0.5;
    } else {
      b.adjusted_win_rate[b.system_a] = adj_a / sum;
      b.adjusted_win_rate[b.system_b] = adj_b / sum;
    }
    report.buckets.push_back(std::move(b));
  }
  return report;
}

json to_json(const TallyReport& r) {
  json buckets = json::array();
  for (const auto& b : r.buckets) {
    json adj = json::object();
    for (const auto& [sys, v] : b.adjusted_win_rate) adj[sys] = v;
    buckets.push_back({{"system_a", b.system_a},
                       {"system_b", b.system_b},
                       {"criterion", b.criterion},
                       {"topic", b.topic},
                       {"total", b.total},
                       {"wins", b.wins},
                       {"ties", b.ties},
                       {"losses", b.losses},
                       {"win_rate", b.win_rate},
                       {"tie_rate", b.tie_rate},
                       {"loss_rate", b.loss_rate},
                       {"adjusted_win_rate", adj}});
  }
  return {{"adjusted_win_rate_definition",
           "(wins + 0.5 * ties) / total per system, normalized so the compared systems sum to 1; "
           "a stand-in definition"},
          {"buckets", buckets}};
}

json radar_series(const TallyReport& r) {
  std::vector<std::string> axes;
  for (Criterion c : kAllCriteria) {
    const std::string name(to_string(c));
    const bool present = std::any_of(r.buckets.begin(), r.buckets.end(),
                                     [&](const RateBucket& b) { return b.topic == "*" && b.criterion == name; });
    if (present) axes.push_back(name);
  }
  // system -> criterion -> (sum of adjusted rates, count of comparisons)
  std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> acc;
  for (const auto& b : r.buckets) {
    if (b.topic != "*") continue;
    for (const auto& [sys, v] : b.adjusted_win_rate) {
      auto& cell = acc[sys][b.criterion];
      cell.first += v;
      cell.second += 1;
    }
  }
  json series = json::array();
  for (const auto& [sys, per] : acc) {
    json values = json::array();
    for (const auto& axis : axes) {
      auto it = per.find(axis);
      values.push_back(it == per.end() ? json(nullptr) : json(it->second.first / it->second.second));
    }
    series.push_back({{"system", sys}, {"values", values}});
  }
  return {{"axes", axes}, {"series", series}};
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::vector<json> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(n) + " is not JSON");
    rows.push_back(std::move(j));
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  io::write_atomic(path, out);
}

}  // namespace acn::evalkit

namespace acn::evalkit {

namespace {

// Value of "key: value" inside a "; "-separated line.
std::string field(const std::string& line, const std::string& key) {
  const auto at = line.find(key + ": ");
  if (at == std::string::npos) return {};
  const auto start = at + key.size() + 2;
  const auto end = line.find(';', start);
  return text::trim(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
}

// Text between "[Label]\n" and the next "\n\n[" (or the end).
std::string section(const std::string& s, const std::string& label) {
  const std::string open = "[" + label + "]\n";
  const auto at = s.find(open);
  if (at == std::string::npos) return {};
  const auto start = at + open.size();
  const auto end = s.find("\n\n[", start);
  return s.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

providers::ChatResponse TemplateDialogueChat::do_complete(const providers::ChatRequest& req) {
  const std::string& last = req.messages.back().text;
  const std::string topic = field(last, "topic");
  const std::string subtopic = field(last, "subtopic");
  const std::string attitude = field(last, "attitude");
  std::size_t turn = 0;
  for (const auto& m : req.messages) turn += m.speaker == Speaker::Assistant;
  std::string user;
  if (turn == 0) {
    user = "I would like to learn about " + text::to_lower(subtopic) + ". Where should I start?";
  } else if (attitude == "Positive") {
    user = "That was helpful. Tell me more about " + text::to_lower(subtopic) + ", with pictures if possible.";
  } else if (attitude == "Negative") {
    user = "That is not what I need. Focus on practical " + text::to_lower(subtopic) + " advice instead.";
  } else {
    user = "Can you summarize the key points about " + text::to_lower(subtopic) + " as a list?";
  }
  const std::string assistant = "Here is an overview of " + text::to_lower(subtopic) + " within " +
                                text::to_lower(topic) + ", tailored to your last message (turn " +
                                std::to_string(turn + 1) + ").";
  json out = {{"user_utterance", user}, {"assistant_response", assistant}};
  return providers::ChatResponse::text(out.dump());
}

double heuristic_score(const std::string& response, const std::string& profile, bool personalization) {
  std::set<std::string> words;
  for (auto& t : text::tokenize(response)) {
    if (t.size() > 3) words.insert(t);
  }
  const double images = static_cast<double>(retrieval::find_image_links(response).size());
  double score = static_cast<double>(words.size()) + 5.0 * images;
  if (personalization) {
    std::size_t overlap = 0;
    for (auto& t : text::tokenize(profile)) overlap += t.size() > 3 && words.count(t);
    score = static_cast<double>(overlap) * 10.0 + 0.1 * score;
  }
  return score;
}

providers::ChatResponse HeuristicJudgeChat::do_complete(const providers::ChatRequest& req) {
  const std::string& body = req.messages.back().text;
  const bool personalization = text::contains(req.system_prompt, "[User Profile]");
  const std::string profile = section(req.system_prompt, "User Profile");
  const double a = heuristic_score(section(body, "First Response"), profile, personalization);
  const double b = heuristic_score(section(body, "Second Response"), profile, personalization);
  std::string winner = "tie";
  if (a > b * 1.05) winner = "first";
  if (b > a * 1.05) winner = "second";
  std::ostringstream why;
  why << "heuristic scores " << a << " vs " << b;
  return providers::ChatResponse::call(std::string(kSubmitVerdict), {{"winner", winner}, {"rationale", why.str()}});
}

std::shared_ptr<providers::ChatProvider> make_eval_chat(const std::string& spec) {
  if (spec == "template") return std::make_shared<TemplateDialogueChat>();
  if (spec == "heuristic") return std::make_shared<HeuristicJudgeChat>();
  return providers::make_chat(spec);
}

}  // namespace acn::evalkit
