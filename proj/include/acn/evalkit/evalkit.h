#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "acn/core/types.h"
#include "acn/providers/providers.h"

namespace acn::evalkit {

struct MainTopic {
  std::string name;
  std::vector<std::string> subtopics;
};

struct TopicTaxonomy {
  std::vector<MainTopic> main_topics;
  /// Response actions per attitude (Positive, Neutral, Negative).
  std::map<Attitude, std::vector<std::string>> attitudes;

  void validate() const;
};

inline constexpr std::size_t kDefaultMainTopics = 13;

TopicTaxonomy default_taxonomy();
json to_json(const TopicTaxonomy& t);
TopicTaxonomy taxonomy_from_json(const json& j);
TopicTaxonomy load_taxonomy(const std::filesystem::path& path);

struct DialogueTurn {
  std::string user_utterance;
  std::string assistant_response;
  Attitude user_attitude = Attitude::Neutral;
};

struct DialogueSession {
  std::string session_id;
  std::string topic;
  std::string subtopic;
  std::vector<DialogueTurn> turns;
};

json to_json(const DialogueSession& s);
DialogueSession session_from_json(const json& j);

struct SessionCounts {
  std::size_t sessions = 1;
  std::size_t min_turns = 1;
  std::size_t max_turns = 1;
};

/// Parses "MIN..MAX" or a single number.
std::pair<std::size_t, std::size_t> parse_turn_range(const std::string& s);

using AttitudeProbs = std::map<Attitude, double>;

AttitudeProbs uniform_attitudes();
void validate_probs(const AttitudeProbs& probs);

/// Portable draws from a 64-bit Mersenne Twister; std distributions differ
/// between standard libraries, these do not.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);
double uniform_unit(std::mt19937_64& rng);
Attitude sample_attitude(std::mt19937_64& rng, const AttitudeProbs& probs);

providers::ChatRequest build_generation_request(const TopicTaxonomy& taxonomy, const DialogueSession& session,
                                                Attitude attitude, std::size_t turn_index,
                                                std::size_t total_turns);

/// Expects the reply text to be a JSON object with `user_utterance` and
/// `assistant_response`.
DialogueTurn parse_generated_turn(const providers::ChatResponse& resp, Attitude attitude);

std::vector<DialogueSession> generate_sessions(const TopicTaxonomy& taxonomy, std::uint64_t seed,
                                               const SessionCounts& counts, const AttitudeProbs& probs,
                                               providers::ChatProvider& chat);

enum class Criterion {
  Richness,
  Usefulness,
  Personalization,
  LogicalityDepth,
  LogicalityComprehensiveness,
  LogicalityReasonability,
};

inline constexpr Criterion kAllCriteria[] = {Criterion::Richness,
                                             Criterion::Usefulness,
                                             Criterion::Personalization,
                                             Criterion::LogicalityDepth,
                                             Criterion::LogicalityComprehensiveness,
                                             Criterion::LogicalityReasonability};

std::string_view to_string(Criterion c);
Criterion criterion_from_string(std::string_view s);
/// Comma-separated list; "all" expands to every criterion.
std::vector<Criterion> parse_criteria(const std::string& list);

enum class Winner { First, Second, Tie };
std::string_view to_string(Winner w);
Winner winner_from_string(std::string_view s);

enum class FinalResult { AWins, BWins, Tie };
std::string_view to_string(FinalResult f);
FinalResult final_from_string(std::string_view s);

struct JudgeVerdict {
  Winner winner = Winner::Tie;
  Criterion criterion = Criterion::Richness;
  std::string rationale;
};

struct JudgeContext {
  std::string query;
  /// Rendered user profile; shown to the judge only for personalization.
  std::string profile;
};

inline constexpr std::string_view kSubmitVerdict = "SubmitVerdict";

providers::ChatRequest build_judge_request(const JudgeContext& ctx, const std::string& first,
                                           const std::string& second, Criterion criterion);

/// Accepts a SubmitVerdict call or a bare "first" / "second" / "tie" text.
JudgeVerdict parse_verdict(const providers::ChatResponse& resp, Criterion criterion);

JudgeVerdict judge_pair(const JudgeContext& ctx, const std::string& response_x, const std::string& response_y,
                        Criterion criterion, providers::ChatProvider& judge);

/// `v_ab` has A in the first slot, `v_ba` has A in the second. Only
/// consistent verdicts count; any disagreement is a tie.
FinalResult combine_verdicts(const JudgeVerdict& v_ab, const JudgeVerdict& v_ba);

struct ResponsePair {
  std::string pair_id;
  std::string topic;
  std::string query;
  std::string profile;
  std::string system_a;
  std::string system_b;
  std::string response_a;
  std::string response_b;
};

ResponsePair pair_from_json(const json& j);
json to_json(const ResponsePair& p);

struct PairJudgment {
  std::string judgment_id;
  std::string pair_id;
  std::string topic;
  std::string system_a;
  std::string system_b;
  Criterion criterion = Criterion::Richness;
  JudgeVerdict verdict_ab;
  JudgeVerdict verdict_ba;
  FinalResult final = FinalResult::Tie;
};

json to_json(const PairJudgment& j);
PairJudgment judgment_from_json(const json& j);

/// Judges one pair in both orders for each criterion.
std::vector<PairJudgment> judge_pairs(const ResponsePair& pair, const std::vector<Criterion>& criteria,
                                      providers::ChatProvider& judge);

struct RateBucket {
  std::string system_a;
  std::string system_b;
  std::string criterion;
  std::string topic;
  std::size_t total = 0;
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  double win_rate = 0.0;
  double tie_rate = 0.0;
  double loss_rate = 0.0;
  /// (wins + ties / 2) / total for each side, normalized to sum to 1.
  std::map<std::string, double> adjusted_win_rate;
};

struct TallyReport {
  /// Per (systems, criterion, topic); topic "*" aggregates all topics.
  std::vector<RateBucket> buckets;
};

TallyReport tally(std::vector<PairJudgment> judgments);
json to_json(const TallyReport& r);
/// Radar series: one axis per criterion, one series per system, values are
/// all-topic adjusted win rates.
json radar_series(const TallyReport& r);

/// Offline dialogue generator: composes each turn from the topic, subtopic
/// and attitude named in the request. Stands in for a live model.
class TemplateDialogueChat : public providers::ChatProvider {
 protected:
  providers::ChatResponse do_complete(const providers::ChatRequest& req) override;
};

/// Offline judge that scores each response by distinct content words, image
/// count, and (for personalization) overlap with the profile; within 5% is a
/// tie. A smoke-test stand-in, not a substitute for a model judge.
class HeuristicJudgeChat : public providers::ChatProvider {
 protected:
  providers::ChatResponse do_complete(const providers::ChatRequest& req) override;
};

double heuristic_score(const std::string& response, const std::string& profile, bool personalization);

/// "template", "heuristic", or any spec accepted by providers::make_chat.
std::shared_ptr<providers::ChatProvider> make_eval_chat(const std::string& spec);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

}  // namespace acn::evalkit
