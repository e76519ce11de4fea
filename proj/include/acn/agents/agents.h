#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "acn/agents/prompts.h"
#include "acn/core/trace.h"
#include "acn/core/types.h"
#include "acn/profile/profile.h"
#include "acn/providers/providers.h"
#include "acn/retrieval/retrieval.h"

namespace acn::agents {

struct AgentsConfig {
  std::size_t max_steps = 12;
  std::size_t context_budget_chars = 6000;

  void validate() const;
};

struct UserRequirement {
  std::string text;
  std::string session_id;
  std::size_t turn_index = 0;
};

struct FeedbackEnvelope {
  std::string text;
  std::string session_id;
  std::string target_trace;
};

struct ArticleSection {
  std::string heading;
  std::string markdown_body;
};

struct ArticleDraft {
  std::vector<ArticleSection> sections;
  std::vector<retrieval::ImageRecord> image_refs;
  /// Set when every search step failed.
  std::string notice;

  std::string to_markdown() const;
};

json to_json(const ArticleDraft& a);
ArticleDraft article_from_json(const json& j);

enum class OutcomeKind { Reply, Clarify, Suggest, Dispatch, ProfileUpdate, Feedback };

std::string_view to_string(OutcomeKind k);

struct AccountManagerOutcome {
  OutcomeKind kind = OutcomeKind::Reply;
  /// Text shown to the user for this turn.
  std::string text;
  std::optional<UserRequirement> requirement;
  std::optional<profile::ProfileDescriptor> descriptor;
  std::optional<FeedbackEnvelope> feedback;
  /// Set when the provider's output was rejected and the apology fallback used.
  std::string warning;
  /// The provider response the outcome was derived from.
  json provider_response;
};

inline constexpr std::string_view kApologyReply =
    "Sorry, I could not process that request. Could you rephrase it?";
inline constexpr std::string_view kNoSourcesNotice =
    "Note: no sources could be retrieved for this article, so it is written without external references.";

struct ChatTurn {
  std::string user;
  std::string assistant;
};

struct SessionContext {
  std::string session_id;
  std::string user_id;
  std::size_t turn_index = 0;
  std::vector<ChatTurn> history;
  /// Trace of the previous turn; feedback targets it.
  std::string last_trace_id;
};

/// Decides the Account Manager's action for one user message purely from the
/// chat provider's function call.
AccountManagerOutcome account_manager_turn(const SessionContext& session, const std::string& user_message,
                                           const std::string& am_prompt, const std::string& profile_prompt,
                                           providers::ChatProvider& chat, std::string* assembled_prompt = nullptr);

/// Deterministic repair: drop steps after the first Finalize, append one if
/// missing, renumber.
std::vector<PlanStep> repair_plan(std::vector<PlanStep> steps);

/// Repairs, then validates; throws PlanInvalid listing the violations.
Plan accept_plan(std::vector<PlanStep> raw_steps, std::string rationale, std::size_t max_steps,
                 bool* repaired = nullptr);

struct PlanningResult {
  Plan plan;
  std::vector<PlanStep> raw_steps;
  bool repaired = false;
  std::string assembled_prompt;
};

/// Asks the strategist for one step per call until it calls FinalizeArticle,
/// answers with plain text after having planned, or exceeds max_steps.
PlanningResult strategist_plan(const UserRequirement& req, const std::string& profile_prompt,
                               const std::string& ss_prompt, const AgentsConfig& cfg,
                               providers::ChatProvider& chat);

struct CreatedContent {
  std::string heading;
  std::string markdown_body;
  std::vector<retrieval::ImageRecord> used_images;
  std::vector<std::string> warnings;
  std::string assembled_prompt;
};

std::string assemble_creator_prompt(const std::string& cc_prompt, const std::string& writing_requirement,
                                    const std::vector<retrieval::KnowledgeChunk>& knowledge,
                                    const std::vector<retrieval::ImageRecord>& images,
                                    const std::string& profile_prompt);

std::string render_knowledge(const std::vector<retrieval::KnowledgeChunk>& knowledge);
std::string render_image_source(const std::vector<retrieval::ImageRecord>& images);

/// Writes one section. Image references to URLs outside `images` are
/// stripped with a warning; kept references get the record's caption when
/// their alt text is empty.
CreatedContent content_create(const std::string& writing_requirement,
                              const std::vector<retrieval::KnowledgeChunk>& knowledge,
                              const std::vector<retrieval::ImageRecord>& images,
                              const std::string& profile_prompt, const std::string& cc_prompt,
                              providers::ChatProvider& chat);

/// Oldest chunks are dropped first until the rendered text fits `budget`.
std::vector<retrieval::KnowledgeChunk> budget_context(const std::vector<retrieval::KnowledgeChunk>& chunks,
                                                      std::size_t budget);

struct ExecutionResult {
  ArticleDraft article;
  /// Every image captioned during the run, in discovery order.
  std::vector<retrieval::ImageRecord> image_archive;
};

struct AgentEnvironment {
  providers::ProviderSet providers;
  const PromptRegistry* prompts = nullptr;
  retrieval::FilterConfig filter;
  AgentsConfig agents;
};

/// Runs the plan in step order, recording one child node per step under
/// `strategist_node`.
ExecutionResult execute_plan(const Plan& plan, const std::string& profile_prompt, const AgentEnvironment& env,
                             CallTrace& trace, NodeId strategist_node);

struct TurnResult {
  AccountManagerOutcome outcome;
  std::optional<Plan> plan;
  std::optional<ArticleDraft> article;
  std::vector<retrieval::ImageRecord> image_archive;
  std::optional<profile::UserProfile> profile_after;
};

/// One full user turn: Account Manager decision, profile tracking, and on
/// dispatch the plan/execute pipeline, all recorded into `trace`.
TurnResult run_turn(const SessionContext& session, const std::string& user_message, const AgentEnvironment& env,
                    profile::ProfileStore& profiles, const profile::SimilarityConfig& similarity,
                    const std::string& now, CallTrace& trace);

}  // namespace acn::agents
