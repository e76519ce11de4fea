#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acn/agents/agents.h"
#include "acn/agents/prompts.h"
#include "acn/core/trace.h"
#include "acn/core/types.h"
#include "acn/providers/providers.h"

namespace acn::rfo {

struct OptimizerOutput {
  std::vector<NodeId> down_targets;
  std::vector<std::string> down_feedbacks;
  std::optional<std::string> prompt_review;
};

/// Throws MalformedOptimizerOutput when lengths differ, a target is not a
/// child of `node`, or the output neither reviews nor blames anyone.
void validate_output(const OptimizerOutput& out, const TraceNode& node);

/// Reviews one recorded invocation against the feedback that reached it.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual OptimizerOutput optimize(const std::string& feedback, const TraceNode& node, const CallTrace& trace) = 0;
};

/// Produces an agent's new prompt from its old one and this run's reviews.
class PromptUpdater {
 public:
  virtual ~PromptUpdater() = default;
  virtual std::string update(RoleId role, const std::string& old_prompt, const std::vector<ReviewEntry>& reviews) = 0;
};

inline constexpr std::string_view kOptimizeFunction = "Optimize";

const FunctionSpec& optimize_function();

struct ChildSummary {
  NodeId node_id = 0;
  RoleId agent = RoleId::AccountManager;
  std::string message;
};

std::vector<ChildSummary> child_summaries(const CallTrace& trace, const TraceNode& node);

/// The optimizer request for one node. The feedback is also the user message,
/// so fixtures can route on it.
providers::ChatRequest build_optimizer_prompt(const std::string& feedback, const TraceNode& node,
                                              const std::vector<ChildSummary>& children);

/// Decodes an Optimize call. down_targets are decimal node ids; "None" or an
/// empty list means no callee is blamed.
OptimizerOutput parse_optimizer_response(const providers::ChatResponse& resp);

class LlmOptimizer : public Optimizer {
 public:
  explicit LlmOptimizer(providers::ChatProvider& chat) : chat_(chat) {}
  OptimizerOutput optimize(const std::string& feedback, const TraceNode& node, const CallTrace& trace) override;

 private:
  providers::ChatProvider& chat_;
};

providers::ChatRequest build_rewrite_request(const std::string& old_prompt, const std::vector<ReviewEntry>& reviews);

/// One rewrite call; the response text is the whole new prompt. Validated
/// with `check_rewrite`.
std::string update_prompt(const std::string& old_prompt, const std::vector<ReviewEntry>& reviews,
                          providers::ChatProvider& chat);

/// Throws MalformedProviderOutput unless `new_prompt` is non-empty, keeps the
/// old prompt's first sentence and keeps every slot of the old prompt.
void check_rewrite(const std::string& old_prompt, const std::string& new_prompt);

class LlmPromptUpdater : public PromptUpdater {
 public:
  explicit LlmPromptUpdater(providers::ChatProvider& chat) : chat_(chat) {}
  std::string update(RoleId role, const std::string& old_prompt, const std::vector<ReviewEntry>& reviews) override;

 private:
  providers::ChatProvider& chat_;
};

struct RfoStep {
  NodeId node_id = 0;
  RoleId agent = RoleId::AccountManager;
  std::string feedback;
  std::optional<std::string> review;
  std::vector<NodeId> down_targets;
  std::vector<std::string> down_feedbacks;
};

struct RfoReport {
  std::string report_id;
  std::string session_id;
  std::string trace_id;
  std::string feedback;
  std::string timestamp;
  std::vector<NodeId> visited;
  std::vector<RfoStep> steps;
  std::map<RoleId, std::vector<ReviewEntry>> reviews_by_agent;
  std::map<RoleId, std::string> prompts_before;
  std::map<RoleId, std::string> prompts_after;
};

json to_json(const RfoReport& r);
RfoReport report_from_json(const json& j);

/// Depth-first feedback propagation over `trace` with an explicit LIFO stack,
/// then one prompt update per reviewed role, committed to `registry` in a
/// single `apply`. Any error leaves the registry untouched.
RfoReport run_rfo(const agents::FeedbackEnvelope& feedback, const CallTrace& trace, agents::PromptRegistry& registry,
                  Optimizer& optimizer, PromptUpdater& updater, const std::string& timestamp,
                  const std::string& report_id = {});

}  // namespace acn::rfo
