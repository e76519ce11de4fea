#include "acn/rfo/rfo.h"

#include <algorithm>
#include <set>

#include "acn/core/error.h"
#include "acn/core/text.h"

namespace acn::rfo {

using providers::ChatRequest;
using providers::ChatResponse;
using providers::Speaker;

namespace {

constexpr const char* kOptimizerInstruction =
    "You are the optimizer of a network of cooperating agents. A [Call Agent] received [Input], produced "
    "[Output] and handed [Message] to each [Called Agent]. Its adjustable [Parameter] is its prompt, "
    "shown as it was used. The environment returned [Feedback] about [Output].\n"
    "Decide whether the [Feedback] is caused by the [Call Agent]. If so, give a concrete suggestion for "
    "changing its prompt in `review`. If a [Called Agent] is responsible, name it in `down_targets` by node "
    "id and give it a feedback of its own in `down_feedbacks`, one per target. When the [Called Agent] is "
    "None, leave `down_targets` and `down_feedbacks` as None. Always answer by calling Optimize.";

constexpr const char* kRewriteInstruction =
    "You maintain the prompt of one agent. Rewrite the [Current Prompt] so that it addresses every item "
    "in [Reviews]. Keep its first sentence exactly as it is and keep every placeholder written in braces, "
    "such as {USER_PROFILE}. Answer with the complete new prompt and nothing else.";

std::string id_list(const std::vector<NodeId>& ids) {
  std::string out;
  for (auto id : ids) out += (out.empty() ? "" : ", ") + std::to_string(id);
  return "[" + out + "]";
}

}  // namespace

void validate_output(const OptimizerOutput& out, const TraceNode& node) {
  if (out.down_targets.size() != out.down_feedbacks.size()) {
    throw Error(ErrorCode::MalformedOptimizerOutput,
                "down_targets and down_feedbacks differ in length at node " + std::to_string(node.node_id));
  }
  for (auto t : out.down_targets) {
    if (std::find(node.children.begin(), node.children.end(), t) == node.children.end()) {
      throw Error(ErrorCode::MalformedOptimizerOutput,
                  "node " + std::to_string(t) + " is not a child of node " + std::to_string(node.node_id));
    }
  }
  if (out.prompt_review && text::trim(*out.prompt_review).empty()) {
    throw Error(ErrorCode::MalformedOptimizerOutput, "empty review at node " + std::to_string(node.node_id));
  }
  if (!out.prompt_review && out.down_targets.empty()) {
    throw Error(ErrorCode::MalformedOptimizerOutput,
                "optimizer neither reviewed nor blamed anyone at node " + std::to_string(node.node_id));
  }
}

const FunctionSpec& optimize_function() {
  static const FunctionSpec spec{
      std::string(kOptimizeFunction),
      "Report the review of the call agent's prompt and the feedback passed to called agents.",
      {{"review", ParamType::Text, false, "Suggested prompt adjustment, omitted when the call agent is not at fault"},
       {"down_targets", ParamType::TextList, true, "Node ids of blamed called agents, or None"},
       {"down_feedbacks", ParamType::TextList, true, "Feedback for each blamed agent, or None"}}};
  return spec;
}

std::vector<ChildSummary> child_summaries(const CallTrace& trace, const TraceNode& node) {
  std::vector<ChildSummary> out;
  for (auto c : node.children) {
    const auto& child = trace.node(c);
    out.push_back({c, child.agent, child.input_message});
  }
  return out;
}

ChatRequest build_optimizer_prompt(const std::string& feedback, const TraceNode& node,
                                   const std::vector<ChildSummary>& children) {
  std::string called;
  std::string message;
  for (const auto& c : children) {
    called += "- node " + std::to_string(c.node_id) + ": " + std::string(to_string(c.agent)) + "\n";
    message += "- node " + std::to_string(c.node_id) + ": " + c.message + "\n";
  }
  if (children.empty()) called = message = "None\n";

  ChatRequest req;
  req.role = "Optimizer";
  req.system_prompt = std::string(kOptimizerInstruction) + "\n\n[Call Agent]\n" +
                      std::string(to_string(node.agent)) + " (node " + std::to_string(node.node_id) +
                      ")\n\n[Parameter]\n" + node.prompt_snapshot + "\n\n[Input]\n" + node.input_message +
                      "\n\n[Output]\n" + node.output_message + "\n\n[Intermediate Result]\n" +
                      node.result_payload.dump() + "\n\n[Called Agent]\n" + called + "\n[Message]\n" + message +
                      "\n[Feedback]\n" + feedback + "\n";
  req.messages.push_back({Speaker::User, feedback});
  req.available_functions = {optimize_function()};
  return req;
}

OptimizerOutput parse_optimizer_response(const ChatResponse& resp) {
  if (!resp.is_call() || resp.function_call->name != kOptimizeFunction) {
    throw Error(ErrorCode::MalformedOptimizerOutput, "optimizer must answer with Optimize");
  }
  const auto& call = *resp.function_call;
  OptimizerOutput out;
  try {
    for (const auto& t : providers::parse_text_list(call.arg_or("down_targets", ""))) {
      std::size_t used = 0;
      const unsigned long long id = std::stoull(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      out.down_targets.push_back(id);
    }
    out.down_feedbacks = providers::parse_text_list(call.arg_or("down_feedbacks", ""));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::MalformedOptimizerOutput, "down_targets must be node ids");
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedOptimizerOutput, e.what());
  }
  const std::string review = text::trim(call.arg_or("review", ""));
  if (!review.empty() && review != "None") out.prompt_review = review;
  return out;
}

OptimizerOutput LlmOptimizer::optimize(const std::string& feedback, const TraceNode& node, const CallTrace& trace) {
  const auto req = build_optimizer_prompt(feedback, node, child_summaries(trace, node));
  ChatResponse resp;
  try {
    resp = chat_.complete(req);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedProviderOutput) throw Error(ErrorCode::MalformedOptimizerOutput, e.what());
    throw;
  }
  return parse_optimizer_response(resp);
}

ChatRequest build_rewrite_request(const std::string& old_prompt, const std::vector<ReviewEntry>& reviews) {
  if (reviews.empty()) throw Error(ErrorCode::Precondition, "prompt update needs at least one review");
  std::string body = "[Current Prompt]\n" + old_prompt + "\n\n[Reviews]\n";
  for (std::size_t i = 0; i < reviews.size(); ++i) body += std::to_string(i + 1) + ". " + reviews[i].text + "\n";
  ChatRequest req;
  req.role = "PromptRewriter";
  req.system_prompt = kRewriteInstruction;
  req.messages.push_back({Speaker::User, body});
  return req;
}

void check_rewrite(const std::string& old_prompt, const std::string& new_prompt) {
  if (text::trim(new_prompt).empty()) throw Error(ErrorCode::MalformedProviderOutput, "rewriter returned nothing");
  const std::string role_line = text::first_sentence(old_prompt);
  if (new_prompt.rfind(role_line, 0) != 0) {
    throw Error(ErrorCode::MalformedProviderOutput, "rewritten prompt changed the role sentence");
  }
  for (const auto& s : agents::slots_in(old_prompt)) {
    if (!text::contains(new_prompt, "{" + s + "}")) {
      throw Error(ErrorCode::MalformedProviderOutput, "rewritten prompt lost the {" + s + "} slot");
    }
  }
}

std::string update_prompt(const std::string& old_prompt, const std::vector<ReviewEntry>& reviews,
                          providers::ChatProvider& chat) {
  const auto req = build_rewrite_request(old_prompt, reviews);
  const auto resp = chat.complete(req);
  if (resp.is_call()) throw Error(ErrorCode::MalformedProviderOutput, "rewriter must answer with text");
  std::string out = *resp.assistant_text;
  check_rewrite(old_prompt, out);
  return out;
}

std::string LlmPromptUpdater::update(RoleId, const std::string& old_prompt, const std::vector<ReviewEntry>& reviews) {
  return update_prompt(old_prompt, reviews, chat_);
}

namespace {

json review_to_json(const ReviewEntry& r) {
  return {{"text", r.text}, {"source_feedback", r.source_feedback}, {"trace_node", r.trace_node},
          {"timestamp", r.timestamp}};
}

json prompts_to_json(const std::map<RoleId, std::string>& m) {
  json j = json::object();
  for (const auto& [role, p] : m) j[std::string(to_string(role))] = p;
  return j;
}

std::map<RoleId, std::string> prompts_from_json(const json& j) {
  std::map<RoleId, std::string> m;
  for (const auto& [k, v] : j.items()) m[role_from_string(k)] = v.get<std::string>();
  return m;
}

}  // namespace

json to_json(const RfoReport& r) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"node_id", s.node_id},
                     {"agent", to_string(s.agent)},
                     {"feedback", s.feedback},
                     {"review", s.review ? json(*s.review) : json(nullptr)},
                     {"down_targets", s.down_targets},
                     {"down_feedbacks", s.down_feedbacks}});
  }
  json reviews = json::object();
  for (const auto& [role, list] : r.reviews_by_agent) {
    json arr = json::array();
    for (const auto& e : list) arr.push_back(review_to_json(e));
    reviews[std::string(to_string(role))] = arr;
  }
  return {{"report_id", r.report_id},
          {"session_id", r.session_id},
          {"trace_id", r.trace_id},
          {"feedback", r.feedback},
          {"timestamp", r.timestamp},
          {"visited", r.visited},
          {"steps", steps},
          {"reviews_by_agent", reviews},
          {"prompts_before", prompts_to_json(r.prompts_before)},
          {"prompts_after", prompts_to_json(r.prompts_after)}};
}

RfoReport report_from_json(const json& j) {
  RfoReport r;
  r.report_id = j.at("report_id").get<std::string>();
  r.session_id = j.at("session_id").get<std::string>();
  r.trace_id = j.at("trace_id").get<std::string>();
  r.feedback = j.at("feedback").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.visited = j.at("visited").get<std::vector<NodeId>>();
  for (const auto& s : j.at("steps")) {
    RfoStep step;
    step.node_id = s.at("node_id").get<NodeId>();
    step.agent = role_from_string(s.at("agent").get<std::string>());
    step.feedback = s.at("feedback").get<std::string>();
    if (!s.at("review").is_null()) step.review = s.at("review").get<std::string>();
    step.down_targets = s.at("down_targets").get<std::vector<NodeId>>();
    step.down_feedbacks = s.at("down_feedbacks").get<std::vector<std::string>>();
    r.steps.push_back(std::move(step));
  }
  for (const auto& [k, arr] : j.at("reviews_by_agent").items()) {
    auto& list = r.reviews_by_agent[role_from_string(k)];
    for (const auto& e : arr) {
      list.push_back({e.at("text").get<std::string>(), e.at("source_feedback").get<std::string>(),
                      e.at("trace_node").get<std::uint64_t>(), e.at("timestamp").get<std::string>()});
    }
  }
  r.prompts_before = prompts_from_json(j.at("prompts_before"));
  r.prompts_after = prompts_from_json(j.at("prompts_after"));
  return r;
}

RfoReport run_rfo(const agents::FeedbackEnvelope& feedback, const CallTrace& trace, agents::PromptRegistry& registry,
                  Optimizer& optimizer, PromptUpdater& updater, const std::string& timestamp,
                  const std::string& report_id) {
  if (!trace.root()) throw Error(ErrorCode::Precondition, "feedback targets an empty trace");
  if (!feedback.target_trace.empty() && feedback.target_trace != trace.trace_id()) {
    throw Error(ErrorCode::Precondition, "feedback targets trace " + feedback.target_trace + ", not " +
                                             trace.trace_id());
  }
  if (text::trim(feedback.text).empty()) throw Error(ErrorCode::Precondition, "empty feedback");

  RfoReport report;
  report.report_id = report_id;
  report.session_id = trace.session_id();
  report.trace_id = trace.trace_id();
  report.feedback = feedback.text;
  report.timestamp = timestamp;
  report.prompts_before = registry.snapshot();

  std::vector<std::pair<NodeId, std::string>> stack{{*trace.root(), feedback.text}};
  std::set<NodeId> seen{*trace.root()};
  while (!stack.empty()) {
    auto [id, fb] = std::move(stack.back());
    stack.pop_back();
    const TraceNode& node = trace.node(id);
    report.visited.push_back(id);

    OptimizerOutput out = optimizer.optimize(fb, node, trace);
    validate_output(out, node);

    if (out.prompt_review) {
      report.reviews_by_agent[node.agent].push_back({*out.prompt_review, fb, id, timestamp});
    }
    for (std::size_t i = 0; i < out.down_targets.size(); ++i) {
      if (!seen.insert(out.down_targets[i]).second) {
        throw Error(ErrorCode::MalformedOptimizerOutput,
                    "node " + std::to_string(out.down_targets[i]) + " pushed twice " + id_list(out.down_targets));
      }
      stack.emplace_back(out.down_targets[i], out.down_feedbacks[i]);
    }
    report.steps.push_back({id, node.agent, fb, out.prompt_review, out.down_targets, out.down_feedbacks});
  }

  std::map<RoleId, std::string> updated;
  for (const auto& [role, reviews] : report.reviews_by_agent) {
    updated[role] = updater.update(role, report.prompts_before.at(role), reviews);
  }
  report.prompts_after = report.prompts_before;
  for (const auto& [role, p] : updated) report.prompts_after[role] = p;
  if (!updated.empty()) {
    registry.apply(updated, "rfo " + (report_id.empty() ? trace.trace_id() : report_id), timestamp);
  }
  return report;
}

}  // namespace acn::rfo
