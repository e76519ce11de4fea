#include "acn/agents/agents.h"

#include <set>

#include "acn/core/error.h"
#include "acn/core/text.h"

namespace acn::agents {

using providers::ChatMessage;
using providers::ChatRequest;
using providers::ChatResponse;
using providers::Speaker;
using retrieval::ImageRecord;
using retrieval::KnowledgeChunk;

void AgentsConfig::validate() const {
  if (max_steps < 1) throw Error(ErrorCode::InvalidArgument, "max_steps must be >= 1");
  if (context_budget_chars < 1) throw Error(ErrorCode::InvalidArgument, "context budget must be >= 1");
}

std::string_view to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Reply: return "reply";
    case OutcomeKind::Clarify: return "clarify";
    case OutcomeKind::Suggest: return "suggest";
    case OutcomeKind::Dispatch: return "dispatch";
    case OutcomeKind::ProfileUpdate: return "profile_update";
    case OutcomeKind::Feedback: return "feedback";
  }
  return "reply";
}

std::string ArticleDraft::to_markdown() const {
  std::string out;
  auto add = [&](const std::string& block) {
    if (!out.empty()) out += "\n\n";
    out += block;
  };
  if (!notice.empty()) add("> " + notice);
  for (const auto& s : sections) add("## " + s.heading + "\n\n" + s.markdown_body);
  return out;
}

json to_json(const ArticleDraft& a) {
  json sections = json::array();
  for (const auto& s : a.sections) sections.push_back({{"heading", s.heading}, {"markdown_body", s.markdown_body}});
  json refs = json::array();
  for (const auto& r : a.image_refs) refs.push_back(retrieval::to_json(r));
  return {{"sections", sections}, {"image_refs", refs}, {"notice", a.notice}};
}

ArticleDraft article_from_json(const json& j) {
  ArticleDraft a;
  for (const auto& s : j.at("sections")) {
    a.sections.push_back({s.at("heading").get<std::string>(), s.at("markdown_body").get<std::string>()});
  }
  for (const auto& r : j.at("image_refs")) a.image_refs.push_back(retrieval::image_record_from_json(r));
  a.notice = j.value("notice", "");
  return a;
}

// ---------------------------------------------------------------------------
// Account Manager

AccountManagerOutcome account_manager_turn(const SessionContext& session, const std::string& user_message,
                                           const std::string& am_prompt, const std::string& profile_prompt,
                                           providers::ChatProvider& chat, std::string* assembled_prompt) {
  ChatRequest req;
  req.role = std::string(to_string(RoleId::AccountManager));
  req.system_prompt = text::fill_slots(am_prompt, {{std::string(slot::UserProfile), profile_prompt}});
  for (const auto& t : session.history) {
    req.messages.push_back({Speaker::User, t.user});
    req.messages.push_back({Speaker::Assistant, t.assistant});
  }
  req.messages.push_back({Speaker::User, user_message});
  req.available_functions = role_registry(RoleId::AccountManager);
  if (assembled_prompt) *assembled_prompt = req.system_prompt;

  AccountManagerOutcome out;
  auto fallback = [&](const std::string& why) {
    out = AccountManagerOutcome{};
    out.kind = OutcomeKind::Reply;
    out.text = std::string(kApologyReply);
    out.warning = why;
    return out;
  };

  ChatResponse resp;
  try {
    resp = chat.complete(req);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedProviderOutput) throw;
    return fallback(e.what());
  }
  out.provider_response = providers::to_json(resp);
  if (!resp.is_call()) {
    out.kind = OutcomeKind::Reply;
    out.text = *resp.assistant_text;
    return out;
  }

  const auto& call = *resp.function_call;
  try {
    if (call.name == fn::NormalReply) {
      out.kind = OutcomeKind::Reply;
      out.text = call.arg("content");
    } else if (call.name == fn::ClarifyingQuestions) {
      out.kind = OutcomeKind::Clarify;
      out.text = call.arg("questions");
    } else if (call.name == fn::ProvidingSuggestions) {
      out.kind = OutcomeKind::Suggest;
      out.text = call.arg("suggestions");
    } else if (call.name == fn::ContactSolutionStrategist) {
      const std::string requirement = text::trim(call.arg("requirement"));
      if (requirement.empty()) throw Error(ErrorCode::MalformedProviderOutput, "empty requirement");
      out.kind = OutcomeKind::Dispatch;
      out.requirement = UserRequirement{requirement, session.session_id, session.turn_index};
    } else if (call.name == fn::TrackingUserPreferences) {
      const std::string t = text::trim(call.arg("text"));
      if (t.empty()) throw Error(ErrorCode::MalformedProviderOutput, "empty profile descriptor");
      out.kind = OutcomeKind::ProfileUpdate;
      out.descriptor = profile::ProfileDescriptor{t, attitude_from_string(call.arg("attitude")), {}};
      out.text = call.arg_or("reply", "Noted. I will keep that in mind: " + t + ".");
    } else if (call.name == fn::AcceptingFeedbackAndReflection) {
      const std::string fb = text::trim(call.arg_or("feedback", user_message));
      if (session.last_trace_id.empty()) {
        out.kind = OutcomeKind::Reply;
        out.text = "Thanks for the feedback. There is no earlier answer in this session to reflect on yet.";
        out.warning = "feedback without a previous trace";
      } else {
        out.kind = OutcomeKind::Feedback;
        out.feedback = FeedbackEnvelope{fb.empty() ? user_message : fb, session.session_id, session.last_trace_id};
        out.text = call.arg_or("reply",
                               "Thank you for the feedback. The team will reflect on it and adjust how it works.");
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedProviderOutput && e.code() != ErrorCode::InvalidArgument) throw;
    return fallback(e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solution Strategist

std::vector<PlanStep> repair_plan(std::vector<PlanStep> steps) {
  auto first_final = std::find_if(steps.begin(), steps.end(),
                                  [](const PlanStep& s) { return s.action == PlanAction::FinalizeArticle; });
  if (first_final != steps.end()) {
    steps.erase(first_final + 1, steps.end());
    first_final->payload.clear();
  } else {
    steps.push_back({PlanAction::FinalizeArticle, "", 0});
  }
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i].step_index = i;
  return steps;
}

Plan accept_plan(std::vector<PlanStep> raw_steps, std::string rationale, std::size_t max_steps, bool* repaired) {
  Plan plan;
  plan.rationale = std::move(rationale);
  plan.steps = repair_plan(raw_steps);
  if (repaired) *repaired = plan.steps != raw_steps;
  auto violations = validate_plan(plan);
  if (plan.steps.size() > max_steps) violations.push_back(PlanViolation::TooLong);
  if (!violations.empty()) {
    std::string names;
    for (auto v : violations) names += (names.empty() ? "" : ", ") + std::string(to_string(v));
    throw Error(ErrorCode::PlanInvalid, names);
  }
  return plan;
}

namespace {

std::string describe_call(const providers::FunctionCall& call) {
  json args = json::object();
  for (const auto& [k, v] : call.arguments) args[k] = v;
  return call.name + " " + args.dump();
}

std::string render_plan(const Plan& plan) {
  std::string out;
  for (const auto& s : plan.steps) {
    if (!out.empty()) out += '\n';
    out += std::to_string(s.step_index + 1) + ". " + std::string(to_string(s.action));
    if (!s.payload.empty()) out += ": " + s.payload;
  }
  return out;
}

}  // namespace

PlanningResult strategist_plan(const UserRequirement& req, const std::string& profile_prompt,
                               const std::string& ss_prompt, const AgentsConfig& cfg,
                               providers::ChatProvider& chat) {
  cfg.validate();
  if (text::trim(req.text).empty()) throw Error(ErrorCode::Precondition, "empty user requirement");
  ChatRequest creq;
  creq.role = std::string(to_string(RoleId::SolutionStrategist));
  creq.system_prompt = text::fill_slots(ss_prompt, {{std::string(slot::UserRequirement), req.text},
                                                    {std::string(slot::UserProfile), profile_prompt}});
  creq.messages.push_back({Speaker::User, req.text});
  creq.available_functions = role_registry(RoleId::SolutionStrategist);

  PlanningResult result;
  result.assembled_prompt = creq.system_prompt;
  std::string rationale;
  // One extra call for a leading chain-of-thought outline, one to detect overrun.
  const std::size_t max_calls = cfg.max_steps + 2;
  for (std::size_t calls = 0; calls < max_calls; ++calls) {
    const ChatResponse resp = chat.complete(creq);
    if (!resp.is_call()) {
      if (!result.raw_steps.empty() || !rationale.empty()) break;
      rationale = *resp.assistant_text;
      creq.messages.push_back({Speaker::Assistant, rationale});
      continue;
    }
    const auto& call = *resp.function_call;
    const auto action = plan_action_from_string(call.name);
    if (!action) throw Error(ErrorCode::MalformedProviderOutput, "unexpected function " + call.name);
    std::string payload;
    if (*action == PlanAction::SearchInformation) payload = call.arg_or("query", "");
    if (*action == PlanAction::GenerateContent) payload = call.arg_or("requirement", "");
    result.raw_steps.push_back({*action, text::trim(payload), result.raw_steps.size()});
    creq.messages.push_back({Speaker::Assistant, describe_call(call)});
    creq.messages.push_back(
        {Speaker::FunctionResult, "Step " + std::to_string(result.raw_steps.size()) + " recorded."});
    if (*action == PlanAction::FinalizeArticle || result.raw_steps.size() > cfg.max_steps) break;
  }
  result.plan = accept_plan(result.raw_steps, rationale, cfg.max_steps, &result.repaired);
  return result;
}

// ---------------------------------------------------------------------------
// Content Creator

std::string render_knowledge(const std::vector<KnowledgeChunk>& knowledge) {
  if (knowledge.empty()) return "No external knowledge available.";
  std::string out;
  for (std::size_t i = 0; i < knowledge.size(); ++i) {
    if (!out.empty()) out += "\n\n";
    out += "[" + std::to_string(i + 1) + "] (" + knowledge[i].source_url + ")\n" + knowledge[i].text;
  }
  return out;
}

std::string render_image_source(const std::vector<ImageRecord>& images) {
  if (images.empty()) return "No images available.";
  std::string out;
  for (const auto& img : images) {
    if (!out.empty()) out += '\n';
    out += "- url: " + img.url + " | caption: " + img.caption + " | summary: " + img.summary;
  }
  return out;
}

std::string assemble_creator_prompt(const std::string& cc_prompt, const std::string& writing_requirement,
                                    const std::vector<KnowledgeChunk>& knowledge,
                                    const std::vector<ImageRecord>& images, const std::string& profile_prompt) {
  return text::fill_slots(cc_prompt, {{std::string(slot::ExternalKnowledge), render_knowledge(knowledge)},
                                      {std::string(slot::ImageSource), render_image_source(images)},
                                      {std::string(slot::WritingRequirement), writing_requirement},
                                      {std::string(slot::UserProfile), profile_prompt}});
}

namespace {

// Removes <img ...> tags; returns how many were removed.
std::size_t strip_html_images(std::string& body) {
  std::size_t removed = 0;
  std::size_t i = 0;
  while ((i = text::to_lower(body).find("<img", i)) != std::string::npos) {
    const auto end = body.find('>', i);
    body.erase(i, end == std::string::npos ? std::string::npos : end - i + 1);
    ++removed;
  }
  return removed;
}

}  // namespace

CreatedContent content_create(const std::string& writing_requirement, const std::vector<KnowledgeChunk>& knowledge,
                              const std::vector<ImageRecord>& images, const std::string& profile_prompt,
                              const std::string& cc_prompt, providers::ChatProvider& chat) {
  if (text::trim(writing_requirement).empty()) throw Error(ErrorCode::Precondition, "empty writing requirement");
  CreatedContent out;
  ChatRequest req;
  req.role = std::string(to_string(RoleId::ContentCreator));
  req.system_prompt = assemble_creator_prompt(cc_prompt, writing_requirement, knowledge, images, profile_prompt);
  req.messages.push_back({Speaker::User, writing_requirement});
  out.assembled_prompt = req.system_prompt;

  const ChatResponse resp = chat.complete(req);
  std::string body = text::trim(*resp.assistant_text);

  // A leading markdown heading becomes the section heading.
  out.heading = text::trim(writing_requirement);
  if (body.rfind('#', 0) == 0) {
    const auto nl = body.find('\n');
    std::string first = body.substr(0, nl);
    const auto hashes = first.find_first_not_of('#');
    if (hashes != std::string::npos && hashes <= 6 && first[hashes] == ' ') {
      out.heading = text::trim(first.substr(hashes));
      body = nl == std::string::npos ? std::string{} : text::trim(body.substr(nl));
    }
  }

  if (std::size_t n = strip_html_images(body); n > 0) {
    out.warnings.push_back("stripped " + std::to_string(n) + " raw <img> tag(s)");
  }

  std::map<std::string, const ImageRecord*> known;
  for (const auto& img : images) known.emplace(img.url, &img);
  std::set<std::string> used;
  std::string rebuilt;
  std::size_t cursor = 0;
  for (const auto& link : retrieval::find_image_links(body)) {
    rebuilt += body.substr(cursor, link.begin - cursor);
    cursor = link.end;
    auto it = known.find(link.url);
    if (it == known.end()) {
      out.warnings.push_back("stripped image reference to unknown URL " + link.url);
      continue;
    }
    const std::string alt = text::trim(link.alt).empty() ? it->second->caption : text::trim(link.alt);
    rebuilt += "![" + alt + "](" + link.url + ")";
    if (used.insert(link.url).second) out.used_images.push_back(*it->second);
  }
  rebuilt += body.substr(cursor);
  out.markdown_body = text::trim(rebuilt);
  if (out.markdown_body.empty()) {
    throw Error(ErrorCode::MalformedProviderOutput, "content creator returned an empty body");
  }
  return out;
}

std::vector<KnowledgeChunk> budget_context(const std::vector<KnowledgeChunk>& chunks, std::size_t budget) {
  std::vector<KnowledgeChunk> out;
  std::size_t used = 0;
  // Walk newest to oldest, keep what fits, restore order.
  for (auto it = chunks.rbegin(); it != chunks.rend(); ++it) {
    if (used + it->text.size() > budget) {
      if (out.empty()) {
        KnowledgeChunk clipped = *it;
        clipped.text = clipped.text.substr(0, text::utf8_floor(clipped.text, budget));
        out.push_back(std::move(clipped));
      }
      break;
    }
    used += it->text.size();
    out.push_back(*it);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Plan execution

ExecutionResult execute_plan(const Plan& plan, const std::string& profile_prompt, const AgentEnvironment& env,
                             CallTrace& trace, NodeId strategist_node) {
  if (!validate_plan(plan).empty()) throw Error(ErrorCode::Precondition, "execute_plan needs a valid plan");
  if (!env.prompts) throw Error(ErrorCode::Precondition, "agent environment has no prompt registry");
  ExecutionResult result;
  std::vector<KnowledgeChunk> chunks;
  std::set<std::string> archived;
  std::size_t searches = 0;
  std::size_t failed_searches = 0;
  const std::string im_prompt = env.prompts->prompt(RoleId::InformationManager);
  const std::string cc_prompt = env.prompts->prompt(RoleId::ContentCreator);

  for (const auto& step : plan.steps) {
    switch (step.action) {
      case PlanAction::SearchInformation: {
        ++searches;
        const NodeId node = trace.record_invocation(strategist_node, RoleId::InformationManager, step.payload, "",
                                                    im_prompt, {{"step_index", step.step_index}});
        try {
          auto gathered = retrieval::search_and_gather(step.payload, env.filter, env.providers, im_prompt);
          json chunk_json = json::array();
          for (const auto& c : gathered.chunks) chunk_json.push_back(retrieval::to_json(c));
          json image_json = json::array();
          for (const auto& img : gathered.images) image_json.push_back(retrieval::to_json(img));
          json warnings = json::array();
          for (const auto& w : gathered.warnings) warnings.push_back(w.where + ": " + w.message);
          for (auto& c : gathered.chunks) chunks.push_back(std::move(c));
          for (auto& img : gathered.images) {
            if (archived.insert(img.url).second) result.image_archive.push_back(std::move(img));
          }
          trace.complete_invocation(
              node,
              "Retrieved " + std::to_string(chunk_json.size()) + " relevant chunks and " +
                  std::to_string(image_json.size()) + " images from " + std::to_string(gathered.pages_used) +
                  " of " + std::to_string(gathered.pages_seen) + " pages.",
              {{"status", "ok"},
               {"query", step.payload},
               {"lambda", env.filter.lambda},
               {"chunks", chunk_json},
               {"images", image_json},
               {"warnings", warnings}});
        } catch (const Error& e) {
          ++failed_searches;
          trace.complete_invocation(node, "Search failed.",
                                    {{"status", "failed"}, {"query", step.payload}, {"error", e.what()}});
        }
        break;
      }
      case PlanAction::GenerateContent: {
        const auto context = budget_context(chunks, env.agents.context_budget_chars);
        const std::string assembled =
            assemble_creator_prompt(cc_prompt, step.payload, context, result.image_archive, profile_prompt);
        const NodeId node = trace.record_invocation(strategist_node, RoleId::ContentCreator, step.payload, "",
                                                    assembled, {{"step_index", step.step_index}});
        try {
          auto created = content_create(step.payload, context, result.image_archive, profile_prompt, cc_prompt,
                                        *env.providers.chat);
          json used = json::array();
          for (const auto& img : created.used_images) used.push_back(img.url);
          trace.complete_invocation(node, created.markdown_body,
                                    {{"status", "ok"},
                                     {"requirement", step.payload},
                                     {"heading", created.heading},
                                     {"image_refs", used},
                                     {"knowledge_chunks", context.size()},
                                     {"warnings", created.warnings}});
          for (const auto& img : created.used_images) {
            const bool dup = std::any_of(result.article.image_refs.begin(), result.article.image_refs.end(),
                                         [&](const ImageRecord& r) { return r.url == img.url; });
            if (!dup) result.article.image_refs.push_back(img);
          }
          result.article.sections.push_back({created.heading, created.markdown_body});
        } catch (const Error& e) {
          if (e.code() == ErrorCode::Precondition) throw;
          trace.complete_invocation(node, "Generation failed.",
                                    {{"status", "failed"}, {"requirement", step.payload}, {"error", e.what()}});
        }
        break;
      }
      case PlanAction::FinalizeArticle: {
        if (searches > 0 && failed_searches == searches) result.article.notice = std::string(kNoSourcesNotice);
        const std::string md = result.article.to_markdown();
        trace.record_invocation(strategist_node, RoleId::SolutionStrategist, std::string(fn::FinalizeArticle), md,
                                trace.node(strategist_node).prompt_snapshot,
                                {{"step_index", step.step_index},
                                 {"sections", result.article.sections.size()},
                                 {"image_refs", result.article.image_refs.size()}});
        break;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Full turn

TurnResult run_turn(const SessionContext& session, const std::string& user_message, const AgentEnvironment& env,
                    profile::ProfileStore& profiles, const profile::SimilarityConfig& similarity,
                    const std::string& now, CallTrace& trace) {
  if (!env.prompts) throw Error(ErrorCode::Precondition, "agent environment has no prompt registry");
  if (!trace.empty()) throw Error(ErrorCode::Precondition, "run_turn needs an empty trace");
  TurnResult result;
  const profile::UserProfile before = profiles.load(session.user_id);
  const std::string profile_prompt = profile::render_profile_prompt(before);

  std::string am_snapshot;
  result.outcome = account_manager_turn(session, user_message, env.prompts->prompt(RoleId::AccountManager),
                                        profile_prompt, *env.providers.chat, &am_snapshot);
  auto& outcome = result.outcome;
  const NodeId root = trace.record_invocation(std::nullopt, RoleId::AccountManager, user_message, "", am_snapshot);
  json payload = {{"outcome", to_string(outcome.kind)}, {"provider_response", outcome.provider_response}};
  if (!outcome.warning.empty()) payload["warning"] = outcome.warning;

  switch (outcome.kind) {
    case OutcomeKind::ProfileUpdate: {
      profile::ProfileDescriptor d = *outcome.descriptor;
      d.updated_at = now;
      profile::UpdateOutcome upd;
      result.profile_after = profiles.update(session.user_id, d, similarity, *env.providers.embedder, &upd);
      payload["profile_update"] = {{"text", d.text},
                                   {"attitude", to_string(d.attitude)},
                                   {"replaced_index", upd.replaced ? json(*upd.replaced) : json(nullptr)},
                                   {"best_score", upd.best_score},
                                   {"profile_size", result.profile_after->descriptors.size()}};
      break;
    }
    case OutcomeKind::Feedback:
      payload["feedback"] = {{"text", outcome.feedback->text}, {"target_trace", outcome.feedback->target_trace}};
      break;
    case OutcomeKind::Dispatch: {
      const auto& req = *outcome.requirement;
      payload["requirement"] = req.text;
      const std::string ss_prompt = env.prompts->prompt(RoleId::SolutionStrategist);
      PlanningResult planning;
      try {
        planning = strategist_plan(req, profile_prompt, ss_prompt, env.agents, *env.providers.chat);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::PlanInvalid && e.code() != ErrorCode::MalformedProviderOutput) throw;
        const std::string assembled = text::fill_slots(
            ss_prompt, {{std::string(slot::UserRequirement), req.text}, {std::string(slot::UserProfile), profile_prompt}});
        trace.record_invocation(root, RoleId::SolutionStrategist, req.text, "Planning failed.", assembled,
                                {{"status", "failed"}, {"error", e.what()}});
        outcome.text = "Sorry, I could not work out a plan for that request. Could you describe it differently?";
        payload["warning"] = e.what();
        break;
      }
      const NodeId ss = trace.record_invocation(root, RoleId::SolutionStrategist, req.text, render_plan(planning.plan),
                                                planning.assembled_prompt,
                                                {{"plan", to_json(planning.plan)}, {"repaired", planning.repaired}});
      auto exec = execute_plan(planning.plan, profile_prompt, env, trace, ss);
      outcome.text = exec.article.to_markdown();
      if (outcome.text.empty()) outcome.text = "The plan finished without producing any content.";
      trace.merge_payload(ss, {{"article", to_json(exec.article)}});
      result.plan = std::move(planning.plan);
      result.article = std::move(exec.article);
      result.image_archive = std::move(exec.image_archive);
      break;
    }
    default:
      break;
  }
  trace.complete_invocation(root, outcome.text, payload);
  return result;
}

}  // namespace acn::agents
