#include "acn/core/types.h"

#include <set>

#include "acn/core/error.h"

namespace acn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Precondition: return "PreconditionViolation";
    case ErrorCode::UnknownParent: return "UnknownParent";
    case ErrorCode::DuplicateRoot: return "DuplicateRoot";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::RegistryViolation: return "RegistryViolation";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MalformedProviderOutput: return "MalformedProviderOutput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PlanInvalid: return "PlanInvalid";
    case ErrorCode::MalformedOptimizerOutput: return "MalformedOptimizerOutput";
    case ErrorCode::CriterionMismatch: return "CriterionMismatch";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Storage: return "StorageError";
    case ErrorCode::Parse: return "ParseError";
  }
  return "Unknown";
}

std::string_view to_string(Attitude a) {
  switch (a) {
    case Attitude::Positive: return "Positive";
    case Attitude::Neutral: return "Neutral";
    case Attitude::Negative: return "Negative";
    case Attitude::None: return "None";
  }
  return "None";
}

Attitude attitude_from_string(std::string_view s) {
  if (s == "Positive" || s == "positive") return Attitude::Positive;
  if (s == "Neutral" || s == "neutral") return Attitude::Neutral;
  if (s == "Negative" || s == "negative") return Attitude::Negative;
  if (s == "None" || s == "none") return Attitude::None;
  throw Error(ErrorCode::InvalidArgument, "unknown attitude '" + std::string(s) + "'");
}

std::string_view to_string(RoleId r) {
  switch (r) {
    case RoleId::AccountManager: return "AccountManager";
    case RoleId::SolutionStrategist: return "SolutionStrategist";
    case RoleId::InformationManager: return "InformationManager";
    case RoleId::ContentCreator: return "ContentCreator";
  }
  return "AccountManager";
}

RoleId role_from_string(std::string_view s) {
  for (RoleId r : kAllRoles) {
    if (to_string(r) == s) return r;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown role '" + std::string(s) + "'");
}

const FunctionParam* FunctionSpec::find_param(std::string_view param) const {
  for (const auto& p : parameters) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

namespace {

std::vector<FunctionSpec> account_manager_functions() {
  return {
      {std::string(fn::NormalReply), "Reply to the user in a friendly manner.",
       {{"content", ParamType::Text, true, "The reply shown to the user."}}},
      {std::string(fn::ClarifyingQuestions),
       "Ask questions that help the user articulate a precise requirement.",
       {{"questions", ParamType::Text, true, "The clarifying questions."}}},
      {std::string(fn::ProvidingSuggestions), "Offer suggestions related to the user's needs.",
       {{"suggestions", ParamType::Text, true, "The suggestions."}}},
      {std::string(fn::ContactSolutionStrategist),
       "Convey a confirmed information retrieval and generation requirement to the Solution "
       "Strategist.",
       {{"requirement", ParamType::Text, true, "The detailed user requirement."}}},
      {std::string(fn::TrackingUserPreferences),
       "Record a concise description of the user's basic information or interest preference.",
       {{"text", ParamType::Text, true, "Short description of the user."},
        {"attitude", ParamType::Attitude, true,
         "Positive, Neutral or Negative for preferences; None for basic information."},
        {"reply", ParamType::Text, false, "Optional reply shown to the user."}}},
      {std::string(fn::AcceptingFeedbackAndReflection),
       "Accept the user's feedback on a previous answer and reflect on it.",
       {{"feedback", ParamType::Text, true, "The user's feedback."},
        {"reply", ParamType::Text, false, "Optional reply shown to the user."}}},
  };
}

std::vector<FunctionSpec> strategist_functions() {
  return {
      {std::string(fn::SearchInformation),
       "Assign a retrieval task to the Information Manager.",
       {{"query", ParamType::Text, true, "A precise search query."}}},
      {std::string(fn::GenerateContent), "Assign a writing task to the Content Creator.",
       {{"requirement", ParamType::Text, true, "A detailed creation requirement."}}},
      {std::string(fn::FinalizeArticle),
       "Merge the generated content and deliver it to the Account Manager.",
       {}},
  };
}

}  // namespace

const std::vector<FunctionSpec>& role_registry(RoleId role) {
  static const std::vector<FunctionSpec> am = account_manager_functions();
  static const std::vector<FunctionSpec> ss = strategist_functions();
  static const std::vector<FunctionSpec> none;
  switch (role) {
    case RoleId::AccountManager: return am;
    case RoleId::SolutionStrategist: return ss;
    default: return none;
  }
}

void validate_registry(const std::vector<FunctionSpec>& functions) {
  std::set<std::string> names;
  for (const auto& f : functions) {
    if (f.name.empty()) throw Error(ErrorCode::RegistryViolation, "function with empty name");
    if (!names.insert(f.name).second) {
      throw Error(ErrorCode::RegistryViolation, "duplicate function '" + f.name + "'");
    }
    std::set<std::string> params;
    for (const auto& p : f.parameters) {
      if (!params.insert(p.name).second) {
        throw Error(ErrorCode::RegistryViolation,
                    "duplicate parameter '" + p.name + "' in '" + f.name + "'");
      }
    }
  }
}

AgentSpec::AgentSpec(RoleId role, std::string prompt)
    : AgentSpec(role, std::move(prompt), role_registry(role)) {}

AgentSpec::AgentSpec(RoleId role, std::string prompt, std::vector<FunctionSpec> functions)
    : role_(role), prompt_(std::move(prompt)), functions_(std::move(functions)) {
  validate_registry(functions_);
  const auto& allowed = role_registry(role);
  for (const auto& f : functions_) {
    bool found = false;
    for (const auto& a : allowed) found = found || a.name == f.name;
    if (!found) {
      throw Error(ErrorCode::RegistryViolation, "function '" + f.name + "' is not in the " +
                                                    std::string(to_string(role)) + " registry");
    }
  }
}

std::string_view to_string(PlanAction a) {
  switch (a) {
    case PlanAction::SearchInformation: return fn::SearchInformation;
    case PlanAction::GenerateContent: return fn::GenerateContent;
    case PlanAction::FinalizeArticle: return fn::FinalizeArticle;
  }
  return fn::FinalizeArticle;
}

std::optional<PlanAction> plan_action_from_string(std::string_view s) {
  if (s == fn::SearchInformation) return PlanAction::SearchInformation;
  if (s == fn::GenerateContent) return PlanAction::GenerateContent;
  if (s == fn::FinalizeArticle) return PlanAction::FinalizeArticle;
  return std::nullopt;
}

std::string_view to_string(PlanViolation v) {
  switch (v) {
    case PlanViolation::Empty: return "empty-plan";
    case PlanViolation::MissingTerminalFinalize: return "missing-terminal-finalize";
    case PlanViolation::FinalizeNotLast: return "finalize-not-last";
    case PlanViolation::DuplicateFinalize: return "duplicate-finalize";
    case PlanViolation::EmptyPayload: return "empty-payload";
    case PlanViolation::FinalizeWithPayload: return "finalize-with-payload";
    case PlanViolation::NonContiguousIndex: return "non-contiguous-index";
    case PlanViolation::TooLong: return "too-long";
  }
  return "unknown";
}

std::vector<PlanViolation> validate_plan(const Plan& plan) {
  std::vector<PlanViolation> out;
  if (plan.steps.empty()) {
    out.push_back(PlanViolation::Empty);
    return out;
  }
  std::size_t finalizes = 0;
  bool finalize_before_end = false;
  bool empty_payload = false;
  bool finalize_payload = false;
  bool bad_index = false;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    if (s.step_index != i) bad_index = true;
    if (s.action == PlanAction::FinalizeArticle) {
      ++finalizes;
      if (i + 1 != plan.steps.size()) finalize_before_end = true;
      if (!s.payload.empty()) finalize_payload = true;
    } else if (s.payload.find_first_not_of(" \t\r\n") == std::string::npos) {
      empty_payload = true;
    }
  }
  if (plan.steps.back().action != PlanAction::FinalizeArticle) {
    out.push_back(finalizes == 0 ? PlanViolation::MissingTerminalFinalize
                                 : PlanViolation::FinalizeNotLast);
  } else if (finalize_before_end) {
    out.push_back(PlanViolation::FinalizeNotLast);
  }
  if (finalizes > 1) out.push_back(PlanViolation::DuplicateFinalize);
  if (empty_payload) out.push_back(PlanViolation::EmptyPayload);
  if (finalize_payload) out.push_back(PlanViolation::FinalizeWithPayload);
  if (bad_index) out.push_back(PlanViolation::NonContiguousIndex);
  return out;
}

json to_json(const Plan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"action", to_string(s.action)},
                     {"payload", s.payload},
                     {"step_index", s.step_index}});
  }
  return {{"steps", steps}, {"rationale", plan.rationale}};
}

Plan plan_from_json(const json& j) {
  Plan p;
  p.rationale = j.value("rationale", "");
  for (const auto& s : j.at("steps")) {
    auto action = plan_action_from_string(s.at("action").get<std::string>());
    if (!action) throw Error(ErrorCode::Parse, "unknown plan action");
    p.steps.push_back({*action, s.value("payload", ""), s.value("step_index", std::size_t{0})});
  }
  return p;
}

}  // namespace acn
