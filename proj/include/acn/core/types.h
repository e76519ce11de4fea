#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace acn {

using json = nlohmann::ordered_json;

enum class Attitude { Positive, Neutral, Negative, None };

std::string_view to_string(Attitude a);
Attitude attitude_from_string(std::string_view s);

enum class RoleId { AccountManager, SolutionStrategist, InformationManager, ContentCreator };

inline constexpr RoleId kAllRoles[] = {RoleId::AccountManager, RoleId::SolutionStrategist,
                                       RoleId::InformationManager, RoleId::ContentCreator};

std::string_view to_string(RoleId r);
RoleId role_from_string(std::string_view s);

enum class ParamType { Text, TextList, Attitude };

struct FunctionParam {
  std::string name;
  ParamType type = ParamType::Text;
  bool required = true;
  std::string description;
};

struct FunctionSpec {
  std::string name;
  std::string description;
  std::vector<FunctionParam> parameters;

  const FunctionParam* find_param(std::string_view param) const;
};

namespace fn {
inline constexpr std::string_view NormalReply = "NormalReply";
inline constexpr std::string_view ClarifyingQuestions = "ClarifyingQuestions";
inline constexpr std::string_view ProvidingSuggestions = "ProvidingSuggestions";
inline constexpr std::string_view ContactSolutionStrategist = "ContactSolutionStrategist";
inline constexpr std::string_view TrackingUserPreferences = "TrackingUserPreferences";
inline constexpr std::string_view AcceptingFeedbackAndReflection = "AcceptingFeedbackAndReflection";
inline constexpr std::string_view SearchInformation = "SearchInformation";
inline constexpr std::string_view GenerateContent = "GenerateContent";
inline constexpr std::string_view FinalizeArticle = "FinalizeArticle";
}  // namespace fn

/// Fixed function registry of a role. ContentCreator and InformationManager
/// have none: they are driven by plain completion and the retrieval pipeline.
const std::vector<FunctionSpec>& role_registry(RoleId role);

struct ReviewEntry {
  std::string text;
  std::string source_feedback;
  std::uint64_t trace_node = 0;
  std::string timestamp;
};

/// An agent's adjustable prompt plus its callable functions. Construction
/// rejects any function outside the role's closed registry.
class AgentSpec {
 public:
  AgentSpec(RoleId role, std::string prompt);
  AgentSpec(RoleId role, std::string prompt, std::vector<FunctionSpec> functions);

  RoleId role() const { return role_; }
  const std::string& prompt() const { return prompt_; }
  void set_prompt(std::string prompt) { prompt_ = std::move(prompt); }
  const std::vector<FunctionSpec>& functions() const { return functions_; }
  std::vector<ReviewEntry>& review_list() { return review_list_; }
  const std::vector<ReviewEntry>& review_list() const { return review_list_; }

 private:
  RoleId role_;
  std::string prompt_;
  std::vector<FunctionSpec> functions_;
  std::vector<ReviewEntry> review_list_;
};

/// Checks unique function names and unique parameter names within each spec.
void validate_registry(const std::vector<FunctionSpec>& functions);

enum class PlanAction { SearchInformation, GenerateContent, FinalizeArticle };

std::string_view to_string(PlanAction a);
std::optional<PlanAction> plan_action_from_string(std::string_view s);

struct PlanStep {
  PlanAction action = PlanAction::FinalizeArticle;
  std::string payload;
  std::size_t step_index = 0;

  bool operator==(const PlanStep&) const = default;
};

struct Plan {
  std::vector<PlanStep> steps;
  std::string rationale;
};

enum class PlanViolation {
  Empty,
  MissingTerminalFinalize,
  FinalizeNotLast,
  DuplicateFinalize,
  EmptyPayload,
  FinalizeWithPayload,
  NonContiguousIndex,
  TooLong,
};

std::string_view to_string(PlanViolation v);

/// Empty result means the plan is valid.
std::vector<PlanViolation> validate_plan(const Plan& plan);

json to_json(const Plan& plan);
Plan plan_from_json(const json& j);

}  // namespace acn
