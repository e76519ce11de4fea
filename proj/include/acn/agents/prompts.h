#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

#include "acn/core/types.h"

namespace acn::agents {

namespace slot {
inline constexpr std::string_view UserRequirement = "USER_REQUIREMENT";
inline constexpr std::string_view UserProfile = "USER_PROFILE";
inline constexpr std::string_view ExternalKnowledge = "EXTERNAL_KNOWLEDGE";
inline constexpr std::string_view ImageSource = "IMAGE_SOURCE";
inline constexpr std::string_view WritingRequirement = "WRITING_REQUIREMENT";
}  // namespace slot

std::string default_prompt(RoleId role);

/// File name of a role's template inside a prompts directory.
std::string prompt_file_name(RoleId role);

/// Slot names (`{NAME}`) appearing in a template, in order of first use.
std::vector<std::string> slots_in(const std::string& tmpl);

struct PromptVersion {
  std::size_t version = 0;
  std::string prompt;
  std::string reason;
  std::string timestamp;
};

/// The live, adjustable prompt of every agent. Reads take a shared lock; a
/// batch of updates is swapped in under one exclusive lock. When a storage
/// directory is attached, each change rewrites `<role>.txt` and appends the
/// new version to `<role>.history.jsonl`.
class PromptRegistry {
 public:
  PromptRegistry();

  /// Loads `<role>.txt` templates from `dir` where present.
  void load_directory(const std::filesystem::path& dir);

  /// Persists prompts under `dir`, loading any state already there.
  void attach_storage(const std::filesystem::path& dir, const std::string& timestamp);

  std::string prompt(RoleId role) const;
  AgentSpec spec(RoleId role) const;
  std::map<RoleId, std::string> snapshot() const;

  /// Applies all prompts at once; persistence happens before the swap so a
  /// storage error leaves the live prompts untouched.
  void apply(const std::map<RoleId, std::string>& prompts, const std::string& reason,
             const std::string& timestamp);

  std::vector<PromptVersion> history(RoleId role) const;

 private:
  mutable std::shared_mutex mu_;
  std::map<RoleId, std::string> prompts_;
  std::filesystem::path dir_;
  std::map<RoleId, std::vector<PromptVersion>> history_;
};

}  // namespace acn::agents
