#include "acn/agents/prompts.h"

#include <algorithm>
#include <mutex>
#include <sstream>

#include "acn/core/error.h"
#include "acn/core/io.h"

namespace acn::agents {

namespace {

constexpr const char* kAccountManager =
    "You are Account Manager in a collaborative agent network aims at providing Personalized "
    "Multimodal Information Retrieval and Generation service. Your task is to interact with users "
    "in a friendly manner, maintain relationships with customers, ensure customer satisfaction, and "
    "understand their needs and expectations through ongoing communication. Furthermore, you are "
    "responsible for coordinating the company's Solution Strategist Agent for solving customers' "
    "personalized multimedia information retrieval and generation request.\n"
    "\n"
    "[User Profile]\n"
    "{USER_PROFILE}\n";

constexpr const char* kSolutionStrategist =
    "You are Solution Strategist in a collaborative agent network aims at providing Personalized "
    "Multimodal Information Retrieval and Generation service. Your task is to develop a logical plan "
    "to solve the tasks described in the [User Requirement] conveyed from the Account Manager agent. "
    "You should outline this plan step by step, using flexible combinations of calling Search "
    "Information and Generate Content. But you must end with the function Finalize Article. Besides, "
    "you should also consider the provided [User Profile] to make your logical plan specialized for "
    "the user.\n"
    "\n"
    "[User Requirement]\n"
    "{USER_REQUIREMENT}\n"
    "\n"
    "[User Profile]\n"
    "{USER_PROFILE}\n";

constexpr const char* kInformationManager =
    "You are Information Manager in a collaborative agent network aims at providing Personalized "
    "Multimodal Information Retrieval and Generation service. Your task is to retrieve pertinent web "
    "content for the given search query and, for every image, read the text surrounding it, infer a "
    "descriptive caption for the image and summarize its content concisely.\n";

constexpr const char* kContentCreator =
    "You are Content Creator Agent in a collaborative agent network aims at providing Personalized "
    "Multimodal Information Retrieval and Generation service. Your task is to utilize your "
    "professional content creation skills, based on the provided [External Knowledge], and [Image "
    "Source] as your reading material to generate a detailed multimodal content in markdown format. "
    "You should strictly follow the [Writing Requirement], and include appropriate images as much as "
    "possible to make the content rich. You also must consider the [User Profile], and makes the "
    "content personalized, aligning with user's information, preferences.\n"
    "\n"
    "[External Knowledge]\n"
    "{EXTERNAL_KNOWLEDGE}\n"
    "\n"
    "[Image Source]\n"
    "{IMAGE_SOURCE}\n"
    "\n"
    "[Writing Requirement]\n"
    "{WRITING_REQUIREMENT}\n"
    "\n"
    "[User Profile]\n"
    "{USER_PROFILE}\n";

json version_to_json(const PromptVersion& v) {
  return {{"version", v.version}, {"prompt", v.prompt}, {"reason", v.reason}, {"timestamp", v.timestamp}};
}

}  // namespace

std::string default_prompt(RoleId role) {
  switch (role) {
    case RoleId::AccountManager: return kAccountManager;
    case RoleId::SolutionStrategist: return kSolutionStrategist;
    case RoleId::InformationManager: return kInformationManager;
    case RoleId::ContentCreator: return kContentCreator;
  }
  return {};
}

std::string prompt_file_name(RoleId role) {
  switch (role) {
    case RoleId::AccountManager: return "account_manager.txt";
    case RoleId::SolutionStrategist: return "solution_strategist.txt";
    case RoleId::InformationManager: return "information_manager.txt";
    case RoleId::ContentCreator: return "content_creator.txt";
  }
  return {};
}

std::vector<std::string> slots_in(const std::string& tmpl) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = tmpl.find('{', i)) != std::string::npos) {
    const auto close = tmpl.find('}', i + 1);
    if (close == std::string::npos) break;
    const std::string name = tmpl.substr(i + 1, close - i - 1);
    const bool is_slot = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return (c >= 'A' && c <= 'Z') || c == '_';
    });
    if (is_slot && std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    i = is_slot ? close + 1 : i + 1;
  }
  return out;
}

PromptRegistry::PromptRegistry() {
  for (RoleId r : kAllRoles) prompts_[r] = default_prompt(r);
}

void PromptRegistry::load_directory(const std::filesystem::path& dir) {
  std::unique_lock lock(mu_);
  for (RoleId r : kAllRoles) {
    const auto path = dir / prompt_file_name(r);
    if (std::filesystem::exists(path)) prompts_[r] = io::read_file(path);
  }
}

void PromptRegistry::attach_storage(const std::filesystem::path& dir, const std::string& timestamp) {
  std::unique_lock lock(mu_);
  std::filesystem::create_directories(dir);
  dir_ = dir;
  for (RoleId r : kAllRoles) {
    const auto current = dir / prompt_file_name(r);
    const auto hist = dir / (std::string(to_string(r)) + ".history.jsonl");
    if (std::filesystem::exists(current)) prompts_[r] = io::read_file(current);
    auto& versions = history_[r];
    versions.clear();
    if (std::filesystem::exists(hist)) {
      std::istringstream in(io::read_file(hist));
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        versions.push_back({j.at("version").get<std::size_t>(), j.at("prompt").get<std::string>(),
                            j.value("reason", ""), j.value("timestamp", "")});
      }
    }
    if (!std::filesystem::exists(current)) io::write_atomic(current, prompts_[r]);
    if (versions.empty()) {
      versions.push_back({0, prompts_[r], "initial", timestamp});
      io::append_line(hist, version_to_json(versions.back()).dump());
    }
  }
}

std::string PromptRegistry::prompt(RoleId role) const {
  std::shared_lock lock(mu_);
  return prompts_.at(role);
}

AgentSpec PromptRegistry::spec(RoleId role) const { return AgentSpec(role, prompt(role)); }

std::map<RoleId, std::string> PromptRegistry::snapshot() const {
  std::shared_lock lock(mu_);
  return prompts_;
}

void PromptRegistry::apply(const std::map<RoleId, std::string>& prompts, const std::string& reason,
                           const std::string& timestamp) {
  std::unique_lock lock(mu_);
  std::map<RoleId, PromptVersion> staged;
  for (const auto& [role, text] : prompts) {
    if (text.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt for " + std::string(to_string(role)));
    const auto& versions = history_[role];
    staged[role] = {versions.empty() ? 1 : versions.back().version + 1, text, reason, timestamp};
  }
  if (!dir_.empty()) {
    for (const auto& [role, v] : staged) {
      io::write_atomic(dir_ / prompt_file_name(role), v.prompt);
      io::append_line(dir_ / (std::string(to_string(role)) + ".history.jsonl"), version_to_json(v).dump());
    }
  }
  for (auto& [role, v] : staged) {
    prompts_[role] = v.prompt;
    history_[role].push_back(std::move(v));
  }
}

std::vector<PromptVersion> PromptRegistry::history(RoleId role) const {
  std::shared_lock lock(mu_);
  auto it = history_.find(role);
  return it == history_.end() ? std::vector<PromptVersion>{} : it->second;
}

}  // namespace acn::agents
