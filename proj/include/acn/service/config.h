#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "acn/agents/agents.h"
#include "acn/profile/profile.h"
#include "acn/retrieval/retrieval.h"

namespace acn::service {

inline constexpr std::string_view kEnvPrefix = "ACN_";

/// Settings for a running service. The file format is one `key = value` per
/// line; `#` starts a comment. Any key can be overridden by an environment
/// variable named ACN_ followed by the key in upper case with dots replaced
/// by underscores (profile.gamma -> ACN_PROFILE_GAMMA).
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "data";
  /// Optional directory of prompt files used to seed a fresh data directory.
  std::filesystem::path prompts_dir;

  std::string chat_provider;
  std::string vlm_provider;
  std::string embed_provider = "scripted:";
  std::string search_provider;
  std::size_t embed_dim = 64;

  profile::SimilarityConfig similarity;
  retrieval::FilterConfig filter;
  agents::AgentsConfig agents;

  /// "system" or "fixed:<timestamp>".
  std::string clock = "system";

  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::map<std::string, std::string> to_map() const;
};

/// Reads `path`, then applies environment overrides. Relative paths inside
/// the file (data dir, prompts dir, scripted provider paths) resolve against
/// the file's directory.
ServiceConfig load_config(const std::filesystem::path& path);

ServiceConfig parse_config(const std::string& content, const std::filesystem::path& base_dir);

/// Paths given through the environment resolve against the working directory.
void apply_env_overrides(ServiceConfig& cfg);

std::string env_name(const std::string& key);

}  // namespace acn::service
