#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "acn/agents/agents.h"
#include "acn/agents/prompts.h"
#include "acn/core/trace.h"
#include "acn/profile/profile.h"
#include "acn/providers/providers.h"
#include "acn/rfo/rfo.h"
#include "acn/service/config.h"

namespace acn::service {

using Clock = std::function<std::string()>;

/// "YYYY-MM-DDTHH:MM:SSZ" from the system clock.
std::string utc_now();
Clock make_clock(const std::string& spec);

providers::ProviderSet make_providers(const ServiceConfig& cfg);

struct TurnRecord {
  std::string user_message;
  std::string outcome;
  std::string reply;
  std::optional<std::string> article;
  std::string trace_id;
  std::string rfo_report_id;
  std::string timestamp;
};

struct Session {
  std::string session_id;
  std::string user_id;
  std::string created_at;
  std::vector<TurnRecord> turns;
};

json to_json(const Session& s);
Session session_from_json(const json& j);

struct MessageResult {
  std::string outcome;
  std::string reply;
  std::optional<std::string> article;
  std::string trace_id;
  std::string rfo_report_id;
  std::vector<std::string> warnings;
};

json to_json(const MessageResult& r);

/// The running search engine: sessions, turns, feedback and every piece of
/// persisted state under one data directory.
///
/// Layout: sessions/<sid>.json, traces/<sid>/<tid>.json,
/// reports/<sid>/<rid>.json, images/<sid>.jsonl, profiles/<uid>.json,
/// prompts/<role file>.txt and prompts/<Role>.history.jsonl.
class Engine {
 public:
  Engine(ServiceConfig cfg, providers::ProviderSet providers, Clock clock);

  const ServiceConfig& config() const { return cfg_; }
  const providers::ProviderSet& providers() const { return env_.providers; }
  agents::PromptRegistry& prompts() { return prompts_; }
  profile::ProfileStore& profiles() { return profiles_; }

  std::string create_session(const std::string& user_id);
  Session session(const std::string& session_id) const;

  /// One conversational turn. A feedback outcome also runs the optimizer
  /// over the previous turn, waiting for the optimization lock.
  MessageResult post_message(const std::string& session_id, const std::string& text);

  /// Runs the optimizer over the session's latest trace; Conflict when
  /// another optimization is in progress.
  std::string post_feedback(const std::string& session_id, const std::string& text);

  profile::UserProfile profile(const std::string& user_id) const;
  json trace_json(const std::string& session_id, const std::string& trace_id) const;
  std::vector<json> rfo_reports(const std::string& session_id) const;
  /// Images seen in the session, first occurrence per URL.
  std::vector<retrieval::ImageRecord> image_archive(const std::string& session_id) const;

  std::filesystem::path trace_path(const std::string& session_id, const std::string& trace_id) const;
  std::filesystem::path report_path(const std::string& session_id, const std::string& report_id) const;

 private:
  std::mutex& session_mutex(const std::string& session_id);
  Session load_session(const std::string& session_id) const;
  void save_session(const Session& s) const;
  std::string run_optimizer(const Session& s, const std::string& target_trace, const std::string& feedback,
                            const std::string& now);

  ServiceConfig cfg_;
  Clock clock_;
  std::filesystem::path dir_;
  agents::PromptRegistry prompts_;
  profile::ProfileStore profiles_;
  agents::AgentEnvironment env_;

  std::mutex create_mu_;
  std::mutex map_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> session_mu_;
  std::mutex rfo_mu_;
  std::atomic<std::size_t> next_session_{0};
  std::atomic<std::size_t> next_trace_{0};
  std::atomic<std::size_t> next_report_{0};
};

}  // namespace acn::service
