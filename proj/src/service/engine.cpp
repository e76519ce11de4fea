#include "acn/service/engine.h"

#include <algorithm>
#include <ctime>
#include <set>
#include <sstream>

#include "acn/core/error.h"
#include "acn/core/io.h"
#include "acn/core/text.h"
#include "acn/providers/scripted.h"

namespace acn::service {

namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Clock make_clock(const std::string& spec) {
  if (spec == "system") return utc_now;
  if (spec.rfind("fixed:", 0) == 0) {
    std::string ts = spec.substr(6);
    return [ts] { return ts; };
  }
  throw Error(ErrorCode::InvalidArgument, "unknown clock '" + spec + "'");
}

providers::ProviderSet make_providers(const ServiceConfig& cfg) {
  providers::ProviderSet p;
  p.chat = providers::make_chat(cfg.chat_provider);
  p.vlm = providers::make_vlm(cfg.vlm_provider);
  p.embedder = providers::make_embedder(cfg.embed_provider, cfg.embed_dim);
  p.search = providers::make_search(cfg.search_provider);
  return p;
}

namespace {

json turn_to_json(const TurnRecord& t) {
  return {{"user_message", t.user_message},
          {"outcome", t.outcome},
          {"reply", t.reply},
          {"article", t.article ? json(*t.article) : json(nullptr)},
          {"trace_id", t.trace_id},
          {"rfo_report_id", t.rfo_report_id},
          {"timestamp", t.timestamp}};
}

// Parses "<prefix><digits>"; nullopt for anything else, which also keeps
// client-supplied ids from naming paths outside the data directory.
std::optional<std::size_t> parse_id(const std::string& id, char prefix) {
  if (id.size() < 2 || id.size() > 20 || id[0] != prefix) return std::nullopt;
  if (id.find_first_not_of("0123456789", 1) != std::string::npos) return std::nullopt;
  return static_cast<std::size_t>(std::stoull(id.substr(1)));
}

std::size_t next_free(const fs::path& dir, char prefix, bool recursive) {
  std::size_t next = 0;
  if (!fs::exists(dir)) return 0;
  auto visit = [&](const fs::directory_entry& e) {
    if (!e.is_regular_file() || e.path().extension() != ".json") return;
    if (auto k = parse_id(e.path().stem().string(), prefix)) next = std::max(next, *k + 1);
  };
  if (recursive) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) visit(e);
  } else {
    for (const auto& e : fs::directory_iterator(dir)) visit(e);
  }
  return next;
}

json read_json(const fs::path& path) {
  json j = json::parse(io::read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Storage, path.string() + " is corrupt");
  return j;
}

}  // namespace

json to_json(const Session& s) {
  json turns = json::array();
  for (const auto& t : s.turns) turns.push_back(turn_to_json(t));
  return {{"session_id", s.session_id}, {"user_id", s.user_id}, {"created_at", s.created_at}, {"turns", turns}};
}

Session session_from_json(const json& j) {
  Session s;
  s.session_id = j.at("session_id").get<std::string>();
  s.user_id = j.at("user_id").get<std::string>();
  s.created_at = j.at("created_at").get<std::string>();
  for (const auto& t : j.at("turns")) {
    TurnRecord r;
    r.user_message = t.at("user_message").get<std::string>();
    r.outcome = t.at("outcome").get<std::string>();
    r.reply = t.at("reply").get<std::string>();
    if (!t.at("article").is_null()) r.article = t.at("article").get<std::string>();
    r.trace_id = t.at("trace_id").get<std::string>();
    r.rfo_report_id = t.value("rfo_report_id", "");
    r.timestamp = t.value("timestamp", "");
    s.turns.push_back(std::move(r));
  }
  return s;
}

json to_json(const MessageResult& r) {
  json j = {{"outcome", r.outcome}, {"reply", r.reply}, {"trace_id", r.trace_id}};
  if (r.article) j["article"] = *r.article;
  if (!r.rfo_report_id.empty()) j["rfo_report_id"] = r.rfo_report_id;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

Engine::Engine(ServiceConfig cfg, providers::ProviderSet providers, Clock clock)
    : cfg_(std::move(cfg)), clock_(std::move(clock)), dir_(cfg_.data_dir), profiles_(dir_ / "profiles") {
  if (!providers.chat || !providers.vlm || !providers.embedder || !providers.search) {
    throw Error(ErrorCode::InvalidArgument, "engine needs all four providers");
  }
  try {
    for (const char* sub : {"sessions", "traces", "reports", "images", "profiles", "prompts"}) {
      fs::create_directories(dir_ / sub);
    }
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::Storage, std::string("cannot prepare data directory: ") + e.what());
  }
  if (!cfg_.prompts_dir.empty() && fs::is_empty(dir_ / "prompts")) prompts_.load_directory(cfg_.prompts_dir);
  prompts_.attach_storage(dir_ / "prompts", clock_());

  env_.providers = std::move(providers);
  env_.prompts = &prompts_;
  env_.filter = cfg_.filter;
  env_.agents = cfg_.agents;

  next_session_ = next_free(dir_ / "sessions", 's', false);
  next_trace_ = next_free(dir_ / "traces", 't', true);
  next_report_ = next_free(dir_ / "reports", 'r', true);
}

std::mutex& Engine::session_mutex(const std::string& session_id) {
  std::lock_guard lock(map_mu_);
  auto& slot = session_mu_[session_id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

std::string Engine::create_session(const std::string& user_id) {
  profiles_.path_for(user_id);  // validates the id
  std::lock_guard lock(create_mu_);
  Session s;
  s.session_id = "s" + std::to_string(next_session_++);
  s.user_id = user_id;
  s.created_at = clock_();
  save_session(s);
  return s.session_id;
}

Session Engine::load_session(const std::string& session_id) const {
  if (!parse_id(session_id, 's')) throw Error(ErrorCode::NotFound, "unknown session " + session_id);
  const fs::path path = dir_ / "sessions" / (session_id + ".json");
  if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "unknown session " + session_id);
  try {
    return session_from_json(read_json(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Storage, "session " + session_id + " is corrupt: " + e.what());
  }
}

void Engine::save_session(const Session& s) const {
  io::write_atomic(dir_ / "sessions" / (s.session_id + ".json"), to_json(s).dump(2) + "\n");
}

Session Engine::session(const std::string& session_id) const { return load_session(session_id); }

fs::path Engine::trace_path(const std::string& session_id, const std::string& trace_id) const {
  return dir_ / "traces" / session_id / (trace_id + ".json");
}

fs::path Engine::report_path(const std::string& session_id, const std::string& report_id) const {
  return dir_ / "reports" / session_id / (report_id + ".json");
}

MessageResult Engine::post_message(const std::string& session_id, const std::string& text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "message text is empty");
  std::lock_guard lock(session_mutex(session_id));
  Session s = load_session(session_id);

  agents::SessionContext ctx;
  ctx.session_id = s.session_id;
  ctx.user_id = s.user_id;
  ctx.turn_index = s.turns.size();
  for (const auto& t : s.turns) ctx.history.push_back({t.user_message, t.reply});
  if (!s.turns.empty()) ctx.last_trace_id = s.turns.back().trace_id;

  const std::string now = clock_();
  CallTrace trace("t" + std::to_string(next_trace_++), s.session_id);
  auto turn = agents::run_turn(ctx, text, env_, profiles_, cfg_.similarity, now, trace);

  MessageResult result;
  result.outcome = std::string(agents::to_string(turn.outcome.kind));
  result.reply = turn.outcome.text;
  result.trace_id = trace.trace_id();
  if (turn.article) result.article = turn.article->to_markdown();
  if (!turn.outcome.warning.empty()) result.warnings.push_back(turn.outcome.warning);

  io::write_atomic(trace_path(s.session_id, trace.trace_id()), trace.to_json().dump(2) + "\n");
  if (!turn.image_archive.empty()) {
    std::set<std::string> known;
    for (const auto& img : image_archive(s.session_id)) known.insert(img.url);
    for (const auto& img : turn.image_archive) {
      if (!known.insert(img.url).second) continue;
      json row = retrieval::to_json(img);
      row["trace_id"] = trace.trace_id();
      io::append_line(dir_ / "images" / (s.session_id + ".jsonl"), row.dump());
    }
  }

  if (turn.outcome.kind == agents::OutcomeKind::Feedback) {
    std::lock_guard rfo_lock(rfo_mu_);
    try {
      result.rfo_report_id = run_optimizer(s, turn.outcome.feedback->target_trace, turn.outcome.feedback->text, now);
    } catch (const Error& e) {
      result.warnings.push_back(std::string("optimization aborted: ") + e.what());
    }
  }

  s.turns.push_back({text, result.outcome, result.reply, result.article, result.trace_id, result.rfo_report_id, now});
  save_session(s);
  return result;
}

std::string Engine::post_feedback(const std::string& session_id, const std::string& text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "feedback text is empty");
  std::string target;
  Session s;
  {
    std::lock_guard lock(session_mutex(session_id));
    s = load_session(session_id);
    if (s.turns.empty()) throw Error(ErrorCode::Precondition, "session has no answer to give feedback on");
    target = s.turns.back().trace_id;
  }
  std::unique_lock rfo_lock(rfo_mu_, std::try_to_lock);
  if (!rfo_lock.owns_lock()) throw Error(ErrorCode::Conflict, "an optimization run is in progress");
  return run_optimizer(s, target, text, clock_());
}

std::string Engine::run_optimizer(const Session& s, const std::string& target_trace, const std::string& feedback,
                                  const std::string& now) {
  const CallTrace trace = CallTrace::from_json(read_json(trace_path(s.session_id, target_trace)));
  const std::string report_id = "r" + std::to_string(next_report_++);
  rfo::LlmOptimizer optimizer(*env_.providers.chat);
  rfo::LlmPromptUpdater updater(*env_.providers.chat);
  const auto report =
      rfo::run_rfo({feedback, s.session_id, target_trace}, trace, prompts_, optimizer, updater, now, report_id);
  io::write_atomic(report_path(s.session_id, report_id), rfo::to_json(report).dump(2) + "\n");
  return report_id;
}

profile::UserProfile Engine::profile(const std::string& user_id) const {
  const auto path = profiles_.path_for(user_id);
  if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "unknown user " + user_id);
  return profiles_.load(user_id);
}

json Engine::trace_json(const std::string& session_id, const std::string& trace_id) const {
  load_session(session_id);
  if (!parse_id(trace_id, 't')) throw Error(ErrorCode::NotFound, "unknown trace " + trace_id);
  const auto path = trace_path(session_id, trace_id);
  if (!fs::exists(path)) throw Error(ErrorCode::NotFound, "unknown trace " + trace_id);
  return read_json(path);
}

std::vector<json> Engine::rfo_reports(const std::string& session_id) const {
  load_session(session_id);
  std::vector<std::pair<std::size_t, fs::path>> files;
  const fs::path dir = dir_ / "reports" / session_id;
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (auto k = parse_id(e.path().stem().string(), 'r'); k && e.path().extension() == ".json") {
        files.emplace_back(*k, e.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<json> out;
  for (const auto& [k, p] : files) out.push_back(read_json(p));
  return out;
}

std::vector<retrieval::ImageRecord> Engine::image_archive(const std::string& session_id) const {
  load_session(session_id);
  std::vector<retrieval::ImageRecord> out;
  const fs::path path = dir_ / "images" / (session_id + ".jsonl");
  if (!fs::exists(path)) return out;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(retrieval::image_record_from_json(json::parse(line)));
  }
  return out;
}

}  // namespace acn::service
