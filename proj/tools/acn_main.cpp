// acn: run the search engine service or the offline scripted demo.
#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

#include "acn/core/error.h"
#include "acn/core/io.h"
#include "acn/evalkit/evalkit.h"
#include "acn/service/config.h"
#include "acn/service/engine.h"
#include "acn/service/http_server.h"

namespace fs = std::filesystem;
using namespace acn;

namespace {

service::HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(const std::string& config_path, int port_override) {
  auto cfg = service::load_config(config_path);
  if (port_override >= 0) cfg.port = port_override;
  auto providers = service::make_providers(cfg);
  service::Engine engine(cfg, providers, service::make_clock(cfg.clock));
  service::HttpService http(engine);
  const int port = http.bind(cfg.host, cfg.port);
  std::cout << "listening on " << cfg.host << ":" << port << std::endl;
  g_service = &http;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  http.serve();
  g_service = nullptr;
  return 0;
}

// Copies the persisted state of the demo session into `out` under stable
// names, so runs can be compared file by file.
void export_demo(service::Engine& engine, const std::string& sid, const fs::path& out) {
  fs::create_directories(out);
  const auto s = engine.session(sid);
  io::write_atomic(out / "session.json", service::to_json(s).dump(2) + "\n");
  for (std::size_t k = 0; k < s.turns.size(); ++k) {
    const auto& t = s.turns[k];
    const std::string stem = "turn-" + std::to_string(k + 1);
    io::write_atomic(out / (stem + ".trace.json"), engine.trace_json(sid, t.trace_id).dump(2) + "\n");
    if (t.article) io::write_atomic(out / (stem + ".article.md"), *t.article + "\n");
  }
  for (const auto& r : engine.rfo_reports(sid)) {
    io::write_atomic(out / (r.at("report_id").get<std::string>() + ".rfo_report.json"), r.dump(2) + "\n");
  }
  std::string images;
  for (const auto& img : engine.image_archive(sid)) images += retrieval::to_json(img).dump() + "\n";
  io::write_atomic(out / "images.jsonl", images);
  io::write_atomic(out / "profile.json", profile::to_json(engine.profiles().load(s.user_id)).dump(2) + "\n");
  for (RoleId r : kAllRoles) {
    io::write_atomic(out / "prompts" / agents::prompt_file_name(r), engine.prompts().prompt(r));
  }
}

int run_demo(const fs::path& fixtures, fs::path data, const fs::path& out, const std::string& turns,
             const std::string& session_file) {
  auto cfg = service::load_config(fixtures / "demo.conf");
  if (data.empty()) data = out / "data";
  cfg.data_dir = data;
  const json script = json::parse(io::read_file(session_file.empty() ? fixtures / "session.json" : fs::path(session_file)));
  const auto messages = script.at("messages").get<std::vector<std::string>>();
  const std::string user = script.at("user_id").get<std::string>();

  std::size_t first = 1;
  std::size_t last = messages.size();
  if (!turns.empty()) std::tie(first, last) = evalkit::parse_turn_range(turns);
  if (last > messages.size()) throw Error(ErrorCode::InvalidArgument, "the script has only " +
                                                                          std::to_string(messages.size()) + " turns");

  auto providers = service::make_providers(cfg);
  service::Engine engine(cfg, providers, service::make_clock(cfg.clock));
  const std::string sid = "s0";
  if (!fs::exists(data / "sessions" / (sid + ".json"))) engine.create_session(user);
  const std::size_t done = engine.session(sid).turns.size();
  if (done != first - 1) {
    throw Error(ErrorCode::Precondition, "data directory holds " + std::to_string(done) +
                                             " turns; cannot start at turn " + std::to_string(first));
  }
  for (std::size_t k = first; k <= last; ++k) {
    const auto r = engine.post_message(sid, messages[k - 1]);
    std::cout << "[turn " << k << "] " << r.outcome << " (" << r.trace_id << ")";
    if (!r.rfo_report_id.empty()) std::cout << " rfo=" << r.rfo_report_id;
    std::cout << "\n";
    for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
  }
  if (engine.providers().any_live()) throw Error(ErrorCode::Precondition, "demo must not use live providers");
  export_demo(engine, sid, out);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent collaboration network: personalized multimodal search service"};
  app.require_subcommand(1);

  std::string config;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", config, "key=value config file")->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port, "Override listen.port (0 picks a free port)");

  std::string fixtures;
  std::string data;
  std::string out = "demo-out";
  std::string turns;
  std::string session_file;
  auto* demo = app.add_subcommand("demo", "Run the scripted session offline");
  demo->add_option("--scripted", fixtures, "Fixture directory holding demo.conf and session.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  demo->add_option("--data", data, "Data directory (default <out>/data); reuse it to continue a run");
  demo->add_option("--out", out, "Output directory");
  demo->add_option("--turns", turns, "Turn range A..B to run (1-based)");
  demo->add_option("--session", session_file, "Session script (default <fixtures>/session.json)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*serve) return run_serve(config, port);
    if (*demo) return run_demo(fixtures, data, out, turns, session_file);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
