#include "acn/service/config.h"

#include <cctype>
#include <cstdlib>
#include <sstream>

#include "acn/core/error.h"
#include "acn/core/io.h"
#include "acn/core/text.h"

namespace acn::service {

namespace {

const char* const kKeys[] = {
    "listen.host",         "listen.port",          "data.dir",
    "prompts.dir",         "provider.chat",        "provider.vlm",
    "provider.embed",      "provider.search",      "embed.dim",
    "profile.gamma",       "profile.alpha",        "retrieval.lambda",
    "retrieval.alpha",     "retrieval.top_pages",  "retrieval.context_window_chars",
    "agents.max_steps",    "agents.context_budget_chars", "clock",
};

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::InvalidArgument, key + ": '" + v + "' is not a number");
}

std::size_t to_size(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, key + ": '" + v + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(std::stoull(v));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

// Makes the path of a scripted provider spec relative to `base`.
std::string resolve_provider(const std::filesystem::path& base, const std::string& spec) {
  const std::string prefix = "scripted:";
  if (spec.rfind(prefix, 0) != 0 || spec.size() == prefix.size()) return spec;
  return prefix + resolve(base, spec.substr(prefix.size())).string();
}

void set_resolved(ServiceConfig& cfg, const std::string& key, const std::string& value,
                  const std::filesystem::path& base) {
  if (key == "data.dir" || key == "prompts.dir") {
    cfg.set(key, resolve(base, value).string());
  } else if (key.rfind("provider.", 0) == 0) {
    cfg.set(key, resolve_provider(base, value));
  } else {
    cfg.set(key, value);
  }
}

}  // namespace

void ServiceConfig::set(const std::string& key, const std::string& value) {
  if (key == "listen.host") {
    host = value;
  } else if (key == "listen.port") {
    const std::size_t p = to_size(key, value);
    if (p > 65535) throw Error(ErrorCode::InvalidArgument, "listen.port out of range");
    port = static_cast<int>(p);
  } else if (key == "data.dir") {
    data_dir = value;
  } else if (key == "prompts.dir") {
    prompts_dir = value;
  } else if (key == "provider.chat") {
    chat_provider = value;
  } else if (key == "provider.vlm") {
    vlm_provider = value;
  } else if (key == "provider.embed") {
    embed_provider = value;
  } else if (key == "provider.search") {
    search_provider = value;
  } else if (key == "embed.dim") {
    embed_dim = to_size(key, value);
  } else if (key == "profile.gamma") {
    similarity.gamma = to_double(key, value);
  } else if (key == "profile.alpha") {
    similarity.alpha = to_double(key, value);
  } else if (key == "retrieval.lambda") {
    filter.lambda = to_double(key, value);
  } else if (key == "retrieval.alpha") {
    filter.alpha = to_double(key, value);
  } else if (key == "retrieval.top_pages") {
    filter.top_pages = to_size(key, value);
  } else if (key == "retrieval.context_window_chars") {
    filter.context_window_chars = to_size(key, value);
  } else if (key == "agents.max_steps") {
    agents.max_steps = to_size(key, value);
  } else if (key == "agents.context_budget_chars") {
    agents.context_budget_chars = to_size(key, value);
  } else if (key == "clock") {
    if (value != "system" && value.rfind("fixed:", 0) != 0) {
      throw Error(ErrorCode::InvalidArgument, "clock must be 'system' or 'fixed:<timestamp>'");
    }
    clock = value;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
  }
}

void ServiceConfig::validate() const {
  similarity.validate();
  filter.validate();
  agents.validate();
  if (embed_dim == 0) throw Error(ErrorCode::InvalidArgument, "embed.dim must be positive");
  if (chat_provider.empty()) throw Error(ErrorCode::InvalidArgument, "provider.chat is required");
  if (vlm_provider.empty()) throw Error(ErrorCode::InvalidArgument, "provider.vlm is required");
  if (search_provider.empty()) throw Error(ErrorCode::InvalidArgument, "provider.search is required");
  if (data_dir.empty()) throw Error(ErrorCode::InvalidArgument, "data.dir is required");
}

std::map<std::string, std::string> ServiceConfig::to_map() const {
  auto num = [](double d) {
    std::ostringstream ss;
    ss << d;
    return ss.str();
  };
  return {{"listen.host", host},
          {"listen.port", std::to_string(port)},
          {"data.dir", data_dir.string()},
          {"prompts.dir", prompts_dir.string()},
          {"provider.chat", chat_provider},
          {"provider.vlm", vlm_provider},
          {"provider.embed", embed_provider},
          {"provider.search", search_provider},
          {"embed.dim", std::to_string(embed_dim)},
          {"profile.gamma", num(similarity.gamma)},
          {"profile.alpha", num(similarity.alpha)},
          {"retrieval.lambda", num(filter.lambda)},
          {"retrieval.alpha", num(filter.alpha)},
          {"retrieval.top_pages", std::to_string(filter.top_pages)},
          {"retrieval.context_window_chars", std::to_string(filter.context_window_chars)},
          {"agents.max_steps", std::to_string(agents.max_steps)},
          {"agents.context_budget_chars", std::to_string(agents.context_budget_chars)},
          {"clock", clock}};
}

std::string env_name(const std::string& key) {
  std::string out(kEnvPrefix);
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

ServiceConfig parse_config(const std::string& content, const std::filesystem::path& base_dir) {
  ServiceConfig cfg;
  std::istringstream in(content);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Parse, "config line " + std::to_string(n) + " has no '='");
    }
    set_resolved(cfg, text::trim(line.substr(0, eq)), text::trim(line.substr(eq + 1)), base_dir);
  }
  return cfg;
}

void apply_env_overrides(ServiceConfig& cfg) {
  for (const char* key : kKeys) {
    if (const char* v = std::getenv(env_name(key).c_str())) {
      set_resolved(cfg, key, v, {});
    }
  }
}

ServiceConfig load_config(const std::filesystem::path& path) {
  const auto base = path.parent_path();
  ServiceConfig cfg = parse_config(io::read_file(path), base);
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace acn::service
