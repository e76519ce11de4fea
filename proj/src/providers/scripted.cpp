#include "acn/providers/scripted.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "acn/core/error.h"
#include "acn/core/text.h"
#include "acn/providers/http.h"

namespace acn::providers {

namespace {

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ProviderUnavailable, "cannot open fixture " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Parse, "fixture " + path.string() + " is not valid JSON");
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",    "an",   "and",  "are",  "as",   "at",   "be",   "by",    "for",  "from", "has",
      "have", "i",    "in",   "is",   "it",   "its",  "me",   "my",    "of",   "on",   "or",
      "that", "the",  "this", "to",   "was",  "were", "what", "which", "with", "you",  "your",
      "can",  "will", "do",   "does", "how",  "should", "give", "want", "we",   "our",  "their"};
  return words;
}

}  // namespace

ScriptedChat::ScriptedChat(json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw Error(ErrorCode::Parse, "chat script must be an object");
  if (!script_.contains("rules")) script_["rules"] = json::array();
  if (!script_.contains("defaults")) script_["defaults"] = json::object();
}

std::shared_ptr<ScriptedChat> ScriptedChat::from_file(const std::filesystem::path& path) {
  return std::make_shared<ScriptedChat>(load_json_file(path));
}

ChatResponse ScriptedChat::do_complete(const ChatRequest& req) {
  std::string last = text::normalize(req.messages.back().text);
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    if (it->speaker == Speaker::User) {
      last = text::normalize(it->text);
      break;
    }
  }
  std::size_t assistant_turns = 0;
  for (const auto& m : req.messages) assistant_turns += m.speaker == Speaker::Assistant;

  auto pick = [&](const json& rule) -> const json& {
    if (rule.contains("responses")) {
      const auto& seq = rule.at("responses");
      if (!seq.is_array() || seq.empty()) throw Error(ErrorCode::Parse, "empty responses list");
      return seq.at(std::min(assistant_turns, seq.size() - 1));
    }
    return rule.contains("response") ? rule.at("response") : rule;
  };
  auto answer = [&](const json& r) {
    if (r.contains("error")) {
      throw Error(ErrorCode::ProviderUnavailable, "scripted failure: " + r.at("error").dump());
    }
    return chat_response_from_json(r);
  };

  for (const auto& rule : script_.at("rules")) {
    if (rule.contains("role") && rule.at("role").get<std::string>() != req.role) continue;
    if (rule.contains("match") && text::normalize(rule.at("match").get<std::string>()) != last) continue;
    if (rule.contains("contains") &&
        !text::contains(last, text::normalize(rule.at("contains").get<std::string>()))) {
      continue;
    }
    if (rule.contains("system_contains") &&
        !text::contains(req.system_prompt, rule.at("system_contains").get<std::string>())) {
      continue;
    }
    return answer(pick(rule));
  }
  const auto& defaults = script_.at("defaults");
  if (defaults.contains(req.role)) return answer(pick(defaults.at(req.role)));
  throw Error(ErrorCode::ProviderUnavailable, "no scripted response for role '" + req.role + "'");
}

ScriptedEmbedder::ScriptedEmbedder(std::size_t dim, std::map<std::string, EmbeddingPair> overrides)
    : dim_(dim), overrides_(std::move(overrides)) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  for (const auto& [t, p] : overrides_) {
    if (p.dense.size() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "override for '" + t + "' has wrong dimension");
    }
  }
}

std::shared_ptr<ScriptedEmbedder> ScriptedEmbedder::from_file(const std::filesystem::path& path) {
  json j = load_json_file(path);
  const std::size_t dim = j.value("dim", std::size_t{64});
  std::map<std::string, EmbeddingPair> overrides;
  if (j.contains("overrides")) {
    for (const auto& [t, v] : j.at("overrides").items()) {
      EmbeddingPair p;
      p.dense = v.at("dense").get<std::vector<double>>();
      p.lexical = v.value("lexical", std::map<std::string, double>{});
      overrides.emplace(t, std::move(p));
    }
  }
  return std::make_shared<ScriptedEmbedder>(dim, std::move(overrides));
}

EmbeddingPair ScriptedEmbedder::do_embed(const std::string& t) {
  if (auto it = overrides_.find(t); it != overrides_.end()) return it->second;
  EmbeddingPair p;
  p.dense.assign(dim_, 0.0);
  std::vector<std::string> tokens = text::tokenize(t);
  std::vector<std::string> content;
  for (auto& tok : tokens) {
    if (!stopwords().count(tok)) content.push_back(tok);
  }
  if (!content.empty()) tokens = std::move(content);
  if (tokens.empty()) tokens.push_back(text::trim(t));
  for (const auto& tok : tokens) {
    const std::uint64_t h = text::fnv1a(tok);
    const double sign = (h >> 63) ? -1.0 : 1.0;
    p.dense[h % dim_] += sign;
    p.lexical[tok] += 1.0;
  }
  if (std::all_of(p.dense.begin(), p.dense.end(), [](double x) { return x == 0.0; })) {
    p.dense[text::fnv1a(t) % dim_] = 1.0;
  }
  return p;
}

ScriptedVlm::ScriptedVlm(json fixtures) {
  entries_ = fixtures.is_object() && fixtures.contains("images") ? fixtures.at("images") : fixtures;
  if (!entries_.is_array()) throw Error(ErrorCode::Parse, "VLM fixtures must be a list");
}

std::shared_ptr<ScriptedVlm> ScriptedVlm::from_file(const std::filesystem::path& path) {
  return std::make_shared<ScriptedVlm>(load_json_file(path));
}

Caption ScriptedVlm::do_caption(const std::string& context_text, const std::string& image_url) {
  for (const auto& e : entries_) {
    if (e.at("url").get<std::string>() != image_url) continue;
    if (e.contains("context_contains") &&
        !text::contains(context_text, e.at("context_contains").get<std::string>())) {
      continue;
    }
    return {e.at("caption").get<std::string>(), e.at("summary").get<std::string>()};
  }
  throw Error(ErrorCode::ProviderUnavailable, "no caption fixture for " + image_url);
}

FixtureSearch::FixtureSearch(std::filesystem::path corpus_dir) : dir_(std::move(corpus_dir)) {
  json index = load_json_file(dir_ / "index.json");
  for (const auto& p : index.at("pages")) {
    Page page;
    page.url = p.at("url").get<std::string>();
    page.title = p.value("title", "");
    page.file = dir_ / p.at("file").get<std::string>();
    std::set<std::string> terms;
    for (auto& t : text::tokenize(page.title)) terms.insert(t);
    for (const auto& k : p.value("keywords", std::vector<std::string>{})) {
      for (auto& t : text::tokenize(k)) terms.insert(t);
    }
    page.terms.assign(terms.begin(), terms.end());
    pages_.push_back(std::move(page));
  }
}

std::vector<SearchHit> FixtureSearch::do_search(const std::string& query, std::size_t top_k) {
  std::set<std::string> q;
  for (auto& t : text::tokenize(query)) {
    if (!stopwords().count(t)) q.insert(t);
  }
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, page index)
  for (std::size_t i = 0; i < pages_.size(); ++i) {
    std::size_t score = 0;
    for (const auto& t : q) score += std::binary_search(pages_[i].terms.begin(), pages_[i].terms.end(), t);
    if (score > 0) scored.emplace_back(score, i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<SearchHit> hits;
  for (const auto& [score, i] : scored) {
    if (hits.size() == top_k) break;
    SearchHit h;
    h.url = pages_[i].url;
    h.title = pages_[i].title;
    if (std::filesystem::exists(pages_[i].file)) {
      h.raw_content = read_file(pages_[i].file);
    } else {
      h.status = 404;
    }
    hits.push_back(std::move(h));
  }
  return hits;
}

namespace {

std::pair<std::string, std::string> split_spec(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad provider spec '" + spec + "'");
  // A bare URL ("http://host/path") is shorthand for "http:http://host/path".
  if (spec.compare(colon + 1, 2, "//") == 0) return {"http", spec};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

}  // namespace

std::shared_ptr<ChatProvider> make_chat(const std::string& spec) {
  auto [kind, rest] = split_spec(spec);
  if (kind == "scripted") return ScriptedChat::from_file(rest);
  if (kind == "http") return std::make_shared<HttpChat>(HttpEndpoint::parse(rest));
  throw Error(ErrorCode::InvalidArgument, "unknown chat provider kind '" + kind + "'");
}

std::shared_ptr<VisionProvider> make_vlm(const std::string& spec) {
  auto [kind, rest] = split_spec(spec);
  if (kind == "scripted") return ScriptedVlm::from_file(rest);
  if (kind == "http") return std::make_shared<HttpVlm>(HttpEndpoint::parse(rest));
  throw Error(ErrorCode::InvalidArgument, "unknown vlm provider kind '" + kind + "'");
}

std::shared_ptr<Embedder> make_embedder(const std::string& spec, std::size_t dim) {
  auto [kind, rest] = split_spec(spec);
  if (kind == "scripted") {
    if (rest.empty()) return std::make_shared<ScriptedEmbedder>(dim);
    return ScriptedEmbedder::from_file(rest);
  }
  if (kind == "http") return std::make_shared<HttpEmbedder>(HttpEndpoint::parse(rest), dim);
  throw Error(ErrorCode::InvalidArgument, "unknown embed provider kind '" + kind + "'");
}

std::shared_ptr<SearchProvider> make_search(const std::string& spec) {
  auto [kind, rest] = split_spec(spec);
  if (kind == "scripted") return std::make_shared<FixtureSearch>(rest);
  if (kind == "http") return std::make_shared<HttpSearch>(HttpEndpoint::parse(rest));
  throw Error(ErrorCode::InvalidArgument, "unknown search provider kind '" + kind + "'");
}

}  // namespace acn::providers
