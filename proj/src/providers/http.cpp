#include "acn/providers/http.h"

#include <httplib.h>

#include "acn/core/error.h"

namespace acn::providers {

HttpEndpoint HttpEndpoint::parse(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "endpoint needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

namespace {

json post_json(const HttpEndpoint& ep, const json& body) {
  httplib::Client cli(ep.base);
  cli.set_connection_timeout(5);
  cli.set_read_timeout(120);
  auto res = cli.Post(ep.path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::ProviderUnavailable,
                ep.base + ep.path + ": " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::ProviderUnavailable,
                ep.base + ep.path + " returned HTTP " + std::to_string(res->status));
  }
  json j = json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::MalformedProviderOutput, "provider returned invalid JSON");
  return j;
}

}  // namespace

ChatResponse HttpChat::do_complete(const ChatRequest& req) {
  return chat_response_from_json(post_json(ep_, to_json(req)));
}

EmbeddingPair HttpEmbedder::do_embed(const std::string& t) {
  json j = post_json(ep_, {{"text", t}});
  try {
    EmbeddingPair p;
    p.dense = j.at("dense").get<std::vector<double>>();
    p.lexical = j.value("lexical", std::map<std::string, double>{});
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedProviderOutput, e.what());
  }
}

Caption HttpVlm::do_caption(const std::string& context_text, const std::string& image_url) {
  json j = post_json(ep_, {{"context", context_text}, {"url", image_url}});
  try {
    return {j.at("caption").get<std::string>(), j.at("summary").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedProviderOutput, e.what());
  }
}

std::vector<SearchHit> HttpSearch::do_search(const std::string& query, std::size_t top_k) {
  json j = post_json(ep_, {{"query", query}, {"top_k", top_k}});
  std::vector<SearchHit> hits;
  try {
    for (const auto& h : j.at("hits")) {
      SearchHit hit;
      hit.url = h.at("url").get<std::string>();
      hit.title = h.value("title", "");
      hit.raw_content = h.value("raw_content", "");
      hit.status = h.value("status", 200);
      hits.push_back(std::move(hit));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedProviderOutput, e.what());
  }
  return hits;
}

}  // namespace acn::providers
