#include "acn/providers/providers.h"

#include <cmath>
#include <set>

#include "acn/core/error.h"
#include "acn/core/text.h"

namespace acn::providers {

std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::User: return "user";
    case Speaker::Assistant: return "assistant";
    case Speaker::FunctionResult: return "function-result";
  }
  return "user";
}

const std::string& FunctionCall::arg(const std::string& key) const {
  auto it = arguments.find(key);
  if (it == arguments.end()) {
    throw Error(ErrorCode::MalformedProviderOutput, "missing argument '" + key + "' in " + name);
  }
  return it->second;
}

std::string FunctionCall::arg_or(const std::string& key, std::string fallback) const {
  auto it = arguments.find(key);
  return it == arguments.end() ? fallback : it->second;
}

ChatResponse ChatResponse::text(std::string t) {
  ChatResponse r;
  r.assistant_text = std::move(t);
  return r;
}

ChatResponse ChatResponse::call(std::string name, std::map<std::string, std::string> args) {
  ChatResponse r;
  r.function_call = FunctionCall{std::move(name), std::move(args)};
  return r;
}

json to_json(const ChatRequest& r) {
  json msgs = json::array();
  for (const auto& m : r.messages) msgs.push_back({{"speaker", to_string(m.speaker)}, {"text", m.text}});
  json fns = json::array();
  for (const auto& f : r.available_functions) {
    json params = json::array();
    for (const auto& p : f.parameters) {
      std::string_view type = p.type == ParamType::Text       ? "text"
                              : p.type == ParamType::TextList ? "text-list"
                                                              : "attitude";
      params.push_back({{"name", p.name}, {"type", type}, {"required", p.required},
                        {"description", p.description}});
    }
    fns.push_back({{"name", f.name}, {"description", f.description}, {"parameters", params}});
  }
  return {{"role", r.role}, {"system_prompt", r.system_prompt}, {"messages", msgs}, {"functions", fns}};
}

json to_json(const ChatResponse& r) {
  if (r.function_call) {
    json args = json::object();
    for (const auto& [k, v] : r.function_call->arguments) args[k] = v;
    return {{"function_call", {{"name", r.function_call->name}, {"arguments", args}}}};
  }
  return {{"text", r.assistant_text.value_or("")}};
}

ChatResponse chat_response_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedProviderOutput, "response is not an object");
  if (j.contains("function_call")) {
    const auto& fc = j.at("function_call");
    if (!fc.is_object() || !fc.contains("name") || !fc.at("name").is_string()) {
      throw Error(ErrorCode::MalformedProviderOutput, "function_call without a name");
    }
    std::map<std::string, std::string> args;
    if (fc.contains("arguments")) {
      const auto& a = fc.at("arguments");
      if (!a.is_object()) throw Error(ErrorCode::MalformedProviderOutput, "unparseable arguments");
      for (const auto& [k, v] : a.items()) args[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return ChatResponse::call(fc.at("name").get<std::string>(), std::move(args));
  }
  if (j.contains("text") && j.at("text").is_string()) return ChatResponse::text(j.at("text").get<std::string>());
  throw Error(ErrorCode::MalformedProviderOutput, "response has neither text nor function_call");
}

std::vector<std::string> parse_text_list(const std::string& value) {
  const std::string t = text::trim(value);
  if (t.empty() || t == "None" || t == "null") return {};
  json j = json::parse(t, nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw Error(ErrorCode::MalformedProviderOutput, "expected a JSON list, got '" + value + "'");
  }
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (e.is_string()) {
      out.push_back(e.get<std::string>());
    } else if (e.is_number_integer()) {
      out.push_back(std::to_string(e.get<long long>()));
    } else {
      throw Error(ErrorCode::MalformedProviderOutput, "list element is neither text nor integer");
    }
  }
  return out;
}

void validate_response(const ChatRequest& req, const ChatResponse& resp) {
  if (resp.assistant_text.has_value() == resp.function_call.has_value()) {
    throw Error(ErrorCode::MalformedProviderOutput, "response must be text xor function call");
  }
  if (!resp.function_call) return;
  const auto& call = *resp.function_call;
  const FunctionSpec* spec = nullptr;
  for (const auto& f : req.available_functions) {
    if (f.name == call.name) spec = &f;
  }
  if (!spec) {
    throw Error(ErrorCode::MalformedProviderOutput, "function '" + call.name + "' is not available");
  }
  for (const auto& [k, v] : call.arguments) {
    const FunctionParam* p = spec->find_param(k);
    if (!p) {
      throw Error(ErrorCode::MalformedProviderOutput, "unknown argument '" + k + "' for " + call.name);
    }
    if (p->type == ParamType::TextList) parse_text_list(v);
    if (p->type == ParamType::Attitude) {
      try {
        attitude_from_string(v);
      } catch (const Error&) {
        throw Error(ErrorCode::MalformedProviderOutput, "bad attitude '" + v + "'");
      }
    }
  }
  for (const auto& p : spec->parameters) {
    if (p.required && !call.arguments.count(p.name)) {
      throw Error(ErrorCode::MalformedProviderOutput,
                  "missing argument '" + p.name + "' for " + call.name);
    }
  }
}

ChatResponse ChatProvider::complete(const ChatRequest& req) {
  if (req.messages.empty()) throw Error(ErrorCode::Precondition, "chat request without messages");
  count_call();
  ChatResponse resp = do_complete(req);
  validate_response(req, resp);
  return resp;
}

EmbeddingPair Embedder::embed(const std::string& t) {
  if (t.empty()) throw Error(ErrorCode::Precondition, "cannot embed empty text");
  count_call();
  EmbeddingPair p = do_embed(t);
  if (p.dense.size() != dimension()) {
    throw Error(ErrorCode::MalformedProviderOutput, "embedding has wrong dimension");
  }
  for (const auto& [tok, w] : p.lexical) {
    if (!std::isfinite(w) || w < 0) {
      throw Error(ErrorCode::MalformedProviderOutput, "invalid lexical weight for '" + tok + "'");
    }
  }
  return p;
}

Caption VisionProvider::caption_image(const std::string& context_text, const std::string& image_url) {
  if (image_url.empty()) throw Error(ErrorCode::Precondition, "image url is empty");
  count_call();
  Caption c = do_caption(context_text, image_url);
  if (c.caption.empty() || c.summary.empty()) {
    throw Error(ErrorCode::MalformedProviderOutput, "empty caption or summary for " + image_url);
  }
  return c;
}

std::vector<SearchHit> SearchProvider::web_search(const std::string& query, std::size_t top_k) {
  if (top_k < 1) throw Error(ErrorCode::Precondition, "top_k must be at least 1");
  count_call();
  auto hits = do_search(query, top_k);
  if (hits.size() > top_k) hits.resize(top_k);
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
  return hits;
}

bool ProviderSet::any_live() const {
  return (chat && chat->is_live()) || (vlm && vlm->is_live()) || (embedder && embedder->is_live()) ||
         (search && search->is_live());
}

}  // namespace acn::providers
