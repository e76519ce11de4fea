#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "acn/core/types.h"

namespace acn::providers {

enum class Speaker { User, Assistant, FunctionResult };

std::string_view to_string(Speaker s);

struct ChatMessage {
  Speaker speaker = Speaker::User;
  std::string text;
};

struct ChatRequest {
  /// Caller tag used for routing fixtures ("AccountManager", "Optimizer", ...).
  std::string role;
  std::string system_prompt;
  std::vector<ChatMessage> messages;
  std::vector<FunctionSpec> available_functions;
};

struct FunctionCall {
  std::string name;
  std::map<std::string, std::string> arguments;

  const std::string& arg(const std::string& key) const;
  std::string arg_or(const std::string& key, std::string fallback) const;
};

/// Exactly one of `assistant_text` / `function_call` is populated.
struct ChatResponse {
  std::optional<std::string> assistant_text;
  std::optional<FunctionCall> function_call;

  static ChatResponse text(std::string t);
  static ChatResponse call(std::string name, std::map<std::string, std::string> args = {});
  bool is_call() const { return function_call.has_value(); }
};

json to_json(const ChatRequest& r);
json to_json(const ChatResponse& r);
/// Accepts {"text": ...} or {"function_call": {"name", "arguments"}}; non-string
/// argument values are kept as their JSON text.
ChatResponse chat_response_from_json(const json& j);

/// Throws MalformedProviderOutput unless the response honours the request's registry.
void validate_response(const ChatRequest& req, const ChatResponse& resp);

/// Decodes a TextList argument (a JSON array of strings/numbers, or empty/None).
std::vector<std::string> parse_text_list(const std::string& value);

struct EmbeddingPair {
  std::vector<double> dense;
  std::map<std::string, double> lexical;
};

struct SearchHit {
  std::string url;
  std::string title;
  std::string raw_content;
  std::size_t rank = 0;
  int status = 200;
};

struct Caption {
  std::string caption;
  std::string summary;
};

class ProviderBase {
 public:
  virtual ~ProviderBase() = default;
  /// True for adapters that reach the network.
  virtual bool is_live() const { return false; }
  std::size_t calls() const { return calls_.load(); }

 protected:
  void count_call() { ++calls_; }

 private:
  std::atomic<std::size_t> calls_{0};
};

class ChatProvider : public ProviderBase {
 public:
  /// Checks the precondition, forwards, and validates the response against
  /// the request's function registry.
  ChatResponse complete(const ChatRequest& req);

 protected:
  virtual ChatResponse do_complete(const ChatRequest& req) = 0;
};

class Embedder : public ProviderBase {
 public:
  EmbeddingPair embed(const std::string& text);
  virtual std::size_t dimension() const = 0;

 protected:
  virtual EmbeddingPair do_embed(const std::string& text) = 0;
};

class VisionProvider : public ProviderBase {
 public:
  Caption caption_image(const std::string& context_text, const std::string& image_url);

 protected:
  virtual Caption do_caption(const std::string& context_text, const std::string& image_url) = 0;
};

class SearchProvider : public ProviderBase {
 public:
  std::vector<SearchHit> web_search(const std::string& query, std::size_t top_k);

 protected:
  virtual std::vector<SearchHit> do_search(const std::string& query, std::size_t top_k) = 0;
};

struct ProviderSet {
  std::shared_ptr<ChatProvider> chat;
  std::shared_ptr<VisionProvider> vlm;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<SearchProvider> search;

  bool any_live() const;
};

}  // namespace acn::providers
