#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acn/providers/providers.h"

namespace acn::providers {

/// Fixture-driven chat model. Rules are tried in order; the first whose
/// conditions all hold answers. Conditions:
///   role            exact caller tag
///   match           normalized last user message equals this (normalized)
///   contains        normalized last user message contains this (normalized)
///   system_contains system prompt contains this (verbatim)
/// A rule carries `response` or `responses`; with a list, the entry chosen is
/// the number of assistant messages already in the request (clamped), which
/// lets one rule script a multi-call conversation. `defaults` maps role tag to
/// a fallback rule or bare response. A response of {"error": "..."} raises ProviderUnavailable.
class ScriptedChat : public ChatProvider {
 public:
  explicit ScriptedChat(json script);
  static std::shared_ptr<ScriptedChat> from_file(const std::filesystem::path& path);

 protected:
  ChatResponse do_complete(const ChatRequest& req) override;

 private:
  json script_;
};

/// Deterministic bag-of-words embedder. Each non-stopword token adds its term
/// frequency to one hashed, signed dense coordinate and to its lexical weight.
/// A text of stopwords only keeps them all, a text without tokens counts as one
/// token, and a dense vector that cancels to zero gets one hashed unit
/// coordinate, so any non-empty text has S(t, t) = 1.
/// Exact-text overrides take precedence, which lets tests pin similarities.
class ScriptedEmbedder : public Embedder {
 public:
  explicit ScriptedEmbedder(std::size_t dim = 64, std::map<std::string, EmbeddingPair> overrides = {});
  static std::shared_ptr<ScriptedEmbedder> from_file(const std::filesystem::path& path);

  std::size_t dimension() const override { return dim_; }

 protected:
  EmbeddingPair do_embed(const std::string& text) override;

 private:
  std::size_t dim_;
  std::map<std::string, EmbeddingPair> overrides_;
};

/// Captions keyed on image URL; an entry may narrow itself with
/// `context_contains`, and more specific entries are listed first.
class ScriptedVlm : public VisionProvider {
 public:
  explicit ScriptedVlm(json fixtures);
  static std::shared_ptr<ScriptedVlm> from_file(const std::filesystem::path& path);

 protected:
  Caption do_caption(const std::string& context_text, const std::string& image_url) override;

 private:
  json entries_;
};

/// Search over a fixture corpus directory holding `index.json`
/// ({"pages": [{"url", "title", "file", "keywords": [...]}]}) and the page files.
/// Pages score by the number of distinct query tokens found in their title and
/// keywords; ties keep index order. A missing page file yields status 404.
class FixtureSearch : public SearchProvider {
 public:
  explicit FixtureSearch(std::filesystem::path corpus_dir);

 protected:
  std::vector<SearchHit> do_search(const std::string& query, std::size_t top_k) override;

 private:
  struct Page {
    std::string url;
    std::string title;
    std::filesystem::path file;
    std::vector<std::string> terms;
  };
  std::filesystem::path dir_;
  std::vector<Page> pages_;
};

/// Builds a provider from a `scripted:<path>` or `http:<endpoint>` spec; a
/// bare http(s) URL also selects the HTTP adapter.
std::shared_ptr<ChatProvider> make_chat(const std::string& spec);
std::shared_ptr<VisionProvider> make_vlm(const std::string& spec);
std::shared_ptr<Embedder> make_embedder(const std::string& spec, std::size_t dim);
std::shared_ptr<SearchProvider> make_search(const std::string& spec);

}  // namespace acn::providers
