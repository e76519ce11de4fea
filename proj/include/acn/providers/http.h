#pragma once

#include <string>

#include "acn/providers/providers.h"

namespace acn::providers {

/// Thin JSON-over-HTTP adapters. Each POSTs a JSON body to its endpoint and
/// expects the same JSON shapes the scripted fixtures use. Any transport or
/// status failure surfaces as ProviderUnavailable.
struct HttpEndpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // /...

  static HttpEndpoint parse(const std::string& url);
};

class HttpChat : public ChatProvider {
 public:
  explicit HttpChat(HttpEndpoint ep) : ep_(std::move(ep)) {}
  bool is_live() const override { return true; }

 protected:
  ChatResponse do_complete(const ChatRequest& req) override;

 private:
  HttpEndpoint ep_;
};

class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(HttpEndpoint ep, std::size_t dim) : ep_(std::move(ep)), dim_(dim) {}
  bool is_live() const override { return true; }
  std::size_t dimension() const override { return dim_; }

 protected:
  EmbeddingPair do_embed(const std::string& text) override;

 private:
  HttpEndpoint ep_;
  std::size_t dim_;
};

class HttpVlm : public VisionProvider {
 public:
  explicit HttpVlm(HttpEndpoint ep) : ep_(std::move(ep)) {}
  bool is_live() const override { return true; }

 protected:
  Caption do_caption(const std::string& context_text, const std::string& image_url) override;

 private:
  HttpEndpoint ep_;
};

class HttpSearch : public SearchProvider {
 public:
  explicit HttpSearch(HttpEndpoint ep) : ep_(std::move(ep)) {}
  bool is_live() const override { return true; }

 protected:
  std::vector<SearchHit> do_search(const std::string& query, std::size_t top_k) override;

 private:
  HttpEndpoint ep_;
};

}  // namespace acn::providers
