#pragma once

#include <string>
#include <utility>
#include <vector>

#include "acn/core/types.h"
#include "acn/providers/providers.h"

namespace acn::retrieval {

struct KnowledgeChunk {
  std::string text;
  std::string source_url;
  double score = 0.0;
  std::size_t chunk_index = 0;
};

struct ImageRecord {
  std::string url;
  std::string caption;
  std::string summary;
  std::string source_url;

  bool operator==(const ImageRecord&) const = default;
};

struct FilterConfig {
  double lambda = 0.35;
  std::size_t context_window_chars = 400;
  std::size_t top_pages = 5;
  /// Dense weight used when scoring chunks with the hybrid similarity.
  double alpha = 0.5;

  void validate() const;
};

/// Converts an HTML page to markdown. Input that contains no HTML tags is
/// returned unchanged. Scripts, styles and comments are dropped; every <img>
/// with a src becomes a markdown image link in document order.
std::string page_to_markdown(const std::string& raw_content);

struct RawChunk {
  std::size_t chunk_index = 0;
  std::string text;

  bool operator==(const RawChunk&) const = default;
};

/// Splits on runs of two or more newlines; whitespace-only segments are
/// dropped and the surviving segments are trimmed.
std::vector<RawChunk> chunk_markdown(const std::string& md);

/// Keeps chunks whose hybrid similarity to the query is >= lambda, in order.
std::vector<KnowledgeChunk> filter_chunks(const std::vector<RawChunk>& chunks, const std::string& query,
                                          const std::string& source_url, const FilterConfig& cfg,
                                          providers::Embedder& embedder);

struct ImageLink {
  std::string alt;
  std::string url;
  std::size_t begin = 0;  // byte offset of "![" in the markdown
  std::size_t end = 0;    // one past ")"
};

/// Markdown image links `![alt](url "title")` in document order.
std::vector<ImageLink> find_image_links(const std::string& md);

/// Up to `window` bytes either side of the link (UTF-8 safe), link removed.
std::string image_context(const std::string& md, const ImageLink& link, std::size_t window);

struct Warning {
  std::string where;
  std::string message;
};

std::vector<ImageRecord> extract_image_records(const std::string& md, const std::string& source_url,
                                               const FilterConfig& cfg, providers::VisionProvider& vlm,
                                               std::vector<Warning>* warnings = nullptr,
                                               const std::string& instruction = {});

struct GatherResult {
  std::vector<KnowledgeChunk> chunks;
  std::vector<ImageRecord> images;
  std::vector<Warning> warnings;
  std::size_t pages_seen = 0;
  std::size_t pages_used = 0;
};

/// Search, convert, chunk, filter and caption. Pages are processed
/// concurrently; results are concatenated in rank order. A page that fails
/// is skipped with a warning.
GatherResult search_and_gather(const std::string& query, const FilterConfig& cfg,
                               const providers::ProviderSet& providers,
                               const std::string& caption_instruction = {});

json to_json(const KnowledgeChunk& c);
json to_json(const ImageRecord& r);
ImageRecord image_record_from_json(const json& j);

}  // namespace acn::retrieval
