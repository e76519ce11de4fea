#include "acn/retrieval/retrieval.h"

#include <future>
#include <set>

#include "acn/core/error.h"
#include "acn/profile/profile.h"

namespace acn::retrieval {

void FilterConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda outside [0,1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0,1]");
  if (context_window_chars < 1) throw Error(ErrorCode::InvalidArgument, "context_window_chars must be >= 1");
  if (top_pages < 1) throw Error(ErrorCode::InvalidArgument, "top_pages must be >= 1");
}

std::vector<KnowledgeChunk> filter_chunks(const std::vector<RawChunk>& chunks, const std::string& query,
                                          const std::string& source_url, const FilterConfig& cfg,
                                          providers::Embedder& embedder) {
  cfg.validate();
  std::vector<KnowledgeChunk> kept;
  if (chunks.empty()) return kept;
  const auto q = embedder.embed(query);
  for (const auto& c : chunks) {
    if (c.text.empty()) continue;
    const double score = profile::hybrid_similarity(q, embedder.embed(c.text), cfg.alpha);
    if (score >= cfg.lambda) kept.push_back({c.text, source_url, score, c.chunk_index});
  }
  return kept;
}

std::vector<ImageRecord> extract_image_records(const std::string& md, const std::string& source_url,
                                               const FilterConfig& cfg, providers::VisionProvider& vlm,
                                               std::vector<Warning>* warnings,
                                               const std::string& instruction) {
  cfg.validate();
  std::vector<ImageRecord> out;
  std::set<std::string> seen;
  for (const auto& link : find_image_links(md)) {
    if (!seen.insert(link.url).second) continue;
    std::string context = image_context(md, link, cfg.context_window_chars);
    if (!instruction.empty()) context = instruction + "\n\n[Context]\n" + context;
    try {
      auto c = vlm.caption_image(context, link.url);
      out.push_back({link.url, std::move(c.caption), std::move(c.summary), source_url});
    } catch (const Error& e) {
      if (warnings) warnings->push_back({link.url, e.what()});
    }
  }
  return out;
}

namespace {

struct PageResult {
  bool ok = false;
  std::vector<KnowledgeChunk> chunks;
  std::vector<ImageRecord> images;
  std::vector<Warning> warnings;
};

PageResult process_page(const providers::SearchHit& hit, const std::string& query, const FilterConfig& cfg,
                        const providers::ProviderSet& providers, const std::string& instruction) {
  PageResult r;
  if (hit.status != 200 || hit.raw_content.empty()) {
    r.warnings.push_back({hit.url, "page unavailable (status " + std::to_string(hit.status) + ")"});
    return r;
  }
  try {
    const std::string md = page_to_markdown(hit.raw_content);
    r.chunks = filter_chunks(chunk_markdown(md), query, hit.url, cfg, *providers.embedder);
    r.images = extract_image_records(md, hit.url, cfg, *providers.vlm, &r.warnings, instruction);
    r.ok = true;
  } catch (const Error& e) {
    r.chunks.clear();
    r.images.clear();
    r.warnings.push_back({hit.url, e.what()});
  }
  return r;
}

}  // namespace

GatherResult search_and_gather(const std::string& query, const FilterConfig& cfg,
                               const providers::ProviderSet& providers, const std::string& caption_instruction) {
  cfg.validate();
  if (query.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::Precondition, "search query is empty");
  }
  GatherResult out;
  const auto hits = providers.search->web_search(query, cfg.top_pages);
  out.pages_seen = hits.size();

  std::vector<std::future<PageResult>> jobs;
  jobs.reserve(hits.size());
  for (const auto& hit : hits) {
    jobs.push_back(std::async(std::launch::async, process_page, std::cref(hit), std::cref(query),
                              std::cref(cfg), std::cref(providers), std::cref(caption_instruction)));
  }
  std::set<std::string> seen_images;
  for (auto& job : jobs) {
    PageResult r = job.get();
    out.pages_used += r.ok;
    for (auto& c : r.chunks) out.chunks.push_back(std::move(c));
    for (auto& img : r.images) {
      if (seen_images.insert(img.url).second) out.images.push_back(std::move(img));
    }
    for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
  }
  return out;
}

json to_json(const KnowledgeChunk& c) {
  return {{"text", c.text}, {"source_url", c.source_url}, {"score", c.score}, {"chunk_index", c.chunk_index}};
}

json to_json(const ImageRecord& r) {
  return {{"url", r.url}, {"caption", r.caption}, {"summary", r.summary}, {"source_url", r.source_url}};
}

ImageRecord image_record_from_json(const json& j) {
  return {j.at("url").get<std::string>(), j.at("caption").get<std::string>(),
          j.at("summary").get<std::string>(), j.at("source_url").get<std::string>()};
}

}  // namespace acn::retrieval
