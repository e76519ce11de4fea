#include "support.h"

#include "acn/providers/scripted.h"
#include "acn/retrieval/retrieval.h"
#include "oracles.h"

using namespace acn;
using namespace acn::retrieval;
using providers::EmbeddingPair;
using providers::ScriptedEmbedder;

namespace {

std::shared_ptr<providers::ScriptedVlm> demo_vlm() {
  return providers::ScriptedVlm::from_file(test_support::fixtures() / "demo" / "vlm.json");
}

providers::ProviderSet demo_providers() {
  providers::ProviderSet ps;
  ps.vlm = demo_vlm();
  ps.embedder = std::make_shared<ScriptedEmbedder>(64);
  ps.search = std::make_shared<providers::FixtureSearch>(test_support::fixtures() / "demo" / "corpus");
  return ps;
}

// Chunk scores pinned through the embedder: query (1,0), chunk "c<k>" at cosine k/10.
ScriptedEmbedder pinned_scores(const std::vector<int>& tenths) {
  std::map<std::string, EmbeddingPair> o{{"query", {{1.0, 0.0}, {}}}};
  for (int t : tenths) {
    const double c = t / 10.0;
    o["c" + std::to_string(t)] = {{c, std::sqrt(1.0 - c * c)}, {}};
  }
  return ScriptedEmbedder(2, o);
}

std::vector<RawChunk> raw(const std::vector<std::string>& texts) {
  std::vector<RawChunk> out;
  for (const auto& t : texts) out.push_back({out.size(), t});
  return out;
}

}  // namespace

TEST_CASE("page_to_markdown examples") {
  const auto md = page_to_markdown("<p>hi</p><img src='a.png'>");
  CHECK(text::contains(md, "hi"));
  CHECK(text::contains(md, "](a.png)"));

  const std::string plain = "Just some text.\n\nAnother paragraph with ![x](y.png).";
  CHECK(page_to_markdown(plain) == plain);

  const auto three = page_to_markdown(
      "<html><body><h1>T</h1><img src=\"1.png\" alt=\"one\"><p>a <b>b</b></p>"
      "<script>var x = '<img src=no.png>';</script><img src='2.png'><div><img src=3.png></div></body></html>");
  const auto links = find_image_links(three);
  REQUIRE(links.size() == 3);
  CHECK(links[0].url == "1.png");
  CHECK(links[0].alt == "one");
  CHECK(links[1].url == "2.png");
  CHECK(links[2].url == "3.png");
  CHECK(text::contains(three, "# T"));
  CHECK_FALSE(text::contains(three, "var x"));
}

TEST_CASE("page_to_markdown: entities, lists, links") {
  const auto md = page_to_markdown("<ul><li>a &amp; b</li><li>c</li></ul><p><a href=\"https://x.example\">x</a></p>");
  CHECK(text::contains(md, "- a & b"));
  CHECK(text::contains(md, "- c"));
  CHECK(text::contains(md, "[x](https://x.example)"));
}

TEST_CASE("chunk_markdown examples") {
  CHECK(chunk_markdown("a\n\nb\n\n\nc") == std::vector<RawChunk>{{0, "a"}, {1, "b"}, {2, "c"}});
  CHECK(chunk_markdown("").empty());
  CHECK(chunk_markdown("one paragraph\nwith two lines") == std::vector<RawChunk>{{0, "one paragraph\nwith two lines"}});
  CHECK(chunk_markdown("a\r\n\r\nb") == std::vector<RawChunk>{{0, "a"}, {1, "b"}});
  CHECK(chunk_markdown("\n\n  \n\nx\n\n") == std::vector<RawChunk>{{0, "x"}});
}

TEST_CASE("chunk_markdown agrees with the oracle and round-trips") {
  for (const std::string md : {"a\n\n\n\nb", "  lead\n\ntrail  \n", "x\n \ny", "p1\n\n\n\n\np2\n\np3", "\r\n\r\nz"}) {
    const auto got = chunk_markdown(md);
    const auto want = oracle::chunks(md);
    REQUIRE(got.size() == want.size());
    std::string joined;
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].text == want[i]);
      CHECK(got[i].chunk_index == i);
      joined += (i ? "\n\n" : "") + got[i].text;
    }
    CHECK(chunk_markdown(joined) == got);
  }
}

TEST_CASE("filter_chunks: threshold arithmetic") {
  auto e = pinned_scores({9, 4, 6, 5});
  FilterConfig cfg;
  cfg.alpha = 1.0;
  cfg.lambda = 0.5;
  const auto kept = filter_chunks(raw({"c9", "c4", "c6"}), "query", "u", cfg, e);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].chunk_index == 0);
  CHECK(kept[1].chunk_index == 2);
  CHECK(kept[1].source_url == "u");

  cfg.lambda = 0.0;
  CHECK(filter_chunks(raw({"c9", "c4", "c6"}), "query", "u", cfg, e).size() == 3);
}

TEST_CASE("filter_chunks: a score equal to lambda is kept") {
  // (1,0) vs (3,4): cosine exactly 0.6.
  ScriptedEmbedder e(2, {{"query", {{1.0, 0.0}, {}}}, {"edge", {{3.0, 4.0}, {}}}});
  FilterConfig cfg;
  cfg.alpha = 1.0;
  cfg.lambda = 0.6;
  const auto kept = filter_chunks(raw({"edge"}), "query", "u", cfg, e);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == 0.6);
  cfg.lambda = std::nextafter(0.6, 1.0);
  CHECK(filter_chunks(raw({"edge"}), "query", "u", cfg, e).empty());
}

TEST_CASE("filter config validation") {
  FilterConfig cfg;
  cfg.lambda = 1.5;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
  cfg = {};
  cfg.top_pages = 0;
  CHECK_ERROR(cfg.validate(), ErrorCode::InvalidArgument);
}

TEST_CASE("image extraction") {
  auto vlm = demo_vlm();
  FilterConfig cfg;
  CHECK(extract_image_records("no images here", "src", cfg, *vlm).empty());

  const std::string one = "Protein matters.\n\n![](https://nutrition.example/img/beef-steak.jpg)\n\nMore text.";
  const auto recs = extract_image_records(one, "src", cfg, *vlm);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].caption == "Grilled lean beef steak");
  CHECK(recs[0].source_url == "src");

  const std::string twice = one + "\n\n![again](https://nutrition.example/img/beef-steak.jpg)";
  CHECK(extract_image_records(twice, "src", cfg, *vlm).size() == 1);

  std::vector<Warning> warnings;
  const auto partial =
      extract_image_records(one + "\n\n![](https://unknown.example/x.png)", "src", cfg, *vlm, &warnings);
  CHECK(partial.size() == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].where == "https://unknown.example/x.png");
}

TEST_CASE("image context is windowed and excludes the link") {
  const std::string md = "0123456789![a](u.png)abcdefghij";
  const auto links = find_image_links(md);
  REQUIRE(links.size() == 1);
  const auto ctx = image_context(md, links[0], 4);
  CHECK(text::contains(ctx, "6789"));
  CHECK(text::contains(ctx, "abcd"));
  CHECK_FALSE(text::contains(ctx, "u.png"));
  CHECK_FALSE(text::contains(ctx, "5"));
  CHECK_FALSE(text::contains(ctx, "e"));
}

TEST_CASE("find_image_links: titles and malformed links") {
  const auto links = find_image_links("![t](a.png \"Title\") ![bad](  ) ![x] (b.png) ![ok](c.png)");
  REQUIRE(links.size() == 2);
  CHECK(links[0].url == "a.png");
  CHECK(links[1].url == "c.png");
}

TEST_CASE("search_and_gather over the fixture corpus") {
  auto ps = demo_providers();
  FilterConfig cfg;
  cfg.lambda = 0.2;
  const auto r = search_and_gather("protein foods for muscle building", cfg, ps);
  CHECK(r.pages_seen >= 2);
  REQUIRE_FALSE(r.chunks.empty());
  // Concatenation follows page rank: the top page's chunks come first.
  CHECK(r.chunks.front().source_url == "https://nutrition.example/protein-foods");
  std::set<std::string> sources;
  for (const auto& c : r.chunks) sources.insert(c.source_url);
  CHECK(sources.size() >= 2);
  bool switched = false;
  for (std::size_t i = 1; i < r.chunks.size(); ++i) {
    if (r.chunks[i].source_url != r.chunks[i - 1].source_url) switched = true;
    if (!switched) CHECK(r.chunks[i].chunk_index > r.chunks[i - 1].chunk_index);
  }
  // The archived 404 page is skipped with a warning.
  bool warned = false;
  for (const auto& w : r.warnings) warned |= w.where == "https://archive.example/old-protein-guide";
  CHECK(warned);
  CHECK(r.pages_used == r.pages_seen - 1);
  std::set<std::string> urls;
  for (const auto& img : r.images) CHECK(urls.insert(img.url).second);
  CHECK(urls.count("https://nutrition.example/img/beef-steak.jpg") == 1);
}

TEST_CASE("search_and_gather: no match and empty query") {
  auto ps = demo_providers();
  const auto r = search_and_gather("quantum chromodynamics", {}, ps);
  CHECK(r.chunks.empty());
  CHECK(r.images.empty());
  CHECK_ERROR(search_and_gather("  ", {}, ps), ErrorCode::Precondition);
}

TEST_CASE("search_and_gather is deterministic") {
  auto ps = demo_providers();
  FilterConfig cfg;
  cfg.lambda = 0.1;
  const auto a = search_and_gather("muscle diet", cfg, ps);
  for (int i = 0; i < 3; ++i) {
    const auto b = search_and_gather("muscle diet", cfg, ps);
    REQUIRE(a.chunks.size() == b.chunks.size());
    for (std::size_t k = 0; k < a.chunks.size(); ++k) CHECK(to_json(a.chunks[k]) == to_json(b.chunks[k]));
    CHECK(a.images == b.images);
  }
}

TEST_CASE("image record JSON round trip") {
  const ImageRecord r{"u", "c", "s", "src"};
  CHECK(image_record_from_json(to_json(r)) == r);
}
