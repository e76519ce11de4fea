#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "acn/core/text.h"
#include "acn/retrieval/retrieval.h"

namespace acn::retrieval {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

// True when `s` contains something that parses as an HTML tag, comment or doctype.
bool looks_like_html(const std::string& s) {
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] != '<') continue;
    std::size_t j = i + 1;
    if (s[j] == '!') return s.find('>', j) != std::string::npos;
    if (s[j] == '/') ++j;
    if (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) {
      while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '>' || s[j] == '/' || is_space(s[j]))) {
        if (s.find('>', j) != std::string::npos) return true;
      }
    }
  }
  return false;
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    const std::string_view name = s.substr(i + 1, semi - i - 1);
    std::optional<unsigned long> cp;
    if (name == "amp") cp = '&';
    else if (name == "lt") cp = '<';
    else if (name == "gt") cp = '>';
    else if (name == "quot") cp = '"';
    else if (name == "apos") cp = '\'';
    else if (name == "nbsp") cp = ' ';
    else if (name.size() > 1 && name[0] == '#') {
      try {
        cp = (name[1] == 'x' || name[1] == 'X') ? std::stoul(std::string(name.substr(2)), nullptr, 16)
                                                : std::stoul(std::string(name.substr(1)), nullptr, 10);
      } catch (...) {
        cp.reset();
      }
    }
    if (!cp) {
      out.push_back('&');
      continue;
    }
    append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

struct Tag {
  std::string name;  // lowercase
  bool closing = false;
  std::vector<std::pair<std::string, std::string>> attrs;

  std::string attr(const std::string& key) const {
    for (const auto& [k, v] : attrs) {
      if (k == key) return v;
    }
    return {};
  }
};

// Parses the tag starting at s[i] == '<'; returns the index past '>'.
std::size_t parse_tag(const std::string& s, std::size_t i, Tag& tag) {
  std::size_t j = i + 1;
  if (j < s.size() && s[j] == '/') {
    tag.closing = true;
    ++j;
  }
  while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-')) {
    tag.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[j]))));
    ++j;
  }
  while (j < s.size() && s[j] != '>') {
    if (is_space(s[j]) || s[j] == '/') {
      ++j;
      continue;
    }
    std::string key;
    while (j < s.size() && !is_space(s[j]) && s[j] != '=' && s[j] != '>' && s[j] != '/') {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[j]))));
      ++j;
    }
    while (j < s.size() && is_space(s[j])) ++j;
    std::string value;
    if (j < s.size() && s[j] == '=') {
      ++j;
      while (j < s.size() && is_space(s[j])) ++j;
      if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
        const char q = s[j++];
        const auto close = s.find(q, j);
        const auto stop = close == std::string::npos ? s.size() : close;
        value = s.substr(j, stop - j);
        j = close == std::string::npos ? s.size() : close + 1;
      } else {
        while (j < s.size() && !is_space(s[j]) && s[j] != '>') value.push_back(s[j++]);
      }
    }
    if (!key.empty()) tag.attrs.emplace_back(key, decode_entities(value));
  }
  return j < s.size() ? j + 1 : s.size();
}

bool is_block(const std::string& n) {
  static const char* const kBlocks[] = {
      "p",       "div",    "section", "article", "header", "footer", "main",     "nav",
      "aside",   "blockquote", "figure", "figcaption", "table", "ul", "ol",  "pre",
      "hr",      "form",   "dl",      "dt",      "dd",     "address", "body",   "html",
      "details", "summary", "thead",  "tbody",   "tfoot"};
  return std::find_if(std::begin(kBlocks), std::end(kBlocks),
                      [&](const char* b) { return n == b; }) != std::end(kBlocks);
}

bool is_skipped_container(const std::string& n) {
  return n == "script" || n == "style" || n == "noscript" || n == "template" || n == "head" ||
         n == "svg" || n == "iframe";
}

std::string escape_url(const std::string& url) {
  std::string out;
  for (char c : url) {
    if (c == ' ') out += "%20";
    else if (c == '(') out += "%28";
    else if (c == ')') out += "%29";
    else if (c == '\n' || c == '\r' || c == '\t') continue;
    else out.push_back(c);
  }
  return out;
}

std::string clean_alt(const std::string& alt) {
  std::string out;
  for (char c : text::trim(alt)) {
    if (c == '[' || c == ']') continue;
    out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
  }
  return out;
}

class Emitter {
 public:
  void text(std::string_view raw, bool preformatted) {
    const std::string t = decode_entities(raw);
    if (preformatted) {
      out_ += t;
      return;
    }
    for (char c : t) {
      if (is_space(c)) {
        pending_space_ = true;
        continue;
      }
      if (pending_space_ && !out_.empty() && out_.back() != '\n' && out_.back() != ' ') out_.push_back(' ');
      pending_space_ = false;
      out_.push_back(c);
    }
  }

  void raw(std::string_view s) {
    if (pending_space_ && !out_.empty() && out_.back() != '\n' && out_.back() != ' ') out_.push_back(' ');
    pending_space_ = false;
    out_ += s;
  }

  void newlines(std::size_t n) {
    pending_space_ = false;
    while (!out_.empty() && out_.back() == ' ') out_.pop_back();
    if (out_.empty()) return;
    std::size_t have = 0;
    for (auto it = out_.rbegin(); it != out_.rend() && *it == '\n'; ++it) ++have;
    for (; have < n; ++have) out_.push_back('\n');
  }

  std::size_t size() const { return out_.size(); }
  std::string& str() { return out_; }

 private:
  std::string out_;
  bool pending_space_ = false;
};

std::string tidy(const std::string& s) {
  // Trim trailing spaces on lines and cap blank-line runs at one.
  std::string out;
  std::size_t newline_run = 0;
  for (char c : s) {
    if (c == '\n') {
      while (!out.empty() && out.back() == ' ') out.pop_back();
      if (++newline_run > 2) continue;
    } else {
      newline_run = 0;
    }
    out.push_back(c);
  }
  return text::trim(out);
}

}  // namespace

std::string page_to_markdown(const std::string& raw_content) {
  if (!looks_like_html(raw_content)) return raw_content;

  Emitter em;
  struct Anchor {
    std::size_t open_pos;
    std::string href;
  };
  std::vector<Anchor> anchors;
  int pre_depth = 0;

  std::size_t i = 0;
  const std::string& s = raw_content;
  while (i < s.size()) {
    if (s[i] != '<') {
      const auto next = s.find('<', i);
      const auto stop = next == std::string::npos ? s.size() : next;
      em.text(std::string_view(s).substr(i, stop - i), pre_depth > 0);
      i = stop;
      continue;
    }
    if (s.compare(i, 4, "<!--") == 0) {
      const auto end = s.find("-->", i + 4);
      i = end == std::string::npos ? s.size() : end + 3;
      continue;
    }
    if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
      const auto end = s.find('>', i);
      i = end == std::string::npos ? s.size() : end + 1;
      continue;
    }
    const bool tag_start = i + 1 < s.size() &&
                           (std::isalpha(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '/');
    if (!tag_start) {
      em.text("<", pre_depth > 0);
      ++i;
      continue;
    }
    Tag tag;
    i = parse_tag(s, i, tag);
    const std::string& n = tag.name;

    if (!tag.closing && is_skipped_container(n)) {
      const std::string close = "</" + n;
      std::size_t k = i;
      while (true) {
        k = s.find("</", k);
        if (k == std::string::npos) break;
        std::string candidate = text::to_lower(s.substr(k, close.size()));
        if (candidate == close) break;
        k += 2;
      }
      if (k == std::string::npos) {
        i = s.size();
      } else {
        const auto end = s.find('>', k);
        i = end == std::string::npos ? s.size() : end + 1;
      }
      continue;
    }

    if (n == "img" && !tag.closing) {
      const std::string src = text::trim(tag.attr("src"));
      if (!src.empty()) em.raw("![" + clean_alt(tag.attr("alt")) + "](" + escape_url(src) + ")");
      continue;
    }
    if (n == "br") {
      em.newlines(1);
      continue;
    }
    if (n.size() == 2 && n[0] == 'h' && n[1] >= '1' && n[1] <= '6') {
      em.newlines(2);
      if (!tag.closing) em.raw(std::string(static_cast<std::size_t>(n[1] - '0'), '#') + " ");
      continue;
    }
    if (n == "li") {
      em.newlines(1);
      if (!tag.closing) em.raw("- ");
      continue;
    }
    if (n == "tr") {
      em.newlines(1);
      continue;
    }
    if (n == "td" || n == "th") {
      em.text(" ", false);
      continue;
    }
    if (n == "a") {
      if (!tag.closing) {
        anchors.push_back({em.size(), text::trim(tag.attr("href"))});
        continue;
      }
      if (anchors.empty()) continue;
      Anchor a = anchors.back();
      anchors.pop_back();
      std::string& out = em.str();
      const std::string label = text::trim(std::string_view(out).substr(std::min(a.open_pos, out.size())));
      if (a.href.empty() || a.href[0] == '#' || label.empty() || label.find("![") != std::string::npos) {
        continue;
      }
      out.erase(std::min(a.open_pos, out.size()));
      em.raw("[" + label + "](" + escape_url(a.href) + ")");
      continue;
    }
    if (n == "pre") {
      pre_depth += tag.closing ? -1 : 1;
      pre_depth = std::max(pre_depth, 0);
      em.newlines(2);
      continue;
    }
    if (is_block(n)) em.newlines(2);
  }
  return tidy(em.str());
}

std::vector<RawChunk> chunk_markdown(const std::string& md_in) {
  std::string md;
  md.reserve(md_in.size());
  for (std::size_t i = 0; i < md_in.size(); ++i) {
    if (md_in[i] == '\r' && i + 1 < md_in.size() && md_in[i + 1] == '\n') continue;
    md.push_back(md_in[i]);
  }
  std::vector<RawChunk> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string seg = text::trim(std::string_view(md).substr(start, end - start));
    if (!seg.empty()) out.push_back({out.size(), std::move(seg)});
  };
  std::size_t i = 0;
  while (i < md.size()) {
    if (md[i] == '\n' && i + 1 < md.size() && md[i + 1] == '\n') {
      flush(i);
      while (i < md.size() && md[i] == '\n') ++i;
      start = i;
      continue;
    }
    ++i;
  }
  flush(md.size());
  return out;
}

std::vector<ImageLink> find_image_links(const std::string& md) {
  std::vector<ImageLink> out;
  std::size_t i = 0;
  while ((i = md.find("![", i)) != std::string::npos) {
    const auto close = md.find(']', i + 2);
    if (close == std::string::npos) break;
    const std::string alt = md.substr(i + 2, close - i - 2);
    if (alt.find('\n') != std::string::npos || close + 1 >= md.size() || md[close + 1] != '(') {
      i += 2;
      continue;
    }
    std::size_t j = close + 2;
    while (j < md.size() && md[j] == ' ') ++j;
    std::string url;
    while (j < md.size() && !is_space(md[j]) && md[j] != ')') url.push_back(md[j++]);
    while (j < md.size() && md[j] == ' ') ++j;
    if (j < md.size() && md[j] == '"') {
      const auto q = md.find('"', j + 1);
      j = q == std::string::npos ? md.size() : q + 1;
      while (j < md.size() && md[j] == ' ') ++j;
    }
    if (url.empty() || j >= md.size() || md[j] != ')') {
      i += 2;
      continue;
    }
    out.push_back({alt, url, i, j + 1});
    i = j + 1;
  }
  return out;
}

std::string image_context(const std::string& md, const ImageLink& link, std::size_t window) {
  const std::size_t b = link.begin > window ? link.begin - window : 0;
  std::size_t before_start = b;
  // Move forward to a character boundary rather than splitting a sequence.
  while (before_start < link.begin && (static_cast<unsigned char>(md[before_start]) & 0xC0) == 0x80) {
    ++before_start;
  }
  const std::size_t after_end = text::utf8_floor(md, std::min(md.size(), link.end + window));
  std::string before = text::trim(std::string_view(md).substr(before_start, link.begin - before_start));
  std::string after = text::trim(std::string_view(md).substr(link.end, after_end - link.end));
  if (before.empty()) return after;
  if (after.empty()) return before;
  return before + "\n" + after;
}

}  // namespace acn::retrieval
