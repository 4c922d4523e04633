#include "harvest/extractor.hpp"

#include <algorithm>
#include <optional>
#include <unordered_set>

#include "harvest/html.hpp"
#include "harvest/url.hpp"

namespace harvest {

using html::Token;
using html::TokenKind;
using html::Tokenizer;

BoxNotFound::BoxNotFound(std::string tag, int ordinal, std::size_t found)
    : Error("focus point <" + tag + "> #" + std::to_string(ordinal) + " not found: page has " +
            std::to_string(found) + " occurrence(s)"),
      found_(found) {}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

bool opens_element(const Token& t) { return !t.self_closing && !html::is_void_element(t.name); }

// Start tags that implicitly end an open <p>.
bool closes_paragraph(std::string_view name) {
  static constexpr std::string_view kNames[] = {
      "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "footer", "form", "h1",
      "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "nav", "ol", "p", "pre", "section", "table", "ul"};
  return std::find(std::begin(kNames), std::end(kNames), name) != std::end(kNames);
}

// Approximate open-element stack, kept only to know which element encloses
// the box. Applies the common implied end tags so that unclosed <p>, <li>,
// <td> and friends do not masquerade as the parent.
class OpenElements {
 public:
  void start(const Token& t) {
    const std::string& n = t.name;
    if (closes_paragraph(n)) pop_if_top("p");
    if (n == "li") pop_through("li", {"ul", "ol"});
    if (n == "dt" || n == "dd") {
      pop_through("dt", {"dl"});
      pop_through("dd", {"dl"});
    }
    if (n == "td" || n == "th" || n == "tr") {
      pop_through("td", {"tr", "table"});
      pop_through("th", {"tr", "table"});
    }
    if (n == "tr") pop_through("tr", {"table", "tbody", "thead", "tfoot"});
    if (n == "option") pop_if_top("option");
    if (opens_element(t)) names_.push_back(n);
  }

  void end(const Token& t) {
    for (std::size_t j = names_.size(); j-- > 0;) {
      if (names_[j] == t.name) {
        names_.resize(j);
        return;
      }
    }
  }

  std::optional<std::string> top() const {
    if (names_.empty()) return std::nullopt;
    return names_.back();
  }

 private:
  void pop_if_top(std::string_view name) {
    if (!names_.empty() && names_.back() == name) names_.pop_back();
  }

  // Pops up to and including the nearest `name`, unless a `boundary`
  // element is reached first.
  void pop_through(std::string_view name, std::initializer_list<std::string_view> boundary) {
    for (std::size_t j = names_.size(); j-- > 0;) {
      if (names_[j] == name) {
        names_.resize(j);
        return;
      }
      if (std::find(boundary.begin(), boundary.end(), names_[j]) != boundary.end()) return;
    }
  }

  std::vector<std::string> names_;
};

// Whitespace-collapse and trim, treating U+00A0 as whitespace and angle
// brackets as separators.
std::string collapse(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == '<' || c == '>';
    std::size_t width = 1;
    if (static_cast<unsigned char>(c) == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) {
      space = true;
      width = 2;
    }
    if (space) {
      pending = !out.empty();
      i += width - 1;
      continue;
    }
    if (pending) {
      out += ' ';
      pending = false;
    }
    out += c;
  }
  return out;
}

struct LinkCandidate {
  std::string href;
  std::string text;
};

// <a href> (and optionally <img src>) in start-tag order.
std::vector<LinkCandidate> scan_links(std::string_view source, bool include_images) {
  std::vector<LinkCandidate> out;
  Tokenizer tk(source);
  std::optional<std::size_t> open_anchor;  // index into out
  std::size_t text_begin = 0;
  auto close_anchor = [&](std::size_t at) {
    if (open_anchor) out[*open_anchor].text = strip_tags(source.substr(text_begin, at - text_begin));
    open_anchor.reset();
  };
  while (auto tok = tk.next()) {
    if (tok->kind == TokenKind::StartTag && tok->name == "a") {
      close_anchor(tok->begin);
      if (const auto* href = tok->attribute("href")) {
        open_anchor = out.size();
        out.push_back({*href, {}});
        text_begin = tok->end;
      }
    } else if (tok->kind == TokenKind::EndTag && tok->name == "a") {
      close_anchor(tok->begin);
    } else if (include_images && tok->kind == TokenKind::StartTag && tok->name == "img") {
      if (const auto* src = tok->attribute("src")) out.push_back({*src, {}});
    }
  }
  close_anchor(source.size());
  return out;
}

}  // namespace

BoxFragment locate_box(const HtmlDocument& doc, const FocusPoint& focus) {
  const std::string tag = lowercase(focus.tag_name);
  const std::string_view raw = doc.raw;
  Tokenizer tk(raw);
  OpenElements open;
  std::size_t count = 0;

  auto fragment = [&](std::size_t begin, std::size_t end, bool unclosed) {
    return BoxFragment{std::string(raw.substr(begin, end - begin)), begin, end, unclosed};
  };

  while (auto tok = tk.next()) {
    if (tok->kind == TokenKind::StartTag) {
      if (tok->name == tag && ++count == static_cast<std::size_t>(focus.ordinal)) {
        if (!opens_element(*tok)) return fragment(tok->begin, tok->end, false);
        const std::size_t begin = tok->begin;
        const auto parent = open.top();
        // Depth counters for the box's tag and for the parent's tag, both
        // relative to the box start.
        int depth = 1;
        int parent_depth = 0;
        while (auto inner = tk.next()) {
          if (inner->kind == TokenKind::StartTag && opens_element(*inner)) {
            if (inner->name == tag) ++depth;
            if (parent && inner->name == *parent) ++parent_depth;
          } else if (inner->kind == TokenKind::EndTag) {
            if (inner->name == tag && --depth == 0) return fragment(begin, inner->end, false);
            if (parent && inner->name == *parent && parent_depth-- == 0) {
              return fragment(begin, inner->begin, true);
            }
          }
        }
        return fragment(begin, raw.size(), true);
      }
      open.start(*tok);
    } else if (tok->kind == TokenKind::EndTag) {
      open.end(*tok);
    }
  }
  throw BoxNotFound(tag, focus.ordinal, count);
}

std::string strip_tags(std::string_view source) {
  std::string text;
  text.reserve(source.size());
  Tokenizer tk(source);
  while (auto tok = tk.next()) {
    switch (tok->kind) {
      case TokenKind::Text:
        text.append(source.substr(tok->begin, tok->end - tok->begin));
        break;
      case TokenKind::StartTag:
      case TokenKind::EndTag:
        if (html::is_block_boundary(tok->name)) text += ' ';
        break;
      case TokenKind::RawText:
      case TokenKind::Comment:
        break;
    }
  }
  // Decode to a fixed point so that no character reference survives, e.g.
  // "&amp;lt;" -> "&lt;" -> "<". Each productive pass shrinks the text.
  for (;;) {
    std::string decoded = html::decode_entities(text);
    if (decoded == text) break;
    text = std::move(decoded);
  }
  return collapse(text);
}

std::vector<Anchor> extract_anchors(const HtmlDocument& doc) { return extract_anchors(doc, doc.base_url); }

std::vector<Anchor> extract_anchors(const HtmlDocument& doc, std::string_view site_url) {
  std::vector<Anchor> out;
  for (auto& link : scan_links(doc.raw, false)) {
    auto url = normalize_url(doc.base_url, link.href);
    if (!url) continue;
    const bool same = same_site(*url, site_url);
    out.push_back({std::move(*url), std::move(link.text), same});
  }
  return out;
}

ExtractedRecord extract_record(const HtmlDocument& doc, const HarvestTarget& target, TimePoint now,
                               bool* box_unclosed) {
  const BoxFragment box = locate_box(doc, target.focus_point);
  if (box_unclosed) *box_unclosed = box.unclosed;

  ExtractedRecord rec;
  rec.target_id = target.id;
  rec.content_type = target.content_type;
  rec.source_url = doc.base_url;
  rec.clean_text = strip_tags(box.inner);
  rec.harvested_at = to_unix_seconds(now);
  rec.content_hash = fnv1a64(rec.clean_text);

  std::unordered_set<std::string> seen;
  for (auto& link : scan_links(box.inner, true)) {
    auto url = normalize_url(doc.base_url, link.href);
    if (!url || seen.contains(*url)) continue;
    Anchor anchor{*url, std::move(link.text), same_site(*url, target.start_url)};
    for (const auto& rule : target.content_link_rules) {
      if (match_criterion(anchor, rule.criterion)) {
        seen.insert(*url);
        rec.asset_links.push_back({std::move(*url), rule.kind});
        break;
      }
    }
  }
  return rec;
}

}  // namespace harvest
