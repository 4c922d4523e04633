#include "harvest/html.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

namespace harvest::html {

namespace {

struct NamedEntity {
  std::string_view name;
  char32_t code;
};

constexpr NamedEntity kEntities[] = {
#include "entities.inc"
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool starts_with_ci(std::string_view s, std::size_t at, std::string_view prefix) {
  if (at > s.size() || s.size() - at < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(s[at + i]) != lower(prefix[i])) return false;
  }
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::optional<char32_t> lookup_entity(std::string_view name) {
  auto it = std::lower_bound(std::begin(kEntities), std::end(kEntities), name,
                             [](const NamedEntity& e, std::string_view n) { return e.name < n; });
  if (it != std::end(kEntities) && it->name == name) return it->code;
  return std::nullopt;
}

// Finds "</name" followed by a tag-ending character, case-insensitively.
std::size_t find_end_tag(std::string_view src, std::size_t from, std::string_view name) {
  for (std::size_t i = src.find('<', from); i != std::string_view::npos; i = src.find('<', i + 1)) {
    if (i + 1 < src.size() && src[i + 1] == '/' && starts_with_ci(src, i + 2, name)) {
      const std::size_t after = i + 2 + name.size();
      if (after >= src.size() || is_space(src[after]) || src[after] == '/' || src[after] == '>') return i;
    }
  }
  return std::string_view::npos;
}

}  // namespace

const std::string* Token::attribute(std::string_view attr_name) const {
  for (const auto& a : attributes) {
    if (a.name == attr_name) return &a.value;
  }
  return nullptr;
}

bool is_void_element(std::string_view name) {
  static constexpr std::array<std::string_view, 16> kVoid = {
      "area", "base", "basefont", "br", "col", "embed", "hr", "img",
      "input", "keygen", "link", "meta", "param", "source", "track", "wbr"};
  return std::find(kVoid.begin(), kVoid.end(), name) != kVoid.end();
}

bool is_block_boundary(std::string_view name) {
  static constexpr std::array<std::string_view, 35> kBlock = {
      "address", "article", "aside", "blockquote", "br", "caption", "dd", "div", "dl",
      "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
      "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol",
      "p", "pre", "section", "table", "td", "th", "tr", "ul"};
  if (std::find(kBlock.begin(), kBlock.end(), name) != kBlock.end()) return true;
  return name == "tbody" || name == "thead" || name == "tfoot" || name == "title" || name == "option";
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c != '&') {
      out += c;
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (j < text.size() && text[j] == '#') {
      ++j;
      const bool hex = j < text.size() && (text[j] == 'x' || text[j] == 'X');
      if (hex) ++j;
      const std::size_t digits_begin = j;
      while (j < text.size() &&
             (is_digit(text[j]) || (hex && ((text[j] >= 'a' && text[j] <= 'f') || (text[j] >= 'A' && text[j] <= 'F'))))) {
        ++j;
      }
      if (j == digits_begin) {
        out += c;
        ++i;
        continue;
      }
      std::uint64_t value = 0;
      bool overflow = false;
      for (std::size_t k = digits_begin; k < j && !overflow; ++k) {
        const char d = text[k];
        const unsigned v = is_digit(d) ? d - '0' : (lower(d) - 'a' + 10);
        value = value * (hex ? 16 : 10) + v;
        overflow = value > 0x10FFFF;
      }
      if (j < text.size() && text[j] == ';') ++j;
      char32_t cp = static_cast<char32_t>(value);
      if (overflow || cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
      append_utf8(out, cp);
      i = j;
      continue;
    }
    while (j < text.size() && j - i <= 32 && (is_alpha(text[j]) || is_digit(text[j]))) ++j;
    if (j > i + 1 && j < text.size() && text[j] == ';') {
      if (auto cp = lookup_entity(text.substr(i + 1, j - i - 1))) {
        append_utf8(out, *cp);
        i = j + 1;
        continue;
      }
    }
    out += c;
    ++i;
  }
  return out;
}

std::optional<Token> Tokenizer::next() {
  const std::size_t n = src_.size();
  while (pos_ < n) {
    if (!raw_text_end_.empty()) {
      const auto close = find_end_tag(src_, pos_, raw_text_end_);
      const std::size_t stop = close == std::string_view::npos ? n : close;
      const bool rcdata = raw_text_end_ == "title" || raw_text_end_ == "textarea";
      raw_text_end_.clear();
      if (stop > pos_) {
        Token t;
        t.kind = rcdata ? TokenKind::Text : TokenKind::RawText;
        t.begin = pos_;
        t.end = stop;
        pos_ = stop;
        return t;
      }
      continue;
    }
    if (src_[pos_] == '<') {
      if (auto tok = scan_markup()) return tok;
    }
    // text run up to the next '<' that is not at pos_
    Token t;
    t.kind = TokenKind::Text;
    t.begin = pos_;
    auto lt = src_.find('<', pos_ + 1);
    t.end = lt == std::string_view::npos ? n : lt;
    pos_ = t.end;
    return t;
  }
  return std::nullopt;
}

std::optional<Token> Tokenizer::scan_markup() {
  const std::size_t n = src_.size();
  const std::size_t start = pos_;
  auto comment_until = [&](std::size_t end) {
    Token t;
    t.kind = TokenKind::Comment;
    t.begin = start;
    t.end = std::min(end, n);
    pos_ = t.end;
    return t;
  };
  auto until_after = [&](std::size_t from, std::string_view terminator) {
    const auto at = src_.find(terminator, from);
    return at == std::string_view::npos ? n : at + terminator.size();
  };

  if (src_.compare(start, 4, "<!--") == 0) {
    // "<!-->" and "<!--->" are complete (empty) comments
    if (src_.compare(start + 4, 1, ">") == 0) return comment_until(start + 5);
    if (src_.compare(start + 4, 2, "->") == 0) return comment_until(start + 6);
    return comment_until(until_after(start + 4, "-->"));
  }
  if (starts_with_ci(src_, start, "<![CDATA[")) return comment_until(until_after(start + 9, "]]>"));
  if (start + 1 < n && (src_[start + 1] == '!' || src_[start + 1] == '?')) {
    return comment_until(until_after(start + 2, ">"));
  }
  if (start + 1 < n && src_[start + 1] == '/') {
    if (start + 2 < n && src_[start + 2] == '>') return comment_until(start + 3);
    if (start + 2 < n && is_alpha(src_[start + 2])) {
      Token t;
      t.kind = TokenKind::EndTag;
      t.begin = start;
      if (!scan_tag(t)) return comment_until(n);
      return t;
    }
    if (start + 2 >= n) return std::nullopt;
    return comment_until(until_after(start + 2, ">"));
  }
  if (start + 1 < n && is_alpha(src_[start + 1])) {
    Token t;
    t.kind = TokenKind::StartTag;
    t.begin = start;
    if (!scan_tag(t)) return comment_until(n);
    if (!t.self_closing && (t.name == "script" || t.name == "style" || t.name == "title" || t.name == "textarea")) {
      raw_text_end_ = t.name;
    }
    return t;
  }
  return std::nullopt;
}

// Reads name and attributes of the tag starting at pos_. False when the tag
// runs off the end of input.
bool Tokenizer::scan_tag(Token& tok) {
  const std::size_t n = src_.size();
  std::size_t i = tok.begin + (tok.kind == TokenKind::EndTag ? 2 : 1);
  const std::size_t name_begin = i;
  while (i < n && !is_space(src_[i]) && src_[i] != '/' && src_[i] != '>') ++i;
  tok.name = lowercase(src_.substr(name_begin, i - name_begin));
  scan_attributes(tok, i);
  if (i >= n) return false;
  tok.end = i + 1;  // past '>'
  pos_ = tok.end;
  return true;
}

void Tokenizer::scan_attributes(Token& tok, std::size_t& i) {
  const std::size_t n = src_.size();
  while (i < n) {
    while (i < n && is_space(src_[i])) ++i;
    if (i >= n) return;
    if (src_[i] == '>') return;
    if (src_[i] == '/') {
      if (i + 1 < n && src_[i + 1] == '>') {
        tok.self_closing = true;
        ++i;
        return;
      }
      ++i;
      continue;
    }
    const std::size_t name_begin = i;
    ++i;  // a leading '=' belongs to the name
    while (i < n && !is_space(src_[i]) && src_[i] != '/' && src_[i] != '>' && src_[i] != '=') ++i;
    Attribute attr;
    attr.name = lowercase(src_.substr(name_begin, i - name_begin));
    while (i < n && is_space(src_[i])) ++i;
    if (i < n && src_[i] == '=') {
      ++i;
      while (i < n && is_space(src_[i])) ++i;
      if (i < n && (src_[i] == '"' || src_[i] == '\'')) {
        const char quote = src_[i];
        const auto close = src_.find(quote, i + 1);
        if (close == std::string_view::npos) {
          i = n;
          return;
        }
        attr.value = decode_entities(src_.substr(i + 1, close - i - 1));
        i = close + 1;
      } else {
        const std::size_t value_begin = i;
        while (i < n && !is_space(src_[i]) && src_[i] != '>') ++i;
        attr.value = decode_entities(src_.substr(value_begin, i - value_begin));
      }
    }
    if (tok.kind == TokenKind::StartTag && !tok.attribute(attr.name)) tok.attributes.push_back(std::move(attr));
  }
}

}  // namespace harvest::html
