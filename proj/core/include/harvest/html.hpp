#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harvest::html {

enum class TokenKind {
  Text,
  RawText,  // contents of script/style, never visible text
  StartTag,
  EndTag,
  Comment,  // also CDATA sections, doctype and other markup declarations
};

struct Attribute {
  std::string name;   // lowercase
  std::string value;  // entities decoded
};

struct Token {
  TokenKind kind = TokenKind::Text;
  std::size_t begin = 0;  // byte offsets into the source, [begin, end)
  std::size_t end = 0;
  std::string name;  // lowercase tag name for StartTag/EndTag
  std::vector<Attribute> attributes;
  bool self_closing = false;

  const std::string* attribute(std::string_view attr_name) const;
};

/// Positional tag scanner. Not an HTML5 tree builder: it only classifies
/// byte ranges. Handles quoted attribute values containing '>', comments,
/// CDATA, bogus markup declarations and case-insensitive names. A tag that runs
/// off the end of input is dropped.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view source) : src_(source) {}

  std::optional<Token> next();
  std::string_view source() const { return src_; }

 private:
  std::optional<Token> scan_markup();
  bool scan_tag(Token& tok);
  void scan_attributes(Token& tok, std::size_t& i);

  std::string_view src_;
  std::size_t pos_ = 0;
  std::string raw_text_end_;  // set after <script>/<style> start tags
};

bool is_void_element(std::string_view name);

// Elements whose start and end tags separate words in extracted text.
bool is_block_boundary(std::string_view name);

/// Decodes named (HTML 4 set plus apos) and numeric character references.
/// Unknown names and malformed references are left untouched.
std::string decode_entities(std::string_view text);

}  // namespace harvest::html
