#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "harvest/clock.hpp"
#include "harvest/error.hpp"
#include "harvest/link_classifier.hpp"
#include "harvest/target.hpp"

namespace harvest {

struct HtmlDocument {
  std::string raw;       // decoded page text
  std::string base_url;  // canonical, resolves relative links
};

/// The selected element's subtree, start tag through matching end tag.
/// Offsets are byte offsets into HtmlDocument::raw.
struct BoxFragment {
  std::string inner;
  std::size_t start_offset = 0;
  std::size_t end_offset = 0;
  // The end tag was missing; the fragment was closed at the parent's end tag
  // or at end of document.
  bool unclosed = false;
};

class BoxNotFound : public Error {
 public:
  BoxNotFound(std::string tag, int ordinal, std::size_t found);
  std::size_t found_count() const noexcept { return found_; }

 private:
  std::size_t found_;
};

struct AssetLink {
  std::string url;
  LinkKind kind = LinkKind::Other;

  bool operator==(const AssetLink&) const = default;
};

struct ExtractedRecord {
  std::string target_id;
  std::string content_type;
  std::string source_url;
  std::string clean_text;
  std::vector<AssetLink> asset_links;  // document order
  std::int64_t harvested_at = 0;       // UTC seconds
  std::uint64_t content_hash = 0;      // fnv1a64(clean_text)

  bool operator==(const ExtractedRecord&) const = default;
};

/// Throws BoxNotFound when the page has fewer than focus.ordinal matching
/// start tags.
BoxFragment locate_box(const HtmlDocument& doc, const FocusPoint& focus);

/// Tag-free, entity-decoded text with whitespace collapsed to single spaces.
/// Script, style, comment and CDATA content is dropped. Block-level tags act
/// as word boundaries. '<' and '>' never survive, even when they came from
/// &lt; / &gt;, and the output contains no decodable character reference.
std::string strip_tags(std::string_view html);

/// Every <a href> in document order, resolved against doc.base_url.
/// Rejected hrefs are dropped. host_matches_target compares against
/// site_url (the target's start URL); by default against base_url.
std::vector<Anchor> extract_anchors(const HtmlDocument& doc);
std::vector<Anchor> extract_anchors(const HtmlDocument& doc, std::string_view site_url);

/// Locates the focus box, strips it to text and classifies the <a href> and
/// <img src> links inside it by the first content_link_rule they match.
/// Throws BoxNotFound. box_unclosed, when given, receives BoxFragment::unclosed.
ExtractedRecord extract_record(const HtmlDocument& doc, const HarvestTarget& target, TimePoint now,
                               bool* box_unclosed = nullptr);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace harvest
