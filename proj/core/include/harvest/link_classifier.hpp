#pragma once

#include <string>

#include "harvest/target.hpp"

namespace harvest {

struct Anchor {
  std::string href;  // canonical
  std::string text;  // whitespace-collapsed inner text
  bool host_matches_target = false;

  bool operator==(const Anchor&) const = default;
};

enum class LinkClass { Paging, Title, Ignore };

std::string_view to_string(LinkClass c);

/// True iff the keyword test and the query-structure test both pass.
bool match_criterion(const Anchor& anchor, const Criterion& criterion);

/// Paging links stay at page_depth, Title links descend to page_depth + 1.
/// Pages at the target depth are final: all their links are Ignore.
/// Paging wins when both the paging criterion and the title rule match.
/// Without a title_criterion, any same-host link is a title link.
LinkClass classify_link(const Anchor& anchor, int page_depth, const HarvestTarget& target);

}  // namespace harvest
