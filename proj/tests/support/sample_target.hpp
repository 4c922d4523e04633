#pragma once

#include "harvest/target.hpp"

namespace harvest::testing {

// A well-formed target used as the starting point of most tests.
inline HarvestTarget sample_target() {
  HarvestTarget t;
  t.id = "t1";
  t.institution_id = "inst-01";
  t.content_type = std::string(content_type::kPublication);
  t.start_url = "http://ex.org/list?page=1";
  t.depth = 2;
  t.paging_criterion = {{"page="}, "", 0, MatchScope::UrlOnly};
  t.focus_point = {"table", 2};
  t.content_link_rules = {{LinkKind::FullText, {{"pdf"}, "", 0, MatchScope::UrlOnly}},
                          {LinkKind::Image, {{"jpg"}, "", 0, MatchScope::UrlOnly}}};
  t.reharvest_period = std::chrono::seconds(3600);
  t.max_pages = 50;
  return t;
}

}  // namespace harvest::testing
