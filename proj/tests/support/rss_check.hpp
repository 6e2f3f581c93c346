#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "wavecaster/timeutil.hpp"

namespace wavecaster::testing {

struct RssItem {
  std::string title;
  std::string description;
  std::string pub_date;
  std::string enclosure_url;
  std::string enclosure_length;
  std::string enclosure_type;
  std::string guid;
  std::string guid_permalink;
};

struct RssDocument {
  std::string title;
  std::string link;
  std::string description;
  std::vector<RssItem> items;
};

/// Parses an RSS 2.0 document with a general-purpose XML reader and checks
/// the structure rules: one <rss version="2.0"> root holding exactly one
/// channel with title, link and description; every item has a title or
/// description; enclosures carry url, length and type; dates are RFC 822.
/// Problems are appended to `errors`.
inline RssDocument parse_rss(const std::string& xml, std::vector<std::string>& errors) {
  namespace pt = boost::property_tree;
  RssDocument doc;
  pt::ptree tree;
  try {
    std::istringstream in(xml);
    pt::read_xml(in, tree);
  } catch (const std::exception& e) {
    errors.push_back(std::string("not well-formed XML: ") + e.what());
    return doc;
  }
  if (tree.size() != 1 || tree.begin()->first != "rss") {
    errors.push_back("root element must be <rss>");
    return doc;
  }
  const auto& rss = tree.get_child("rss");
  if (rss.get<std::string>("<xmlattr>.version", "") != "2.0") errors.push_back("rss version must be 2.0");
  if (rss.count("channel") != 1) {
    errors.push_back("rss must contain exactly one channel");
    return doc;
  }
  const auto& channel = rss.get_child("channel");
  for (const char* required : {"title", "link", "description"}) {
    if (channel.count(required) != 1) errors.push_back(std::string("channel needs one <") + required + ">");
  }
  doc.title = channel.get<std::string>("title", "");
  doc.link = channel.get<std::string>("link", "");
  doc.description = channel.get<std::string>("description", "");
  if (auto d = channel.get_optional<std::string>("lastBuildDate")) {
    try {
      parse_rfc822(*d);
    } catch (const std::exception&) {
      errors.push_back("lastBuildDate is not RFC 822: " + *d);
    }
  }
  for (const auto& [name, node] : channel) {
    if (name != "item") continue;
    RssItem item;
    item.title = node.get<std::string>("title", "");
    item.description = node.get<std::string>("description", "");
    if (!node.count("title") && !node.count("description")) {
      errors.push_back("item needs a title or description");
    }
    item.pub_date = node.get<std::string>("pubDate", "");
    if (node.count("pubDate")) {
      try {
        parse_rfc822(item.pub_date);
      } catch (const std::exception&) {
        errors.push_back("pubDate is not RFC 822: " + item.pub_date);
      }
    }
    if (auto enc = node.get_child_optional("enclosure")) {
      item.enclosure_url = enc->get<std::string>("<xmlattr>.url", "");
      item.enclosure_length = enc->get<std::string>("<xmlattr>.length", "");
      item.enclosure_type = enc->get<std::string>("<xmlattr>.type", "");
      if (item.enclosure_url.empty() || item.enclosure_length.empty() || item.enclosure_type.empty()) {
        errors.push_back("enclosure needs url, length and type");
      }
      if (item.enclosure_length.find_first_not_of("0123456789") != std::string::npos) {
        errors.push_back("enclosure length must be a non-negative integer");
      }
    }
    item.guid = node.get<std::string>("guid", "");
    item.guid_permalink = node.get<std::string>("guid.<xmlattr>.isPermaLink", "");
    doc.items.push_back(std::move(item));
  }
  return doc;
}

}  // namespace wavecaster::testing
