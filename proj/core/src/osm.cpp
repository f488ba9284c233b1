#include <expat.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <unordered_map>

#include "trove/ingest.hpp"

namespace trove {

namespace {

struct RawWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> refs;
  std::map<std::string, std::string> tags;
};

struct RawMember {
  std::string type;
  std::int64_t ref = 0;
  std::string role;
};

struct RawRelation {
  std::int64_t id = 0;
  std::vector<RawMember> members;
  std::map<std::string, std::string> tags;
};

struct OsmDocument {
  std::unordered_map<std::int64_t, std::pair<double, double>> nodes;  // id -> (lat, lon)
  std::vector<RawWay> ways;
  std::vector<RawRelation> relations;

  enum class Open { None, Way, Relation } open = Open::None;
  int depth = 0;
  bool bad_attr = false;
  std::string bad_attr_msg;
};

const char* attr(const XML_Char** atts, const char* name) {
  for (int i = 0; atts[i]; i += 2) {
    if (std::strcmp(atts[i], name) == 0) return atts[i + 1];
  }
  return nullptr;
}

bool parse_i64(const char* s, std::int64_t& out) {
  if (!s) return false;
  const char* end = s + std::strlen(s);
  auto [p, ec] = std::from_chars(s, end, out);
  return ec == std::errc() && p == end;
}

bool parse_f64(const char* s, double& out) {
  if (!s) return false;
  char* end = nullptr;
  out = std::strtod(s, &end);
  return end != s && *end == '\0' && std::isfinite(out);
}

void XMLCALL on_start(void* user, const XML_Char* name, const XML_Char** atts) {
  auto& doc = *static_cast<OsmDocument*>(user);
  ++doc.depth;
  auto fail = [&](const std::string& msg) {
    if (!doc.bad_attr) {
      doc.bad_attr = true;
      doc.bad_attr_msg = msg;
    }
  };
  if (std::strcmp(name, "node") == 0) {
    std::int64_t id;
    double lat, lon;
    if (!parse_i64(attr(atts, "id"), id) || !parse_f64(attr(atts, "lat"), lat) ||
        !parse_f64(attr(atts, "lon"), lon)) {
      // deleted nodes in change files carry no coordinates
      if (attr(atts, "visible") && std::strcmp(attr(atts, "visible"), "false") == 0) return;
      fail("node with missing or malformed id/lat/lon");
      return;
    }
    doc.nodes[id] = {lat, lon};
  } else if (std::strcmp(name, "way") == 0) {
    RawWay w;
    if (!parse_i64(attr(atts, "id"), w.id)) fail("way with malformed id");
    doc.ways.push_back(std::move(w));
    doc.open = OsmDocument::Open::Way;
  } else if (std::strcmp(name, "relation") == 0) {
    RawRelation r;
    if (!parse_i64(attr(atts, "id"), r.id)) fail("relation with malformed id");
    doc.relations.push_back(std::move(r));
    doc.open = OsmDocument::Open::Relation;
  } else if (std::strcmp(name, "nd") == 0 && doc.open == OsmDocument::Open::Way) {
    std::int64_t ref;
    if (!parse_i64(attr(atts, "ref"), ref)) {
      fail("nd with malformed ref");
      return;
    }
    doc.ways.back().refs.push_back(ref);
  } else if (std::strcmp(name, "member") == 0 && doc.open == OsmDocument::Open::Relation) {
    RawMember m;
    const char* type = attr(atts, "type");
    const char* role = attr(atts, "role");
    if (!type || !parse_i64(attr(atts, "ref"), m.ref)) {
      fail("member with malformed type/ref");
      return;
    }
    m.type = type;
    m.role = role ? role : "";
    doc.relations.back().members.push_back(std::move(m));
  } else if (std::strcmp(name, "tag") == 0) {
    const char* k = attr(atts, "k");
    const char* v = attr(atts, "v");
    if (!k || !v) return;
    if (doc.open == OsmDocument::Open::Way) doc.ways.back().tags[k] = v;
    if (doc.open == OsmDocument::Open::Relation) doc.relations.back().tags[k] = v;
  }
}

void XMLCALL on_end(void* user, const XML_Char* name) {
  auto& doc = *static_cast<OsmDocument*>(user);
  --doc.depth;
  if (std::strcmp(name, "way") == 0 || std::strcmp(name, "relation") == 0) {
    doc.open = OsmDocument::Open::None;
  }
}

std::optional<double> leading_number(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || !std::isfinite(v) || v <= 0) return std::nullopt;
  return v;
}

bool is_building(const std::map<std::string, std::string>& tags) {
  auto it = tags.find("building");
  if (it == tags.end() || it->second == "no") return false;
  return !tags.contains("building:part");
}

// Highway values that carry no vehicle traffic and are not road surface.
bool non_vehicular(const std::string& v) {
  static const char* kinds[] = {"footway", "path", "steps", "cycleway", "bridleway",
                                "corridor", "pedestrian", "elevator", "platform", "proposed",
                                "construction", "bus_stop", "street_lamp", "crossing"};
  for (const char* k : kinds) {
    if (v == k) return true;
  }
  return false;
}

SidewalkTag sidewalk_tag(const std::map<std::string, std::string>& tags) {
  auto it = tags.find("sidewalk");
  if (it == tags.end()) return SidewalkTag::Unknown;
  if (it->second == "both") return SidewalkTag::Both;
  if (it->second == "left") return SidewalkTag::Left;
  if (it->second == "right") return SidewalkTag::Right;
  if (it->second == "no" || it->second == "none") return SidewalkTag::None;
  return SidewalkTag::Unknown;
}

struct Resolver {
  const OsmDocument& doc;
  const GeoOrigin& origin;
  const OsmParseOptions& options;
  Warnings& warnings;

  // Projects a way's nodes; nullopt (with warning) or throw on missing refs.
  std::optional<std::vector<Vec2>> project(std::int64_t way_id, const std::vector<std::int64_t>& refs) const {
    std::vector<Vec2> pts;
    pts.reserve(refs.size());
    for (auto r : refs) {
      auto it = doc.nodes.find(r);
      if (it == doc.nodes.end()) {
        const std::string msg = "way " + std::to_string(way_id) + " references missing node " + std::to_string(r);
        if (options.strict_node_refs) throw Error(Errc::UnresolvedNodeRef, msg);
        warnings.push_back({Errc::UnresolvedNodeRef, msg});
        return std::nullopt;
      }
      pts.push_back(geo_to_local(origin, it->second.first, it->second.second));
    }
    return pts;
  }
};

std::optional<Polygon2> make_footprint(std::int64_t id, std::vector<Vec2> ring, Warnings& warnings) {
  try {
    return Polygon2::from_points(std::move(ring));
  } catch (const Error& e) {
    warnings.push_back({Errc::DegenerateFootprint,
                        "building " + std::to_string(id) + " skipped: " + e.what()});
    return std::nullopt;
  }
}

void add_building(OsmExtract& out, std::int64_t id, Polygon2 footprint,
                  const std::map<std::string, std::string>& tags) {
  OsmBuilding b{id, std::move(footprint), std::nullopt, std::nullopt};
  if (auto it = tags.find("building:levels"); it != tags.end()) {
    if (auto v = leading_number(it->second)) b.levels = static_cast<int>(std::lround(*v));
  }
  if (auto it = tags.find("height"); it != tags.end()) b.height = leading_number(it->second);
  out.buildings.push_back(std::move(b));
}

// Joins outer member ways of a multipolygon into closed rings of node refs.
std::vector<std::vector<std::int64_t>> join_rings(std::vector<std::vector<std::int64_t>> parts) {
  std::vector<std::vector<std::int64_t>> rings;
  while (!parts.empty()) {
    auto ring = std::move(parts.front());
    parts.erase(parts.begin());
    bool progress = true;
    while (ring.front() != ring.back() && progress) {
      progress = false;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        auto& p = parts[i];
        if (p.front() == ring.back()) {
          ring.insert(ring.end(), p.begin() + 1, p.end());
        } else if (p.back() == ring.back()) {
          ring.insert(ring.end(), p.rbegin() + 1, p.rend());
        } else {
          continue;
        }
        parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(i));
        progress = true;
        break;
      }
    }
    if (ring.size() >= 4 && ring.front() == ring.back()) rings.push_back(std::move(ring));
  }
  return rings;
}

}  // namespace

OsmExtract parse_osm(std::string_view xml, const GeoOrigin& origin, const OsmParseOptions& options) {
  OsmDocument doc;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate(nullptr), &XML_ParserFree);
  if (!parser) throw Error(Errc::XmlMalformed, "cannot create XML parser");
  XML_SetUserData(parser.get(), &doc);
  XML_SetElementHandler(parser.get(), on_start, on_end);

  // feed in chunks; expat takes an int length
  constexpr std::size_t kChunk = 1 << 24;
  std::size_t pos = 0;
  do {
    const std::size_t n = std::min(kChunk, xml.size() - pos);
    const bool last = pos + n == xml.size();
    if (XML_Parse(parser.get(), xml.data() + pos, static_cast<int>(n), last) == XML_STATUS_ERROR) {
      throw Error(Errc::XmlMalformed,
                  std::string(XML_ErrorString(XML_GetErrorCode(parser.get()))) + " at line " +
                      std::to_string(XML_GetCurrentLineNumber(parser.get())));
    }
    pos += n;
  } while (pos < xml.size());
  if (doc.bad_attr) throw Error(Errc::XmlMalformed, doc.bad_attr_msg);

  OsmExtract out;
  Resolver res{doc, origin, options, out.warnings};
  std::unordered_map<std::int64_t, const RawWay*> way_index;
  for (const auto& w : doc.ways) way_index[w.id] = &w;

  for (const auto& w : doc.ways) {
    if (is_building(w.tags)) {
      if (w.refs.size() < 4 || w.refs.front() != w.refs.back()) {
        out.warnings.push_back({Errc::DegenerateFootprint,
                                "building " + std::to_string(w.id) + " skipped: way is not closed"});
        continue;
      }
      auto pts = res.project(w.id, w.refs);
      if (!pts) continue;
      if (auto fp = make_footprint(w.id, std::move(*pts), out.warnings)) add_building(out, w.id, std::move(*fp), w.tags);
      continue;
    }
    auto hw = w.tags.find("highway");
    if (hw == w.tags.end()) continue;
    const bool sidewalk = hw->second == "footway" && w.tags.contains("footway") &&
                          w.tags.at("footway") == "sidewalk";
    if (!sidewalk && non_vehicular(hw->second)) continue;
    if (w.refs.size() < 2) {
      out.warnings.push_back({Errc::DegenerateInput, "highway " + std::to_string(w.id) + " has < 2 nodes"});
      continue;
    }
    auto pts = res.project(w.id, w.refs);
    if (!pts) continue;
    if (sidewalk) {
      out.sidewalks.push_back(std::move(*pts));
      continue;
    }
    OsmRoad r;
    r.id = w.id;
    r.centerline = std::move(*pts);
    r.highway_class = hw->second;
    if (auto it = w.tags.find("width"); it != w.tags.end()) r.tagged_width = leading_number(it->second);
    r.sidewalk = sidewalk_tag(w.tags);
    out.roads.push_back(std::move(r));
  }

  for (const auto& rel : doc.relations) {
    auto type = rel.tags.find("type");
    if (type == rel.tags.end() || type->second != "multipolygon" || !is_building(rel.tags)) continue;
    std::vector<std::vector<std::int64_t>> parts;
    bool complete = true;
    for (const auto& m : rel.members) {
      if (m.type != "way" || (m.role != "outer" && !m.role.empty())) continue;
      auto it = way_index.find(m.ref);
      if (it == way_index.end() || it->second->refs.size() < 2) {
        complete = false;
        break;
      }
      parts.push_back(it->second->refs);
    }
    if (!complete || parts.empty()) {
      out.warnings.push_back({Errc::DegenerateFootprint,
                              "multipolygon " + std::to_string(rel.id) + " skipped: incomplete outer ring"});
      continue;
    }
    for (auto& ring : join_rings(std::move(parts))) {
      auto pts = res.project(rel.id, ring);
      if (!pts) continue;
      if (auto fp = make_footprint(rel.id, std::move(*pts), out.warnings)) add_building(out, rel.id, std::move(*fp), rel.tags);
    }
  }
  return out;
}

}  // namespace trove
