#pragma once

// Readers and writers for every on-disk format: vote and weight files, graph
// and point datasets, ASCII-grid rasters, zone polygons, score exports, the
// feature catalog / profile documents and the binary feature-matrix stage file.
//
// Delimited exports carry full precision (%.17g) so they round-trip; GeoJSON
// and JSON documents meant for the wire carry 9 significant digits.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "robotability/ahp.hpp"
#include "robotability/error.hpp"
#include "robotability/features.hpp"
#include "robotability/geometry.hpp"
#include "robotability/scoring.hpp"
#include "robotability/sidewalk_graph.hpp"

namespace robotability::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- numbers

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// The double nearest to v printed with 9 significant digits; JSON then emits
/// it in at most 9 digits.
inline double round9(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format9(v).c_str(), nullptr);
}

inline json number9(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return round9(*v);
}

// ---------------------------------------------------------------- files

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------- delimited text

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

/// Lines without trailing CR; blank lines and '#' comments are reported as
/// skipped to the callback via an empty optional.
struct LineReader {
  std::istringstream in;
  std::size_t line_no = 0;

  explicit LineReader(std::string text) : in(std::move(text)) {}

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return true;
    }
    return false;
  }
};

inline double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ValidationError(where + ": '" + s + "' is not a number");
  return v;
}

// ---------------------------------------------------------------- votes

inline std::vector<PairwiseVote> parse_votes(std::string text, const std::string& name = "votes") {
  LineReader r(std::move(text));
  std::string line;
  if (!r.next(line)) throw ValidationError(name + ": empty vote file");
  if (split_csv(line) != std::vector<std::string>{"rater_id", "feature_a", "feature_b", "chosen"})
    throw ValidationError(name + ":" + std::to_string(r.line_no) +
                          ": expected header rater_id,feature_a,feature_b,chosen");
  std::vector<PairwiseVote> votes;
  while (r.next(line)) {
    auto f = split_csv(line);
    if (f.size() != 4)
      throw ValidationError(name + ":" + std::to_string(r.line_no) + ": expected 4 fields, got " +
                            std::to_string(f.size()));
    PairwiseVote v{f[0], f[1], f[2], f[3]};
    if (v.feature_a == v.feature_b)
      throw ValidationError(name + ":" + std::to_string(r.line_no) + ": feature compared with itself");
    if (v.chosen != v.feature_a && v.chosen != v.feature_b)
      throw ValidationError(name + ":" + std::to_string(r.line_no) + ": chosen feature '" + v.chosen +
                            "' is not one of the pair");
    votes.push_back(std::move(v));
  }
  return votes;
}

inline std::vector<PairwiseVote> read_votes(const fs::path& path) {
  return parse_votes(read_text(path), path.string());
}

inline std::string format_votes(std::span<const PairwiseVote> votes) {
  std::string out = "rater_id,feature_a,feature_b,chosen\n";
  for (const auto& v : votes)
    out += v.rater_id + "," + v.feature_a + "," + v.feature_b + "," + v.chosen + "\n";
  return out;
}

// ---------------------------------------------------------------- weights

inline std::string format_weights(const WeightSet& w, std::optional<double> smoothing = std::nullopt) {
  std::string out = "# robotability weight set\n# source: " + w.source() + "\n";
  if (smoothing) out += "# smoothing: " + format_full(*smoothing) + "\n";
  out += "feature_id,weight\n";
  for (const auto& [id, v] : w.entries()) out += id + "," + format_full(v) + "\n";
  return out;
}

struct WeightFile {
  WeightSet weights;
  std::optional<double> smoothing;
};

inline WeightFile parse_weights(const std::string& text, const std::string& name = "weights") {
  std::istringstream in(text);
  std::string line, source = "file";
  std::optional<double> smoothing;
  std::vector<std::pair<FeatureId, double>> entries;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (line.front() == '#') {
      auto body = std::string_view(line).substr(1);
      while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
      if (body.starts_with("source:")) {
        source = std::string(body.substr(7));
        while (!source.empty() && source.front() == ' ') source.erase(0, 1);
      } else if (body.starts_with("smoothing:")) {
        std::string s(body.substr(10));
        while (!s.empty() && s.front() == ' ') s.erase(0, 1);
        smoothing = parse_double(s, where);
      }
      continue;
    }
    auto f = split_csv(line);
    if (!header) {
      if (f != std::vector<std::string>{"feature_id", "weight"})
        throw ValidationError(where + ": expected header feature_id,weight");
      header = true;
      continue;
    }
    if (f.size() != 2) throw ValidationError(where + ": expected 2 fields");
    entries.emplace_back(f[0], parse_double(f[1], where));
  }
  try {
    return {WeightSet(std::move(entries), source), smoothing};
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  }
}

inline WeightFile read_weights(const fs::path& path) {
  return parse_weights(read_text(path), path.string());
}

inline json weights_to_json(const WeightSet& w) {
  json entries = json::array();
  for (const auto& [id, v] : w.entries()) entries.push_back({{"feature_id", id}, {"weight", round9(v)}});
  return {{"source", w.source()}, {"weights", entries}};
}

inline json transitivity_to_json(const TransitivityReport& r) {
  json intra = json::object();
  for (const auto& [rater, n] : r.intra_rater) intra[rater] = n;
  return {{"intra_rater", intra},
          {"inter_rater_violations", r.inter_rater_violations},
          {"triples_evaluated", r.triples_evaluated},
          {"violation_fraction", round9(r.violation_fraction)}};
}

// ---------------------------------------------------------------- graph

namespace detail {

inline std::string id_string(const json& v, const std::string& fallback) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_full(v.get<double>());
  return fallback;
}

inline Vec2 coord(const json& c, const std::string& where) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
    throw ValidationError(where + ": malformed coordinate");
  return {c[0].get<double>(), c[1].get<double>()};
}

inline const json& features_of(const json& doc, const std::string& name) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features"))
    throw ValidationError(name + ": expected a GeoJSON FeatureCollection");
  return doc["features"];
}

}  // namespace detail

/// LineString features become edges. Nodes come from `node_a`/`node_b`
/// properties when present, otherwise from endpoints snapped on a 1e-6 m grid.
inline SidewalkGraph parse_graph_geojson(const json& doc, const std::string& name = "graph") {
  std::vector<SidewalkNode> nodes;
  std::unordered_map<std::string, std::size_t> by_id;
  std::map<std::pair<long long, long long>, std::string> by_coord;
  auto node_for = [&](Vec2 p, const json& props, const char* key) {
    std::string id;
    if (props.contains(key)) {
      id = detail::id_string(props[key], "");
    } else {
      const auto k = std::make_pair(std::llround(p.x * 1e6), std::llround(p.y * 1e6));
      auto it = by_coord.find(k);
      if (it != by_coord.end()) return it->second;
      id = "n" + std::to_string(by_coord.size());
      by_coord.emplace(k, id);
    }
    if (!by_id.count(id)) {
      by_id.emplace(id, nodes.size());
      nodes.push_back({id, p});
    }
    return id;
  };
  std::vector<EdgeInput> edges;
  const auto& feats = detail::features_of(doc, name);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i];
    const std::string where = name + ": feature " + std::to_string(i);
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "LineString")
      throw ValidationError(where + ": expected LineString geometry");
    const json props = f.value("properties", json::object());
    EdgeInput e;
    e.id = detail::id_string(props.value("edge_id", json()), "e" + std::to_string(i));
    for (const auto& c : geom.at("coordinates")) e.polyline.push_back(detail::coord(c, where));
    if (e.polyline.size() < 2) throw ValidationError(where + ": LineString needs 2 coordinates");
    e.node_a = node_for(e.polyline.front(), props, "node_a");
    e.node_b = node_for(e.polyline.back(), props, "node_b");
    for (const auto& [k, v] : props.items())
      if (v.is_number() && k != "edge_id" && k != "node_a" && k != "node_b")
        e.attributes[k] = v.get<double>();
    if (props.contains("length") && props["length"].is_number()) {
      e.declared_length = props["length"].get<double>();
      e.attributes.erase("length");
    }
    edges.push_back(std::move(e));
  }
  return build_graph(std::move(nodes), std::move(edges));
}

inline SidewalkGraph read_graph_geojson(const fs::path& path) {
  return parse_graph_geojson(read_json(path), path.string());
}

/// Node file `node_id,x,y`; edge file `edge_id,node_a,node_b[,numeric attrs...]`.
inline SidewalkGraph read_graph_csv(const fs::path& nodes_path, const fs::path& edges_path) {
  std::vector<SidewalkNode> nodes;
  {
    LineReader r(read_text(nodes_path));
    std::string line;
    if (!r.next(line) || split_csv(line) != std::vector<std::string>{"node_id", "x", "y"})
      throw ValidationError(nodes_path.string() + ": expected header node_id,x,y");
    while (r.next(line)) {
      auto f = split_csv(line);
      const std::string where = nodes_path.string() + ":" + std::to_string(r.line_no);
      if (f.size() != 3) throw ValidationError(where + ": expected 3 fields");
      nodes.push_back({f[0], {parse_double(f[1], where), parse_double(f[2], where)}});
    }
  }
  std::vector<EdgeInput> edges;
  {
    LineReader r(read_text(edges_path));
    std::string line;
    if (!r.next(line)) throw ValidationError(edges_path.string() + ": empty edge file");
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "edge_id" || header[1] != "node_a" || header[2] != "node_b")
      throw ValidationError(edges_path.string() + ": expected header edge_id,node_a,node_b[,...]");
    while (r.next(line)) {
      auto f = split_csv(line);
      const std::string where = edges_path.string() + ":" + std::to_string(r.line_no);
      if (f.size() != header.size())
        throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields");
      EdgeInput e{f[0], f[1], f[2], {}, std::nullopt, {}};
      for (std::size_t c = 3; c < f.size(); ++c)
        if (!f[c].empty()) {
          if (header[c] == "length")
            e.declared_length = parse_double(f[c], where);
          else
            e.attributes[header[c]] = parse_double(f[c], where);
        }
      edges.push_back(std::move(e));
    }
  }
  return build_graph(std::move(nodes), std::move(edges));
}

/// Dispatches on extension: .geojson/.json, otherwise a `nodes.csv`/`edges.csv` directory.
inline SidewalkGraph read_graph(const fs::path& path) {
  if (fs::is_directory(path)) return read_graph_csv(path / "nodes.csv", path / "edges.csv");
  return read_graph_geojson(path);
}

inline json graph_to_geojson(const SidewalkGraph& g) {
  json feats = json::array();
  for (const auto& e : g.edges()) {
    json coords = json::array();
    for (const auto& p : e.polyline) coords.push_back({p.x, p.y});
    json props = {{"edge_id", e.id}, {"node_a", g.nodes()[e.a].id}, {"node_b", g.nodes()[e.b].id}};
    for (const auto& [k, v] : e.attributes) props[k] = v;
    feats.push_back({{"type", "Feature"},
                     {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                     {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", feats}};
}

inline std::string format_points_csv(const SidewalkGraph& graph, const SegmentizedGraph& s) {
  std::string out = "point_id,x,y,edge_id,offset\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& p = s.points()[i];
    out += std::to_string(i) + "," + format_full(p.pos.x) + "," + format_full(p.pos.y) + "," +
           graph.edges()[p.edge].id + "," + format_full(p.offset) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- point datasets

/// Header must contain x and y; a `class` column becomes labels, every other
/// column a numeric channel in header order.
inline PointDataset parse_point_csv(std::string text, const std::string& name = "points") {
  LineReader r(std::move(text));
  std::string line;
  if (!r.next(line)) throw ValidationError(name + ": empty point file");
  const auto header = split_csv(line);
  std::optional<std::size_t> xi, yi, ci;
  std::vector<std::size_t> chan;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "x") xi = i;
    else if (header[i] == "y") yi = i;
    else if (header[i] == "class") ci = i;
    else chan.push_back(i);
  }
  if (!xi || !yi) throw ValidationError(name + ": header needs x and y columns");
  PointDataset ds;
  ds.channels.resize(chan.size());
  while (r.next(line)) {
    auto f = split_csv(line);
    const std::string where = name + ":" + std::to_string(r.line_no);
    if (f.size() != header.size())
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields");
    ds.positions.push_back({parse_double(f[*xi], where), parse_double(f[*yi], where)});
    if (ci) ds.classes.push_back(f[*ci]);
    for (std::size_t c = 0; c < chan.size(); ++c) ds.channels[c].push_back(parse_double(f[chan[c]], where));
  }
  return ds;
}

/// Point features; a string `class` property becomes the label, numeric
/// properties become channels in key order.
inline PointDataset parse_point_geojson(const json& doc, const std::string& name = "points") {
  PointDataset ds;
  std::vector<std::string> keys;
  const auto& feats = detail::features_of(doc, name);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i];
    const std::string where = name + ": feature " + std::to_string(i);
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Point") throw ValidationError(where + ": expected Point geometry");
    ds.positions.push_back(detail::coord(geom.at("coordinates"), where));
    const json props = f.value("properties", json::object());
    if (i == 0)
      for (const auto& [k, v] : props.items())
        if (v.is_number()) keys.push_back(k);
    if (props.contains("class")) ds.classes.push_back(props["class"].get<std::string>());
    if (ds.channels.size() < keys.size()) ds.channels.resize(keys.size());
    for (std::size_t c = 0; c < keys.size(); ++c) {
      if (!props.contains(keys[c]) || !props[keys[c]].is_number())
        throw ValidationError(where + ": missing numeric property '" + keys[c] + "'");
      ds.channels[c].push_back(props[keys[c]].get<double>());
    }
  }
  if (!ds.classes.empty() && ds.classes.size() != ds.positions.size())
    throw ValidationError(name + ": class property must be on every feature or none");
  return ds;
}

inline PointDataset read_point_dataset(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".geojson" || ext == ".json") return parse_point_geojson(read_json(path), path.string());
  return parse_point_csv(read_text(path), path.string());
}

inline std::string format_point_csv(const PointDataset& ds, const std::vector<std::string>& channel_names = {}) {
  std::string out = "x,y";
  if (!ds.classes.empty()) out += ",class";
  for (std::size_t c = 0; c < ds.channels.size(); ++c)
    out += "," + (c < channel_names.size() ? channel_names[c] : "v" + std::to_string(c));
  out += "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += format_full(ds.positions[i].x) + "," + format_full(ds.positions[i].y);
    if (!ds.classes.empty()) out += "," + ds.classes[i];
    for (const auto& ch : ds.channels) out += "," + format_full(ch[i]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- raster

/// ESRI ASCII grid (ncols, nrows, xllcorner|xllcenter, yllcorner|yllcenter, cellsize, NODATA_value).
inline ElevationSampler parse_ascii_grid(const std::string& text, const std::string& name = "raster",
                                         ElevationSampler::OutOfBounds policy =
                                             ElevationSampler::OutOfBounds::Clamp) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string t; in >> t;) tokens.push_back(std::move(t));
  std::map<std::string, double> header;
  bool center = false;
  std::size_t pos = 0;
  while (pos < tokens.size() && std::isalpha(static_cast<unsigned char>(tokens[pos].front()))) {
    std::string lower;
    for (char c : tokens[pos]) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (pos + 1 >= tokens.size()) throw ValidationError(name + ": header field '" + tokens[pos] + "' has no value");
    if (lower == "xllcenter" || lower == "yllcenter") center = true;
    header[lower] = parse_double(tokens[pos + 1], name + ": header '" + tokens[pos] + "'");
    pos += 2;
  }
  auto need = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (auto it = header.find(k); it != header.end()) return it->second;
    throw ValidationError(name + ": missing header field '" + std::string(*keys.begin()) + "'");
  };
  const auto cols = static_cast<std::size_t>(need({"ncols"}));
  const auto rows = static_cast<std::size_t>(need({"nrows"}));
  const double cell = need({"cellsize"});
  double x0 = need({"xllcorner", "xllcenter"});
  double y0 = need({"yllcorner", "yllcenter"});
  if (center) {
    x0 -= cell / 2;
    y0 -= cell / 2;
  }
  std::optional<double> nodata;
  if (auto it = header.find("nodata_value"); it != header.end()) nodata = it->second;
  std::vector<double> values;
  values.reserve(cols * rows);
  for (; pos < tokens.size(); ++pos) values.push_back(parse_double(tokens[pos], name + ": grid value"));
  if (values.size() != cols * rows)
    throw ValidationError(name + ": expected " + std::to_string(cols * rows) + " values, got " +
                          std::to_string(values.size()));
  return ElevationSampler(x0, y0, cell, cols, rows, std::move(values), nodata, policy);
}

inline ElevationSampler read_ascii_grid(const fs::path& path) {
  return parse_ascii_grid(read_text(path), path.string());
}

inline std::string format_ascii_grid(const ElevationSampler& s, double nodata = -9999.0) {
  std::string out = "ncols " + std::to_string(s.cols()) + "\nnrows " + std::to_string(s.rows()) +
                    "\nxllcorner " + format_full(s.x_origin()) + "\nyllcorner " +
                    format_full(s.y_origin()) + "\ncellsize " + format_full(s.cell_size()) +
                    "\nNODATA_value " + format_full(nodata) + "\n";
  for (std::size_t r = 0; r < s.rows(); ++r) {
    for (std::size_t c = 0; c < s.cols(); ++c) {
      const double v = s.values()[r * s.cols() + c];
      out += (c ? " " : "") + format_full(std::isnan(v) ? nodata : v);
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- zones

namespace detail {

inline Ring ring_from(const json& coords, const std::string& where) {
  Ring r;
  for (const auto& c : coords) r.push_back(coord(c, where));
  return r;
}

inline json ring_to_json(const Ring& r) {
  json out = json::array();
  for (const auto& p : r) out.push_back({p.x, p.y});
  if (!r.empty() && !(r.front() == r.back())) out.push_back({r.front().x, r.front().y});
  return out;
}

}  // namespace detail

inline std::vector<Zone> parse_zones_geojson(const json& doc, const std::string& name = "zones") {
  std::vector<Zone> zones;
  const auto& feats = detail::features_of(doc, name);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i];
    const std::string where = name + ": feature " + std::to_string(i);
    const auto& geom = f.at("geometry");
    if (geom.value("type", "") != "Polygon") throw ValidationError(where + ": expected Polygon geometry");
    const json props = f.value("properties", json::object());
    Zone z;
    z.id = detail::id_string(props.value("zone_id", json()), "z" + std::to_string(i));
    const auto& rings = geom.at("coordinates");
    if (rings.empty()) throw ValidationError(where + ": polygon has no rings");
    z.polygon.outer = detail::ring_from(rings[0], where);
    for (std::size_t k = 1; k < rings.size(); ++k) z.polygon.holes.push_back(detail::ring_from(rings[k], where));
    zones.push_back(std::move(z));
  }
  return zones;
}

inline std::vector<Zone> read_zones(const fs::path& path) {
  return parse_zones_geojson(read_json(path), path.string());
}

inline json zones_to_geojson(const std::vector<Zone>& zones) {
  json feats = json::array();
  for (const auto& z : zones) {
    json rings = json::array({detail::ring_to_json(z.polygon.outer)});
    for (const auto& h : z.polygon.holes) rings.push_back(detail::ring_to_json(h));
    feats.push_back({{"type", "Feature"},
                     {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}},
                     {"properties", {{"zone_id", z.id}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", feats}};
}

inline json zone_aggregates_to_geojson(const std::vector<ZoneAggregate>& aggs) {
  json feats = json::array();
  for (const auto& z : aggs) {
    json rings = json::array({detail::ring_to_json(z.polygon.outer)});
    for (const auto& h : z.polygon.holes) rings.push_back(detail::ring_to_json(h));
    feats.push_back({{"type", "Feature"},
                     {"geometry", {{"type", "Polygon"}, {"coordinates", rings}}},
                     {"properties",
                      {{"zone_id", z.zone_id},
                       {"mean_score", number9(z.mean_score)},
                       {"point_count", z.point_count},
                       {"percentile_rank", number9(z.percentile_rank)}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", feats}};
}

inline std::vector<ZoneAggregate> parse_zone_aggregates(const json& doc, const std::string& name = "zones") {
  std::vector<ZoneAggregate> out;
  const auto zones = parse_zones_geojson(doc, name);
  const auto& feats = doc["features"];
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const json props = feats[i].value("properties", json::object());
    ZoneAggregate a;
    a.zone_id = zones[i].id;
    a.polygon = zones[i].polygon;
    if (props.contains("mean_score") && props["mean_score"].is_number())
      a.mean_score = props["mean_score"].get<double>();
    a.point_count = props.value("point_count", std::size_t{0});
    if (props.contains("percentile_rank") && props["percentile_rank"].is_number())
      a.percentile_rank = props["percentile_rank"].get<double>();
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------- scores

inline std::string format_scores_csv(const ScoreField& field, std::span<const Vec2> positions) {
  std::string out = "point_id,x,y,score,coverage\n";
  out.reserve(field.size() * 64);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Vec2 p = positions[field.point_ids[i]];
    out += std::to_string(field.point_ids[i]) + "," + format_full(p.x) + "," + format_full(p.y) + ",";
    if (field.has_score(i)) out += format_full(field.scores[i]);
    out += "," + format_full(field.coverage[i]) + "\n";
  }
  return out;
}

struct ScoreRow {
  PointId point_id;
  Vec2 pos;
  std::optional<double> score;
  double coverage;
};

inline std::vector<ScoreRow> parse_scores_csv(std::string text, const std::string& name = "scores") {
  LineReader r(std::move(text));
  std::string line;
  if (!r.next(line) ||
      split_csv(line) != std::vector<std::string>{"point_id", "x", "y", "score", "coverage"})
    throw ValidationError(name + ": expected header point_id,x,y,score,coverage");
  std::vector<ScoreRow> rows;
  while (r.next(line)) {
    auto f = split_csv(line);
    const std::string where = name + ":" + std::to_string(r.line_no);
    if (f.size() != 5) throw ValidationError(where + ": expected 5 fields");
    ScoreRow row;
    row.point_id = static_cast<PointId>(parse_double(f[0], where));
    row.pos = {parse_double(f[1], where), parse_double(f[2], where)};
    if (!f[3].empty()) row.score = parse_double(f[3], where);
    row.coverage = parse_double(f[4], where);
    rows.push_back(row);
  }
  return rows;
}

inline ScoreField score_field_from_rows(const std::vector<ScoreRow>& rows, std::string profile = {}) {
  ScoreField f;
  f.profile = std::move(profile);
  for (const auto& r : rows) {
    f.point_ids.push_back(r.point_id);
    f.scores.push_back(r.score ? *r.score : kMissing);
    f.coverage.push_back(r.coverage);
  }
  return f;
}

/// One GeoJSON Point feature for field row `row`.
inline std::string score_feature(const ScoreField& field, std::span<const Vec2> positions,
                                 const std::vector<std::optional<double>>* percentile, std::size_t row) {
  const Vec2 p = positions[field.point_ids[row]];
  json props = {{"point_id", field.point_ids[row]},
                {"score", field.has_score(row) ? number9(field.scores[row]) : json(nullptr)},
                {"coverage", round9(field.coverage[row])}};
  if (percentile) props["percentile"] = number9((*percentile)[row]);
  const json coords = {round9(p.x), round9(p.y)};
  return "{\"type\":\"Feature\",\"geometry\":{\"type\":\"Point\",\"coordinates\":" + coords.dump() +
         "},\"properties\":" + props.dump() + "}";
}

/// Point features for the given rows (all rows when `rows` is null), written
/// without building a DOM. `extra` members are appended to the collection.
inline std::string format_scores_geojson(const ScoreField& field, std::span<const Vec2> positions,
                                         const std::vector<std::optional<double>>* percentile = nullptr,
                                         const std::vector<std::size_t>* rows = nullptr,
                                         const json& extra = json::object()) {
  std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
  const std::size_t n = rows ? rows->size() : field.size();
  out.reserve(n * 160);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ",";
    out += score_feature(field, positions, percentile, rows ? (*rows)[i] : i);
  }
  out += "]";
  for (const auto& [k, v] : extra.items()) out += "," + json(k).dump() + ":" + v.dump();
  out += "}";
  return out;
}

// ---------------------------------------------------------------- catalog & profile

inline json feature_def_to_json(const FeatureDef& f) {
  json j = {{"id", f.id},
            {"display_name", f.display_name},
            {"polarity", f.polarity},
            {"extractor", std::string(to_string(f.extractor))}};
  if (!f.params.empty()) j["params"] = f.params;
  if (!f.class_weights.empty()) j["class_weights"] = f.class_weights;
  if (!f.sources.empty()) j["sources"] = f.sources;
  if (!f.attribute.empty()) j["attribute"] = f.attribute;
  return j;
}

inline json catalog_to_json(const FeatureCatalog& c) {
  json feats = json::array();
  for (const auto& f : c.features) feats.push_back(feature_def_to_json(f));
  json excl = json::array();
  for (const auto& [id, why] : c.excluded) excl.push_back({{"id", id}, {"reason", why}});
  return {{"features", feats}, {"excluded", excl}};
}

inline FeatureCatalog catalog_from_json(const json& j, const std::string& name = "catalog") {
  FeatureCatalog c;
  try {
    for (const auto& f : j.at("features")) {
      FeatureDef d;
      d.id = f.at("id").get<std::string>();
      d.display_name = f.value("display_name", d.id);
      d.polarity = f.at("polarity").get<int>();
      d.extractor = parse_extractor_kind(f.at("extractor").get<std::string>());
      if (f.contains("params")) d.params = f["params"].get<std::map<std::string, double>>();
      if (f.contains("class_weights"))
        d.class_weights = f["class_weights"].get<std::map<std::string, double>>();
      if (f.contains("sources")) d.sources = f["sources"].get<std::vector<std::string>>();
      d.attribute = f.value("attribute", "");
      c.features.push_back(std::move(d));
    }
    if (j.contains("excluded"))
      for (const auto& e : j["excluded"])
        c.excluded.emplace_back(e.at("id").get<std::string>(), e.value("reason", ""));
  } catch (const json::exception& e) {
    throw ValidationError(name + ": " + e.what());
  }
  c.validate();
  return c;
}

inline FeatureCatalog read_catalog(const fs::path& path) {
  return catalog_from_json(read_json(path), path.string());
}

inline json profile_to_json(const RobotProfile& p) {
  json pol = json::object();
  for (const auto& [id, v] : p.polarity_overrides) pol[id] = v;
  json params = json::object();
  for (const auto& [id, m] : p.extractor_param_overrides) params[id] = m;
  return {{"name", p.name},
          {"included_features", p.included_features},
          {"polarity_overrides", pol},
          {"extractor_param_overrides", params},
          {"weight_source", p.weight_source == RobotProfile::WeightSource::Matrix ? "matrix" : "fixture"}};
}

/// Field-level problems are collected into one ValidationError message.
inline RobotProfile profile_from_json(const json& j) {
  std::vector<std::string> problems;
  RobotProfile p;
  if (!j.is_object()) throw ValidationError("profile: expected a JSON object");
  if (j.contains("name")) {
    if (j["name"].is_string()) p.name = j["name"].get<std::string>();
    else problems.push_back("name: must be a string");
  }
  if (!j.contains("included_features") || !j["included_features"].is_array()) {
    problems.push_back("included_features: required array of feature ids");
  } else {
    for (const auto& v : j["included_features"]) {
      if (v.is_string()) p.included_features.push_back(v.get<std::string>());
      else problems.push_back("included_features: entries must be strings");
    }
  }
  if (j.contains("polarity_overrides")) {
    if (!j["polarity_overrides"].is_object()) {
      problems.push_back("polarity_overrides: must be an object");
    } else {
      for (const auto& [id, v] : j["polarity_overrides"].items()) {
        if (v.is_number_integer() && (v.get<int>() == 1 || v.get<int>() == -1))
          p.polarity_overrides[id] = v.get<int>();
        else
          problems.push_back("polarity_overrides." + id + ": must be +1 or -1");
      }
    }
  }
  if (j.contains("extractor_param_overrides")) {
    if (!j["extractor_param_overrides"].is_object()) {
      problems.push_back("extractor_param_overrides: must be an object");
    } else {
      for (const auto& [id, m] : j["extractor_param_overrides"].items()) {
        if (!m.is_object()) {
          problems.push_back("extractor_param_overrides." + id + ": must be an object");
          continue;
        }
        for (const auto& [k, v] : m.items()) {
          if (v.is_number()) p.extractor_param_overrides[id][k] = v.get<double>();
          else problems.push_back("extractor_param_overrides." + id + "." + k + ": must be a number");
        }
      }
    }
  }
  if (j.contains("weight_source")) {
    const auto ws = j["weight_source"].is_string() ? j["weight_source"].get<std::string>() : "";
    if (ws == "matrix") p.weight_source = RobotProfile::WeightSource::Matrix;
    else if (ws == "fixture") p.weight_source = RobotProfile::WeightSource::Fixture;
    else problems.push_back("weight_source: must be \"matrix\" or \"fixture\"");
  }
  if (!problems.empty()) {
    std::string msg = "invalid profile:";
    for (const auto& s : problems) msg += "\n  " + s;
    throw ValidationError(msg);
  }
  return p;
}

// ---------------------------------------------------------------- feature matrix stage file

inline constexpr char kMatrixMagic[8] = {'R', 'B', 'F', 'M', 'A', 'T', '0', '1'};

inline void write_feature_matrix(const fs::path& path, const FeatureMatrix& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_str = [&](const std::string& s) {
    put_u64(s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };
  out.write(kMatrixMagic, sizeof kMatrixMagic);
  put_u64(m.rows());
  put_u64(m.cols());
  for (const auto& id : m.feature_ids) put_str(id);
  for (const auto& s : m.raw_stats) {
    out.write(reinterpret_cast<const char*>(&s.min), sizeof s.min);
    out.write(reinterpret_cast<const char*>(&s.max), sizeof s.max);
    const char flags = static_cast<char>((s.normalized ? 1 : 0) | (s.degenerate ? 2 : 0));
    out.put(flags);
  }
  out.write(reinterpret_cast<const char*>(m.point_ids.data()),
            static_cast<std::streamsize>(m.point_ids.size() * sizeof(PointId)));
  out.write(reinterpret_cast<const char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(m.missing.data()), static_cast<std::streamsize>(m.missing.size()));
  put_u64(m.warnings.size());
  for (const auto& w : m.warnings) put_str(w);
}

inline FeatureMatrix read_feature_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  auto fail = [&] { return DataError("'" + path.string() + "' is not a valid feature matrix file"); };
  auto get_u64 = [&] {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw fail();
    return v;
  };
  auto get_str = [&] {
    const auto n = get_u64();
    if (n > (1u << 20)) throw fail();
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw fail();
    return s;
  };
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMatrixMagic, 8) != 0) throw fail();
  FeatureMatrix m;
  const auto rows = get_u64();
  const auto cols = get_u64();
  // Reject headers that promise more data than the file holds.
  const auto size = static_cast<std::uint64_t>(fs::file_size(path));
  if (cols > size || rows > size || rows * (sizeof(PointId) + cols * (sizeof(double) + 1)) > size) throw fail();
  for (std::uint64_t c = 0; c < cols; ++c) m.feature_ids.push_back(get_str());
  for (std::uint64_t c = 0; c < cols; ++c) {
    RawStats s;
    char flags = 0;
    if (!in.read(reinterpret_cast<char*>(&s.min), sizeof s.min) ||
        !in.read(reinterpret_cast<char*>(&s.max), sizeof s.max) || !in.get(flags))
      throw fail();
    s.normalized = (flags & 1) != 0;
    s.degenerate = (flags & 2) != 0;
    m.raw_stats.push_back(s);
  }
  m.point_ids.resize(rows);
  m.values.resize(rows * cols);
  m.missing.resize(rows * cols);
  if (!in.read(reinterpret_cast<char*>(m.point_ids.data()),
               static_cast<std::streamsize>(rows * sizeof(PointId))) ||
      !in.read(reinterpret_cast<char*>(m.values.data()),
               static_cast<std::streamsize>(rows * cols * sizeof(double))) ||
      !in.read(reinterpret_cast<char*>(m.missing.data()), static_cast<std::streamsize>(rows * cols)))
    throw fail();
  const auto nw = get_u64();
  for (std::uint64_t i = 0; i < nw; ++i) m.warnings.push_back(get_str());
  return m;
}

}  // namespace robotability::io
