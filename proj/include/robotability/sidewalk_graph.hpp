#pragma once

// Sidewalk network and its segmentization into evenly spaced computation points.

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "robotability/error.hpp"
#include "robotability/geometry.hpp"
#include "robotability/spatial_index.hpp"

namespace robotability {

struct SidewalkNode {
  std::string id;
  Vec2 pos;
};

/// Edge as supplied by a reader. An empty polyline means a straight segment
/// between the endpoints; `declared_length`, when present, must match.
struct EdgeInput {
  std::string id;
  std::string node_a;
  std::string node_b;
  std::vector<Vec2> polyline;
  std::optional<double> declared_length;
  std::map<std::string, double> attributes;
};

struct SidewalkEdge {
  std::string id;
  std::size_t a = 0;  // node index
  std::size_t b = 0;
  std::vector<Vec2> polyline;
  double length = 0.0;
  std::map<std::string, double> attributes;
};

class SidewalkGraph {
public:
  const std::vector<SidewalkNode>& nodes() const noexcept { return nodes_; }
  const std::vector<SidewalkEdge>& edges() const noexcept { return edges_; }

  std::optional<std::size_t> node_index(const std::string& id) const {
    auto it = node_lookup_.find(id);
    if (it == node_lookup_.end()) return std::nullopt;
    return it->second;
  }

  double total_length() const {
    double t = 0.0;
    for (const auto& e : edges_) t += e.length;
    return t;
  }

private:
  friend SidewalkGraph build_graph(std::vector<SidewalkNode>, std::vector<EdgeInput>);
  std::vector<SidewalkNode> nodes_;
  std::vector<SidewalkEdge> edges_;
  std::unordered_map<std::string, std::size_t> node_lookup_;
};

inline SidewalkGraph build_graph(std::vector<SidewalkNode> nodes, std::vector<EdgeInput> edges) {
  constexpr double kEndpointTolerance = 1e-6;
  SidewalkGraph g;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (!std::isfinite(n.pos.x) || !std::isfinite(n.pos.y))
      throw ValidationError("node '" + n.id + "' has a non-finite coordinate");
    if (!g.node_lookup_.emplace(n.id, i).second)
      throw ValidationError("duplicate node id '" + n.id + "'");
  }
  g.nodes_ = std::move(nodes);

  std::unordered_map<std::string, bool> seen_edges;
  g.edges_.reserve(edges.size());
  for (auto& in : edges) {
    if (!seen_edges.emplace(in.id, true).second)
      throw ValidationError("duplicate edge id '" + in.id + "'");
    auto a = g.node_index(in.node_a);
    if (!a) throw ValidationError("edge '" + in.id + "' references missing node '" + in.node_a + "'");
    auto b = g.node_index(in.node_b);
    if (!b) throw ValidationError("edge '" + in.id + "' references missing node '" + in.node_b + "'");

    SidewalkEdge e;
    e.id = std::move(in.id);
    e.a = *a;
    e.b = *b;
    const Vec2 pa = g.nodes_[e.a].pos;
    const Vec2 pb = g.nodes_[e.b].pos;
    if (in.polyline.empty()) {
      e.polyline = {pa, pb};
    } else {
      if (in.polyline.size() < 2)
        throw ValidationError("edge '" + e.id + "' polyline needs at least 2 vertices");
      for (const auto& p : in.polyline)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
          throw ValidationError("edge '" + e.id + "' has a non-finite coordinate");
      if (distance(in.polyline.front(), pa) > kEndpointTolerance ||
          distance(in.polyline.back(), pb) > kEndpointTolerance)
        throw ValidationError("edge '" + e.id + "' polyline does not start/end at its nodes");
      e.polyline = std::move(in.polyline);
    }
    e.length = polyline_length(e.polyline);
    if (in.declared_length && std::abs(*in.declared_length - e.length) > 1e-6)
      throw ValidationError("edge '" + e.id + "' declared length " +
                            std::to_string(*in.declared_length) + " differs from arc length " +
                            std::to_string(e.length));
    e.attributes = std::move(in.attributes);
    g.edges_.push_back(std::move(e));
  }
  return g;
}

struct SamplePoint {
  Vec2 pos;
  std::size_t edge = 0;  // index of the edge that first emitted this point
  double offset = 0.0;   // arc offset along that edge, meters
};

/// Computation points sampled along every edge, plus a spatial index over them.
class SegmentizedGraph {
public:
  const std::vector<SamplePoint>& points() const noexcept { return points_; }
  const std::vector<Vec2>& positions() const noexcept { return positions_; }
  /// Point ids along each edge in arc order, endpoints included (shared ids at nodes).
  const std::vector<std::vector<PointId>>& edge_points() const noexcept { return edge_points_; }
  const GridIndex& index() const noexcept { return index_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t size() const noexcept { return points_.size(); }

private:
  friend SegmentizedGraph segmentize(const SidewalkGraph&, double);
  std::vector<SamplePoint> points_;
  std::vector<Vec2> positions_;
  std::vector<std::vector<PointId>> edge_points_;
  GridIndex index_;
  double threshold_ = 0.0;
};

/// Number of equal sub-intervals an edge of length L is cut into.
inline std::size_t interval_count(double length, double threshold) {
  if (length <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(length / threshold));
}

namespace detail {

/// Position at arc offset `s` along a polyline.
inline Vec2 point_at(const std::vector<Vec2>& line, double s) {
  double walked = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (walked + seg >= s && seg > 0.0) return lerp(line[i - 1], line[i], (s - walked) / seg);
    walked += seg;
  }
  return line.back();
}

}  // namespace detail

inline SegmentizedGraph segmentize(const SidewalkGraph& g, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw ValidationError("segmentization threshold must be > 0");
  SegmentizedGraph s;
  s.threshold_ = threshold;
  std::vector<std::optional<PointId>> node_point(g.nodes().size());

  auto emit = [&](Vec2 p, std::size_t edge, double offset) {
    const auto id = static_cast<PointId>(s.points_.size());
    s.points_.push_back({p, edge, offset});
    s.positions_.push_back(p);
    return id;
  };
  auto endpoint = [&](std::size_t node, std::size_t edge, double offset) {
    if (!node_point[node]) node_point[node] = emit(g.nodes()[node].pos, edge, offset);
    return *node_point[node];
  };

  s.edge_points_.resize(g.edges().size());
  for (std::size_t ei = 0; ei < g.edges().size(); ++ei) {
    const auto& e = g.edges()[ei];
    auto& ids = s.edge_points_[ei];
    ids.push_back(endpoint(e.a, ei, 0.0));
    if (e.length > 0.0) {
      const std::size_t k = interval_count(e.length, threshold);
      ids.reserve(k + 1);
      const double step = e.length / static_cast<double>(k);
      for (std::size_t j = 1; j < k; ++j) {
        const double off = step * static_cast<double>(j);
        ids.push_back(emit(detail::point_at(e.polyline, off), ei, off));
      }
      ids.push_back(endpoint(e.b, ei, e.length));
    } else if (e.b != e.a) {
      ids.push_back(endpoint(e.b, ei, 0.0));
    }
  }
  if (s.points_.empty()) throw ValidationError("sidewalk graph has no edges to segmentize");
  s.index_ = GridIndex(s.positions_, threshold);
  return s;
}

}  // namespace robotability
