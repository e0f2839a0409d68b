#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace robotability {

/// Planar coordinate in meters (x east, y north) of a projected CRS.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

inline double squared_distance(Vec2 a, Vec2 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

inline Vec2 lerp(Vec2 a, Vec2 b, double t) noexcept {
  return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
}

struct BBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  bool contains(Vec2 p) const noexcept {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

inline BBox bounds_of(std::span<const Vec2> pts) {
  BBox b{pts.front().x, pts.front().y, pts.front().x, pts.front().y};
  for (const auto& p : pts) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

inline double polyline_length(std::span<const Vec2> line) {
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) len += distance(line[i - 1], line[i]);
  return len;
}

using Ring = std::vector<Vec2>;

/// Polygon with an outer ring and optional holes. Rings may be open or closed.
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

namespace detail {

inline bool on_segment(Vec2 p, Vec2 a, Vec2 b) noexcept {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  if (cross != 0.0) return false;
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

enum class RingSide { Outside, Inside, Boundary };

inline RingSide ring_side(Vec2 p, const Ring& ring) noexcept {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[j];
    const Vec2 b = ring[i];
    if (on_segment(p, a, b)) return RingSide::Boundary;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside ? RingSide::Inside : RingSide::Outside;
}

}  // namespace detail

/// Even-odd containment; points on any ring edge count as contained.
inline bool polygon_contains(const Polygon& poly, Vec2 p) noexcept {
  using detail::RingSide;
  const auto outer = detail::ring_side(p, poly.outer);
  if (outer == RingSide::Outside) return false;
  if (outer == RingSide::Boundary) return true;
  for (const auto& h : poly.holes) {
    const auto s = detail::ring_side(p, h);
    if (s == RingSide::Boundary) return true;
    if (s == RingSide::Inside) return false;
  }
  return true;
}

namespace detail {

inline bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) noexcept {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    const double v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b)) ||
         (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

}  // namespace detail

/// Returns an empty string for a usable simple ring, otherwise the reason.
inline std::string ring_problem(const Ring& ring) {
  Ring r = ring;
  if (r.size() > 1 && r.front() == r.back()) r.pop_back();
  if (r.size() < 3) return "ring has fewer than 3 distinct vertices";
  double area2 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Vec2 a = r[i], b = r[(i + 1) % r.size()];
    if (!std::isfinite(a.x) || !std::isfinite(a.y)) return "ring has a non-finite coordinate";
    area2 += a.x * b.y - b.x * a.y;
  }
  if (area2 == 0.0) return "ring has zero area";
  const std::size_t n = r.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges share a vertex
      if (detail::segments_cross(r[i], r[(i + 1) % n], r[j], r[(j + 1) % n]))
        return "ring is self-intersecting";
    }
  return {};
}

inline BBox bounds_of(const Polygon& poly) { return bounds_of(std::span<const Vec2>(poly.outer)); }

}  // namespace robotability
