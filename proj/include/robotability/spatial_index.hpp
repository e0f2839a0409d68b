#pragma once

// Uniform-grid bucket index over a fixed point set. Point ids are positions in
// the input span. All queries are exact (they agree with a brute-force scan),
// and ties on distance always resolve to the lower id.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "robotability/error.hpp"
#include "robotability/geometry.hpp"

namespace robotability {

using PointId = std::uint32_t;

struct Neighbor {
  double distance;
  PointId id;

  friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
    return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

class GridIndex {
public:
  GridIndex() = default;

  /// `cell_hint` <= 0 picks a cell size from the point density.
  explicit GridIndex(std::span<const Vec2> points, double cell_hint = 0.0) {
    if (points.empty()) throw ValidationError("spatial index over an empty point set");
    if (points.size() > std::numeric_limits<PointId>::max())
      throw ValidationError("spatial index: too many points");
    for (const auto& p : points)
      if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw ValidationError("spatial index: non-finite coordinate");
    bounds_ = bounds_of(points);
    const double w = std::max(bounds_.max_x - bounds_.min_x, 1e-9);
    const double h = std::max(bounds_.max_y - bounds_.min_y, 1e-9);
    const double n = static_cast<double>(points.size());
    cell_ = cell_hint > 0.0 ? cell_hint : std::max(std::sqrt(w * h / n) * 2.0, 1e-6);
    // Keep the dense cell array within a small multiple of the point count.
    const double max_cells = std::max(4.0 * n, 1024.0);
    while ((std::floor(w / cell_) + 1.0) * (std::floor(h / cell_) + 1.0) > max_cells) cell_ *= 1.5;
    nx_ = static_cast<std::int64_t>(std::floor(w / cell_)) + 1;
    ny_ = static_cast<std::int64_t>(std::floor(h / cell_)) + 1;

    const std::size_t ncells = static_cast<std::size_t>(nx_ * ny_);
    std::vector<std::uint32_t> cell_of(points.size());
    start_.assign(ncells + 1, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = cell_coords(points[i]);
      cell_of[i] = static_cast<std::uint32_t>(c.second * nx_ + c.first);
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < ncells; ++c) start_[c + 1] += start_[c];
    ids_.resize(points.size());
    coords_.resize(points.size());
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto slot = fill[cell_of[i]]++;
      ids_[slot] = static_cast<PointId>(i);
      coords_[slot] = points[i];
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  double cell_size() const noexcept { return cell_; }

  /// Closest point; ties go to the lowest id.
  PointId nearest(Vec2 q) const {
    const auto [cx, cy] = cell_coords_unclamped(q);
    Neighbor best{std::numeric_limits<double>::infinity(), 0};
    const std::int64_t max_ring = std::max({std::abs(cx), std::abs(cx - (nx_ - 1)), std::abs(cy),
                                            std::abs(cy - (ny_ - 1))});
    const std::int64_t gap_x = cx < 0 ? -cx : std::max<std::int64_t>(cx - (nx_ - 1), 0);
    const std::int64_t gap_y = cy < 0 ? -cy : std::max<std::int64_t>(cy - (ny_ - 1), 0);
    for (std::int64_t r = std::max(gap_x, gap_y); r <= max_ring; ++r) {
      // Anything in ring r+1 is at least r cell widths away.
      visit_ring(cx, cy, r, [&](std::size_t slot) {
        const Neighbor cand{distance(q, coords_[slot]), ids_[slot]};
        if (cand < best) best = cand;
      });
      if (best.distance < static_cast<double>(r) * cell_) break;
    }
    return best.id;
  }

  /// Calls fn(id, distance) for every point with distance <= radius, in no particular order.
  template <class Fn>
  void for_each_within(Vec2 q, double radius, Fn&& fn) const {
    if (!(radius >= 0.0)) throw ValidationError("radius must be non-negative");
    for_each_cell_in(BBox{q.x - radius, q.y - radius, q.x + radius, q.y + radius},
                     [&](std::size_t slot) {
                       const double d = distance(q, coords_[slot]);
                       if (d <= radius) fn(ids_[slot], d);
                     });
  }

  /// Ids of all points with distance <= radius, sorted ascending.
  std::vector<PointId> within(Vec2 q, double radius) const {
    std::vector<PointId> out;
    for_each_within(q, radius, [&](PointId id, double) { out.push_back(id); });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Up to k closest points with distance <= max_dist, excluding `exclude`,
  /// sorted by (distance, id).
  std::vector<Neighbor> k_nearest_within(Vec2 q, std::size_t k, double max_dist,
                                         PointId exclude = std::numeric_limits<PointId>::max()) const {
    std::vector<Neighbor> found;
    for_each_within(q, max_dist, [&](PointId id, double d) {
      if (id != exclude) found.push_back({d, id});
    });
    if (found.size() > k) {
      std::partial_sort(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(k), found.end());
      found.resize(k);
    } else {
      std::sort(found.begin(), found.end());
    }
    return found;
  }

  /// Ids of points inside the closed box, sorted ascending.
  std::vector<PointId> in_box(const BBox& box) const {
    std::vector<PointId> out;
    for_each_cell_in(box, [&](std::size_t slot) {
      if (box.contains(coords_[slot])) out.push_back(ids_[slot]);
    });
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  std::pair<std::int64_t, std::int64_t> cell_coords_unclamped(Vec2 p) const {
    return {static_cast<std::int64_t>(std::floor((p.x - bounds_.min_x) / cell_)),
            static_cast<std::int64_t>(std::floor((p.y - bounds_.min_y) / cell_))};
  }

  std::pair<std::int64_t, std::int64_t> cell_coords(Vec2 p) const {
    auto [cx, cy] = cell_coords_unclamped(p);
    return {std::clamp<std::int64_t>(cx, 0, nx_ - 1), std::clamp<std::int64_t>(cy, 0, ny_ - 1)};
  }

  template <class Fn>
  void visit_cell(std::int64_t cx, std::int64_t cy, Fn& fn) const {
    if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return;
    const auto c = static_cast<std::size_t>(cy * nx_ + cx);
    for (std::uint32_t s = start_[c]; s < start_[c + 1]; ++s) fn(s);
  }

  template <class Fn>
  void visit_ring(std::int64_t cx, std::int64_t cy, std::int64_t r, Fn&& fn) const {
    if (r == 0) {
      visit_cell(cx, cy, fn);
      return;
    }
    const std::int64_t x0 = std::max<std::int64_t>(cx - r, 0);
    const std::int64_t x1 = std::min<std::int64_t>(cx + r, nx_ - 1);
    for (std::int64_t x = x0; x <= x1; ++x) {
      visit_cell(x, cy - r, fn);
      visit_cell(x, cy + r, fn);
    }
    const std::int64_t y0 = std::max<std::int64_t>(cy - r + 1, 0);
    const std::int64_t y1 = std::min<std::int64_t>(cy + r - 1, ny_ - 1);
    for (std::int64_t y = y0; y <= y1; ++y) {
      visit_cell(cx - r, y, fn);
      visit_cell(cx + r, y, fn);
    }
  }

  template <class Fn>
  void for_each_cell_in(const BBox& box, Fn&& fn) const {
    if (box.max_x < bounds_.min_x || box.min_x > bounds_.max_x || box.max_y < bounds_.min_y ||
        box.min_y > bounds_.max_y)
      return;
    const auto [x0, y0] = cell_coords({box.min_x, box.min_y});
    const auto [x1, y1] = cell_coords({box.max_x, box.max_y});
    for (std::int64_t y = y0; y <= y1; ++y)
      for (std::int64_t x = x0; x <= x1; ++x) visit_cell(x, y, fn);
  }

  BBox bounds_{};
  double cell_ = 1.0;
  std::int64_t nx_ = 0, ny_ = 0;
  std::vector<std::uint32_t> start_;
  std::vector<PointId> ids_;
  std::vector<Vec2> coords_;
};

}  // namespace robotability
