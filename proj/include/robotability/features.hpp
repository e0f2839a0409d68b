#pragma once

// Per-point indicator extraction. Every extractor produces a raw column
// oriented "more of the phenomenon => larger value"; polarity is applied only
// at scoring time. Missing values travel as NaN inside this module and as an
// explicit mask in FeatureMatrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "robotability/ahp.hpp"
#include "robotability/error.hpp"
#include "robotability/geometry.hpp"
#include "robotability/parallel.hpp"
#include "robotability/sidewalk_graph.hpp"
#include "robotability/spatial_index.hpp"

namespace robotability {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

enum class ExtractorKind {
  DensityJoin,
  ObservationCount,
  NearestFacility,
  ThresholdBinary,
  AdditiveLayers,
  SlopeGradient,
  Uniform,
  EdgeAttribute,
};

inline constexpr std::pair<ExtractorKind, std::string_view> kExtractorNames[] = {
    {ExtractorKind::DensityJoin, "density_join"},
    {ExtractorKind::ObservationCount, "observation_count"},
    {ExtractorKind::NearestFacility, "nearest_facility"},
    {ExtractorKind::ThresholdBinary, "threshold_binary"},
    {ExtractorKind::AdditiveLayers, "additive_layers"},
    {ExtractorKind::SlopeGradient, "slope_gradient"},
    {ExtractorKind::Uniform, "uniform"},
    {ExtractorKind::EdgeAttribute, "edge_attribute"},
};

inline std::string_view to_string(ExtractorKind k) {
  for (const auto& [kind, name] : kExtractorNames)
    if (kind == k) return name;
  return "unknown";
}

inline ExtractorKind parse_extractor_kind(std::string_view s) {
  for (const auto& [kind, name] : kExtractorNames)
    if (name == s) return kind;
  throw ValidationError("unknown extractor kind '" + std::string(s) + "'");
}

struct FeatureDef {
  FeatureId id;
  std::string display_name;
  int polarity = +1;
  ExtractorKind extractor = ExtractorKind::Uniform;
  /// Numeric extractor parameters: radius, threshold, K, D, value, invert, weight.
  std::map<std::string, double> params;
  /// Per-class item weights for density joins.
  std::map<std::string, double> class_weights;
  /// Named data sources (one per layer for additive_layers).
  std::vector<std::string> sources;
  /// Edge property read by edge_attribute.
  std::string attribute;

  double param(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
};

struct FeatureCatalog {
  std::vector<FeatureDef> features;
  /// Registered-but-inactive features with the reason they are out.
  std::vector<std::pair<FeatureId, std::string>> excluded;

  bool is_excluded(const FeatureId& id) const {
    return std::any_of(excluded.begin(), excluded.end(),
                       [&](const auto& e) { return e.first == id; });
  }

  const FeatureDef* find(const FeatureId& id) const {
    for (const auto& f : features)
      if (f.id == id) return &f;
    return nullptr;
  }

  std::vector<FeatureId> active_ids() const {
    std::vector<FeatureId> out;
    for (const auto& f : features)
      if (!is_excluded(f.id)) out.push_back(f.id);
    return out;
  }

  void validate() const {
    std::vector<FeatureId> ids;
    for (const auto& f : features) {
      if (f.polarity != 1 && f.polarity != -1)
        throw ValidationError("feature '" + f.id + "' polarity must be +1 or -1");
      ids.push_back(f.id);
    }
    ContingencyMatrix::check_unique(ids);
    for (const auto& [id, reason] : excluded)
      if (!find(id)) throw ValidationError("excluded feature '" + id + "' is not in the catalog");
  }
};

/// Regular elevation raster. Row 0 is the northern edge (ASCII-grid order).
class ElevationSampler {
public:
  enum class OutOfBounds { Clamp, Error };

  ElevationSampler() = default;
  ElevationSampler(double x_origin, double y_origin, double cell_size, std::size_t cols,
                   std::size_t rows, std::vector<double> values,
                   std::optional<double> nodata = std::nullopt,
                   OutOfBounds policy = OutOfBounds::Clamp)
      : x0_(x_origin), y0_(y_origin), cell_(cell_size), cols_(cols), rows_(rows),
        values_(std::move(values)), policy_(policy) {
    if (!(cell_ > 0.0)) throw ValidationError("elevation raster cell size must be > 0");
    if (cols_ == 0 || rows_ == 0 || values_.size() != cols_ * rows_)
      throw ValidationError("elevation raster dimensions do not match its data");
    if (nodata)
      for (auto& v : values_)
        if (v == *nodata) v = kMissing;
  }

  double x_origin() const noexcept { return x0_; }
  double y_origin() const noexcept { return y0_; }
  double cell_size() const noexcept { return cell_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t rows() const noexcept { return rows_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Bilinear interpolation between cell centers. Returns NaN next to nodata.
  /// `clamped` is set when the query fell outside the raster.
  double sample(Vec2 p, bool* clamped = nullptr) const {
    const double north = y0_ + cell_ * static_cast<double>(rows_);
    const bool outside = p.x < x0_ || p.y < y0_ || p.x > x0_ + cell_ * static_cast<double>(cols_) ||
                         p.y > north;
    if (outside) {
      if (policy_ == OutOfBounds::Error)
        throw DataError("elevation sample outside raster at (" + std::to_string(p.x) + ", " +
                        std::to_string(p.y) + ")");
      if (clamped) *clamped = true;
    }
    // Continuous cell-center coordinates: column c has its center at c.
    const double fc = std::clamp((p.x - x0_) / cell_ - 0.5, 0.0, static_cast<double>(cols_ - 1));
    const double fr = std::clamp((north - p.y) / cell_ - 0.5, 0.0, static_cast<double>(rows_ - 1));
    const auto c0 = static_cast<std::size_t>(std::floor(fc));
    const auto r0 = static_cast<std::size_t>(std::floor(fr));
    const std::size_t c1 = std::min(c0 + 1, cols_ - 1);
    const std::size_t r1 = std::min(r0 + 1, rows_ - 1);
    const double tc = fc - static_cast<double>(c0);
    const double tr = fr - static_cast<double>(r0);
    auto v = [&](std::size_t r, std::size_t c) { return values_[r * cols_ + c]; };
    const double top = v(r0, c0) * (1.0 - tc) + v(r0, c1) * tc;
    const double bottom = v(r1, c0) * (1.0 - tc) + v(r1, c1) * tc;
    return top * (1.0 - tr) + bottom * tr;
  }

private:
  double x0_ = 0.0, y0_ = 0.0, cell_ = 1.0;
  std::size_t cols_ = 0, rows_ = 0;
  std::vector<double> values_;
  OutOfBounds policy_ = OutOfBounds::Clamp;
};

/// Generic point dataset: positions, optional class labels, optional value channels.
struct PointDataset {
  std::vector<Vec2> positions;
  std::vector<std::string> classes;          // empty or one per position
  std::vector<std::vector<double>> channels;  // channel-major, each one per position

  std::size_t size() const noexcept { return positions.size(); }
};

struct DataSources {
  std::map<std::string, PointDataset> datasets;
  std::optional<ElevationSampler> elevation;
};

struct RawStats {
  double min = 0.0;
  double max = 0.0;
  bool normalized = false;  // min-max applied
  bool degenerate = false;  // constant column mapped to 0.5
};

/// Dense point x feature matrix of values in [0,1] plus a missing mask.
struct FeatureMatrix {
  std::vector<PointId> point_ids;
  std::vector<FeatureId> feature_ids;
  std::vector<double> values;         // row-major, point-major
  std::vector<std::uint8_t> missing;  // same shape
  std::vector<RawStats> raw_stats;    // one per feature
  std::vector<std::string> warnings;

  std::size_t rows() const noexcept { return point_ids.size(); }
  std::size_t cols() const noexcept { return feature_ids.size(); }
  double value(std::size_t row, std::size_t col) const { return values[row * cols() + col]; }
  bool is_missing(std::size_t row, std::size_t col) const { return missing[row * cols() + col] != 0; }

  std::optional<std::size_t> column_of(const FeatureId& id) const {
    auto it = std::find(feature_ids.begin(), feature_ids.end(), id);
    if (it == feature_ids.end()) return std::nullopt;
    return static_cast<std::size_t>(it - feature_ids.begin());
  }

  /// Copies out one column with NaN for missing entries.
  std::vector<double> column(std::size_t col) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = is_missing(r, col) ? kMissing : value(r, col);
    return out;
  }
};

struct NormalizedColumn {
  std::vector<double> values;  // NaN where missing
  RawStats stats;
};

/// Min-max scaling over the non-missing entries. A constant column maps to 0.5
/// and is flagged degenerate.
inline NormalizedColumn minmax_normalize(std::span<const double> raw) {
  NormalizedColumn out;
  out.values.assign(raw.begin(), raw.end());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : raw) {
    if (is_missing(v)) continue;
    if (!std::isfinite(v)) throw DataError("min-max normalization: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) throw DataError("min-max normalization: every value is missing");
  out.stats = {lo, hi, true, lo == hi};
  const double range = hi - lo;
  for (auto& v : out.values) {
    if (is_missing(v)) continue;
    v = out.stats.degenerate ? 0.5 : (v - lo) / range;
  }
  return out;
}

/// value(point) = sum of class weights of items within `radius`.
inline std::vector<double> density_join(const SegmentizedGraph& g, const PointDataset& items,
                                        const std::map<std::string, double>& class_weights,
                                        double radius, double default_weight = 1.0,
                                        std::size_t workers = 0) {
  if (!(radius > 0.0)) throw ValidationError("density join radius must be > 0");
  std::vector<double> item_weight(items.size(), default_weight);
  if (!items.classes.empty()) {
    if (items.classes.size() != items.size())
      throw ValidationError("density join: class column length mismatch");
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto it = class_weights.find(items.classes[i]);
      if (it == class_weights.end())
        throw ValidationError("density join: no weight for item class '" + items.classes[i] + "'");
      item_weight[i] = it->second;
    }
  }
  std::vector<double> out(g.size(), 0.0);
  if (items.size() == 0) return out;
  const GridIndex index(items.positions, radius);
  parallel_for(g.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      double acc = 0.0;
      index.for_each_within(g.positions()[p], radius,
                            [&](PointId id, double) { acc += item_weight[id]; });
      out[p] = acc;
    }
  });
  return out;
}

/// Each observation goes to its nearest point; a point's value is the mean of
/// its assigned counts, missing when nothing was assigned.
inline std::vector<double> observation_count_join(const SegmentizedGraph& g,
                                                  std::span<const Vec2> positions,
                                                  std::span<const double> counts,
                                                  std::size_t workers = 0) {
  if (positions.size() != counts.size())
    throw ValidationError("observation join: positions/counts length mismatch");
  for (double c : counts)
    if (!(c >= 0.0) || !std::isfinite(c))
      throw ValidationError("observation join: counts must be finite and >= 0");
  std::vector<PointId> assigned(positions.size());
  parallel_for(positions.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) assigned[i] = g.index().nearest(positions[i]);
  });
  std::vector<double> sum(g.size(), 0.0);
  std::vector<std::uint32_t> n(g.size(), 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    sum[assigned[i]] += counts[i];
    ++n[assigned[i]];
  }
  std::vector<double> out(g.size(), kMissing);
  for (std::size_t p = 0; p < g.size(); ++p)
    if (n[p] > 0) out[p] = sum[p] / static_cast<double>(n[p]);
  return out;
}

/// Raw Euclidean distance from each point to its nearest facility.
inline std::vector<double> nearest_facility_distance(const SegmentizedGraph& g,
                                                     std::span<const Vec2> facilities,
                                                     std::size_t workers = 0) {
  if (facilities.empty()) throw DataError("nearest facility: facility list is empty");
  const GridIndex index(facilities);
  std::vector<double> out(g.size());
  parallel_for(g.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const Vec2 q = g.positions()[p];
      out[p] = distance(q, facilities[index.nearest(q)]);
    }
  });
  return out;
}

/// Proximity in [0,1]: 1 - minmax(distance), so the closest point scores 1.
inline NormalizedColumn nearest_facility_proximity(const SegmentizedGraph& g,
                                                   std::span<const Vec2> facilities,
                                                   std::size_t workers = 0) {
  auto col = minmax_normalize(nearest_facility_distance(g, facilities, workers));
  for (auto& v : col.values)
    if (!is_missing(v)) v = 1.0 - v;
  return col;
}

/// 1 where raw strictly exceeds the threshold, else 0 (missing counts as 0).
inline std::vector<double> threshold_binary(std::span<const double> raw, double threshold) {
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] > threshold ? 1.0 : 0.0;
  return out;
}

/// Conjunction over channels: 1 only where every channel exceeds the threshold.
inline std::vector<double> threshold_binary_all(std::span<const std::vector<double>> channels,
                                                double threshold) {
  if (channels.empty()) throw ValidationError("threshold_binary: no channels");
  std::vector<double> out(channels.front().size(), 1.0);
  for (const auto& ch : channels) {
    if (ch.size() != out.size()) throw ValidationError("threshold_binary: channel length mismatch");
    for (std::size_t i = 0; i < ch.size(); ++i)
      if (!(ch[i] > threshold)) out[i] = 0.0;
  }
  return out;
}

/// Number of layers with at least one item within `radius` of each point.
inline std::vector<double> additive_layer_count(const SegmentizedGraph& g,
                                                std::span<const std::vector<Vec2>> layers,
                                                double radius, std::size_t workers = 0) {
  if (!(radius > 0.0)) throw ValidationError("layer count radius must be > 0");
  std::vector<double> out(g.size(), 0.0);
  for (const auto& layer : layers) {
    if (layer.empty()) continue;
    const GridIndex index(layer, radius);
    parallel_for(g.size(), workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p) {
        const Vec2 q = g.positions()[p];
        if (distance(q, layer[index.nearest(q)]) <= radius) out[p] += 1.0;
      }
    });
  }
  return out;
}

/// Mean absolute slope to the K closest other points within D. Neighbors at
/// zero distance are ignored; points without neighbors are missing.
inline std::vector<double> slope_gradient_from_elevations(const SegmentizedGraph& g,
                                                          std::span<const double> elevation,
                                                          std::size_t k, double max_dist,
                                                          std::size_t workers = 0) {
  if (k < 1) throw ValidationError("slope gradient: K must be >= 1");
  if (!(max_dist > 0.0)) throw ValidationError("slope gradient: D must be > 0");
  if (elevation.size() != g.size()) throw ValidationError("slope gradient: elevation length mismatch");
  for (std::size_t p = 0; p < elevation.size(); ++p)
    if (!std::isfinite(elevation[p]))
      throw DataError("slope gradient: non-finite elevation sample at point " + std::to_string(p));
  std::vector<double> out(g.size(), kMissing);
  parallel_for(g.size(), workers, [&](std::size_t b, std::size_t e) {
    std::vector<Neighbor> nbrs;
    for (std::size_t p = b; p < e; ++p) {
      const Vec2 q = g.positions()[p];
      nbrs.clear();
      g.index().for_each_within(q, max_dist, [&](PointId id, double d) {
        if (id != p && d > 0.0) nbrs.push_back({d, id});
      });
      if (nbrs.empty()) continue;
      const std::size_t take = std::min(k, nbrs.size());
      std::partial_sort(nbrs.begin(), nbrs.begin() + static_cast<std::ptrdiff_t>(take), nbrs.end());
      double acc = 0.0;
      for (std::size_t i = 0; i < take; ++i)
        acc += std::abs((elevation[nbrs[i].id] - elevation[p]) / nbrs[i].distance);
      out[p] = acc / static_cast<double>(take);
    }
  });
  return out;
}

inline std::vector<double> sample_elevations(const SegmentizedGraph& g,
                                             const ElevationSampler& sampler,
                                             std::vector<std::string>* warnings = nullptr) {
  std::vector<double> elev(g.size());
  std::size_t clamped = 0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    bool c = false;
    elev[p] = sampler.sample(g.positions()[p], &c);
    clamped += c ? 1 : 0;
  }
  if (clamped > 0 && warnings)
    warnings->push_back("elevation: " + std::to_string(clamped) +
                        " point(s) outside the raster were clamped to its edge");
  return elev;
}

inline std::vector<double> slope_gradient(const SegmentizedGraph& g, const ElevationSampler& sampler,
                                          std::size_t k, double max_dist, std::size_t workers = 0,
                                          std::vector<std::string>* warnings = nullptr) {
  return slope_gradient_from_elevations(g, sample_elevations(g, sampler, warnings), k, max_dist,
                                        workers);
}

inline std::vector<double> uniform_feature(std::size_t n, double value) {
  if (!(value >= 0.0 && value <= 1.0))
    throw ValidationError("uniform feature value must lie in [0, 1]");
  return std::vector<double>(n, value);
}

/// Per-point value of a numeric property of the edge that emitted the point.
inline std::vector<double> edge_attribute(const SidewalkGraph& graph, const SegmentizedGraph& g,
                                          const std::string& attribute) {
  std::vector<double> out(g.size(), kMissing);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto& attrs = graph.edges()[g.points()[p].edge].attributes;
    auto it = attrs.find(attribute);
    if (it != attrs.end()) out[p] = it->second;
  }
  return out;
}

struct ExtractionOptions {
  std::size_t workers = 0;
  double default_radius = 7.5;
  std::size_t default_slope_k = 8;
  double default_slope_d = 30.0;
};

namespace detail {

inline const PointDataset& require_source(const FeatureDef& f, const DataSources& src,
                                          std::size_t i = 0) {
  if (f.sources.size() <= i)
    throw DataError("feature '" + f.id + "' has no data source configured; list it as excluded");
  auto it = src.datasets.find(f.sources[i]);
  if (it == src.datasets.end())
    throw DataError("feature '" + f.id + "': data source '" + f.sources[i] +
                    "' not found; list it as excluded if the data is unavailable");
  return it->second;
}

}  // namespace detail

/// Runs one feature's extractor and normalization chain.
inline NormalizedColumn extract_feature(const FeatureDef& f, const SidewalkGraph& graph,
                                        const SegmentizedGraph& g, const DataSources& src,
                                        const ExtractionOptions& opts,
                                        std::vector<std::string>* warnings = nullptr) {
  const double radius = f.param("radius", opts.default_radius);
  NormalizedColumn col;
  bool minmax = true;
  switch (f.extractor) {
    case ExtractorKind::DensityJoin: {
      const auto& ds = detail::require_source(f, src);
      col.values = density_join(g, ds, f.class_weights, radius, f.param("weight", 1.0), opts.workers);
      break;
    }
    case ExtractorKind::ObservationCount: {
      const auto& ds = detail::require_source(f, src);
      if (ds.channels.empty())
        throw DataError("feature '" + f.id + "': observation source has no count column");
      col.values = observation_count_join(g, ds.positions, ds.channels[0], opts.workers);
      break;
    }
    case ExtractorKind::NearestFacility: {
      col = nearest_facility_proximity(g, detail::require_source(f, src).positions, opts.workers);
      minmax = false;
      break;
    }
    case ExtractorKind::ThresholdBinary: {
      const auto& ds = detail::require_source(f, src);
      if (ds.channels.empty() || ds.size() == 0)
        throw DataError("feature '" + f.id + "': threshold source has no measurements");
      // Each point takes the measurements of its nearest sample.
      const GridIndex index(ds.positions);
      std::vector<PointId> nearest(g.size());
      parallel_for(g.size(), opts.workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) nearest[p] = index.nearest(g.positions()[p]);
      });
      std::vector<std::vector<double>> channels;
      for (const auto& ch : ds.channels) {
        std::vector<double> joined(g.size());
        for (std::size_t p = 0; p < g.size(); ++p) joined[p] = ch[nearest[p]];
        channels.push_back(std::move(joined));
      }
      col.values = threshold_binary_all(channels, f.param("threshold", 10.0));
      col.stats = {0.0, 1.0, false, false};
      minmax = false;
      break;
    }
    case ExtractorKind::AdditiveLayers: {
      if (f.sources.empty())
        throw DataError("feature '" + f.id + "' has no layers configured; list it as excluded");
      std::vector<std::vector<Vec2>> layers;
      for (std::size_t i = 0; i < f.sources.size(); ++i)
        layers.push_back(detail::require_source(f, src, i).positions);
      col.values = additive_layer_count(g, layers, radius, opts.workers);
      break;
    }
    case ExtractorKind::SlopeGradient: {
      if (!src.elevation)
        throw DataError("feature '" + f.id + "' needs an elevation raster; list it as excluded");
      const double k = f.param("K", static_cast<double>(opts.default_slope_k));
      if (!(k >= 1.0)) throw ValidationError("feature '" + f.id + "': K must be >= 1");
      col.values = slope_gradient(g, *src.elevation, static_cast<std::size_t>(k),
                                  f.param("D", opts.default_slope_d), opts.workers, warnings);
      break;
    }
    case ExtractorKind::Uniform: {
      col.values = uniform_feature(g.size(), f.param("value", 1.0));
      col.stats = {col.values.empty() ? 0.0 : col.values.front(),
                   col.values.empty() ? 0.0 : col.values.front(), false, false};
      minmax = false;
      break;
    }
    case ExtractorKind::EdgeAttribute: {
      if (f.attribute.empty())
        throw ValidationError("feature '" + f.id + "': edge_attribute needs an attribute name");
      col.values = edge_attribute(graph, g, f.attribute);
      break;
    }
  }
  if (minmax) {
    try {
      col = minmax_normalize(col.values);
    } catch (const DataError& e) {
      throw DataError("feature '" + f.id + "': " + e.what());
    }
  }
  if (col.stats.degenerate && warnings)
    warnings->push_back("feature '" + f.id + "' has a constant raw value; normalized to 0.5");
  if (f.param("invert", 0.0) != 0.0)
    for (auto& v : col.values)
      if (!is_missing(v)) v = 1.0 - v;
  return col;
}

/// Extracts every listed feature (default: all active) into one matrix.
inline FeatureMatrix assemble_feature_matrix(const SidewalkGraph& graph, const SegmentizedGraph& g,
                                             const FeatureCatalog& catalog, const DataSources& src,
                                             const ExtractionOptions& opts = {},
                                             std::optional<std::vector<FeatureId>> only = std::nullopt) {
  catalog.validate();
  const std::vector<FeatureId> ids = only ? *only : catalog.active_ids();
  FeatureMatrix m;
  m.feature_ids = ids;
  m.point_ids.resize(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) m.point_ids[p] = static_cast<PointId>(p);
  const std::size_t nf = ids.size();
  m.values.assign(g.size() * nf, 0.0);
  m.missing.assign(g.size() * nf, 0);
  for (std::size_t c = 0; c < nf; ++c) {
    const FeatureDef* f = catalog.find(ids[c]);
    if (!f) throw ValidationError("feature '" + ids[c] + "' is not in the catalog");
    if (catalog.is_excluded(f->id))
      throw ValidationError("feature '" + f->id + "' is excluded from the catalog");
    auto col = extract_feature(*f, graph, g, src, opts, &m.warnings);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double v = col.values[p];
      if (is_missing(v)) {
        m.missing[p * nf + c] = 1;
        m.values[p * nf + c] = 0.0;
      } else {
        m.values[p * nf + c] = v;
      }
    }
    m.raw_stats.push_back(col.stats);
  }
  return m;
}

/// Replaces (or appends) one column of a matrix.
inline void set_column(FeatureMatrix& m, std::size_t col, const NormalizedColumn& c) {
  const std::size_t nf = m.cols();
  for (std::size_t p = 0; p < m.rows(); ++p) {
    const double v = c.values[p];
    m.missing[p * nf + col] = is_missing(v) ? 1 : 0;
    m.values[p * nf + col] = is_missing(v) ? 0.0 : v;
  }
  m.raw_stats[col] = c.stats;
}

}  // namespace robotability
