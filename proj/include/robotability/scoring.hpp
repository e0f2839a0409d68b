#pragma once

// Polarity-controlled weighted scoring of a feature matrix, graph and zone
// aggregation, zone ranking and robot-profile weight derivation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robotability/ahp.hpp"
#include "robotability/error.hpp"
#include "robotability/features.hpp"
#include "robotability/geometry.hpp"
#include "robotability/parallel.hpp"
#include "robotability/sidewalk_graph.hpp"
#include "robotability/spatial_index.hpp"

namespace robotability {

enum class MissingPolicy { Renormalize, ZeroFill, PropagateMissing };

inline std::string_view to_string(MissingPolicy p) {
  switch (p) {
    case MissingPolicy::Renormalize: return "renormalize";
    case MissingPolicy::ZeroFill: return "zero-fill";
    case MissingPolicy::PropagateMissing: return "propagate-missing";
  }
  return "renormalize";
}

inline MissingPolicy parse_missing_policy(std::string_view s) {
  if (s == "renormalize") return MissingPolicy::Renormalize;
  if (s == "zero-fill") return MissingPolicy::ZeroFill;
  if (s == "propagate-missing") return MissingPolicy::PropagateMissing;
  throw ValidationError("unknown missing-data policy '" + std::string(s) + "'");
}

using PolarityMap = std::map<FeatureId, int>;

struct ScoreField {
  std::vector<PointId> point_ids;
  std::vector<double> scores;    // NaN where no score could be formed
  std::vector<double> coverage;  // fraction of scored features present
  std::string profile;

  std::size_t size() const noexcept { return scores.size(); }
  bool has_score(std::size_t i) const noexcept { return !std::isnan(scores[i]); }
};

struct Zone {
  std::string id;
  Polygon polygon;
};

struct ZoneAggregate {
  std::string zone_id;
  Polygon polygon;
  std::optional<double> mean_score;
  std::size_t point_count = 0;
  std::optional<double> percentile_rank;
};

struct RobotProfile {
  enum class WeightSource { Matrix, Fixture };

  std::string name = "custom";
  std::vector<FeatureId> included_features;
  std::map<FeatureId, int> polarity_overrides;
  std::map<FeatureId, std::map<std::string, double>> extractor_param_overrides;
  WeightSource weight_source = WeightSource::Matrix;
};

struct ProfileWeights {
  WeightSet weights;
  PolarityMap polarities;
};

namespace detail {

inline ScoreField score_columns(const FeatureMatrix& m, const std::vector<std::size_t>& cols,
                                const std::vector<double>& weights, const std::vector<int>& signs,
                                MissingPolicy policy, std::size_t workers) {
  ScoreField out;
  out.point_ids = m.point_ids;
  out.scores.assign(m.rows(), 0.0);
  out.coverage.assign(m.rows(), 0.0);
  const std::size_t nf = m.cols();
  const std::size_t k = cols.size();
  std::vector<double> signed_w(k);
  for (std::size_t i = 0; i < k; ++i) signed_w[i] = weights[i] * signs[i];
  parallel_for(m.rows(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const double* row = m.values.data() + r * nf;
      const std::uint8_t* miss = m.missing.data() + r * nf;
      double acc = 0.0, present_w = 0.0;
      std::size_t present = 0;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t c = cols[i];
        if (miss[c]) continue;
        acc += signed_w[i] * row[c];
        present_w += weights[i];
        ++present;
      }
      out.coverage[r] = k == 0 ? 0.0 : static_cast<double>(present) / static_cast<double>(k);
      switch (policy) {
        case MissingPolicy::Renormalize:
          out.scores[r] = present == 0 ? kMissing : (present == k ? acc : acc / present_w);
          break;
        case MissingPolicy::ZeroFill:
          out.scores[r] = acc;
          break;
        case MissingPolicy::PropagateMissing:
          out.scores[r] = present == k ? acc : kMissing;
          break;
      }
    }
  });
  return out;
}

inline std::string list_ids(const std::vector<FeatureId>& ids) {
  std::string s;
  for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
  return s;
}

}  // namespace detail

/// Scores every point with the features named in `weights`, which must all be
/// columns of the matrix (the matrix may carry extra columns).
inline ScoreField score_profile(const FeatureMatrix& m, const WeightSet& weights,
                                const PolarityMap& polarities,
                                MissingPolicy policy = MissingPolicy::Renormalize,
                                std::size_t workers = 0) {
  std::vector<std::size_t> cols;
  std::vector<double> w;
  std::vector<int> signs;
  std::vector<FeatureId> unknown;
  for (const auto& [id, wi] : weights.entries()) {
    auto c = m.column_of(id);
    if (!c) {
      unknown.push_back(id);
      continue;
    }
    auto p = polarities.find(id);
    if (p == polarities.end()) throw ValidationError("no polarity for feature '" + id + "'");
    if (p->second != 1 && p->second != -1)
      throw ValidationError("polarity for feature '" + id + "' must be +1 or -1");
    cols.push_back(*c);
    w.push_back(wi);
    signs.push_back(p->second);
  }
  if (!unknown.empty())
    throw ValidationError("weights reference features missing from the matrix: " +
                          detail::list_ids(unknown));
  return detail::score_columns(m, cols, w, signs, policy, workers);
}

/// R_n = sum_i p_i w_i x_ni. The weight set must cover exactly the matrix's features.
inline ScoreField score_points(const FeatureMatrix& m, const WeightSet& weights,
                               const PolarityMap& polarities,
                               MissingPolicy policy = MissingPolicy::Renormalize,
                               std::size_t workers = 0) {
  const auto wid = weights.ids();
  std::set<FeatureId> a(m.feature_ids.begin(), m.feature_ids.end()), b(wid.begin(), wid.end());
  std::vector<FeatureId> diff;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  if (!diff.empty())
    throw ValidationError("weight/feature set mismatch: " + detail::list_ids(diff));
  return score_profile(m, weights, polarities, policy, workers);
}

/// Mean of all scored points (R_G).
inline double aggregate_graph(const ScoreField& field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double s : field.scores)
    if (!std::isnan(s)) {
      sum += s;
      ++n;
    }
  if (n == 0) throw DataError("graph aggregate: no point has any feature data");
  return sum / static_cast<double>(n);
}

/// Assigns each point to the first zone (input order) containing it, boundary
/// included, and averages scores per zone.
/// `positions[r]` is the location of field row r; `index` is built over them.
inline std::vector<ZoneAggregate> aggregate_zones(const ScoreField& field,
                                                  std::span<const Vec2> positions,
                                                  const GridIndex& index,
                                                  const std::vector<Zone>& zones) {
  if (field.size() != positions.size() || index.size() != positions.size())
    throw ValidationError("score field does not match its point positions");
  for (const auto& z : zones) {
    if (auto why = ring_problem(z.polygon.outer); !why.empty())
      throw ValidationError("zone '" + z.id + "': " + why);
    for (const auto& h : z.polygon.holes)
      if (auto why = ring_problem(h); !why.empty())
        throw ValidationError("zone '" + z.id + "' hole: " + why);
  }
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(positions.size(), kNone);
  for (std::size_t zi = 0; zi < zones.size(); ++zi) {
    const auto& poly = zones[zi].polygon;
    for (PointId p : index.in_box(bounds_of(poly)))
      if (owner[p] == kNone && polygon_contains(poly, positions[p])) owner[p] = zi;
  }
  std::vector<double> sum(zones.size(), 0.0);
  std::vector<std::size_t> count(zones.size(), 0);
  for (std::size_t p = 0; p < positions.size(); ++p)
    if (owner[p] != kNone && field.has_score(p)) {
      sum[owner[p]] += field.scores[p];
      ++count[owner[p]];
    }
  std::vector<ZoneAggregate> out(zones.size());
  std::vector<std::size_t> with_data;
  for (std::size_t zi = 0; zi < zones.size(); ++zi) {
    out[zi].zone_id = zones[zi].id;
    out[zi].polygon = zones[zi].polygon;
    out[zi].point_count = count[zi];
    if (count[zi] > 0) {
      out[zi].mean_score = sum[zi] / static_cast<double>(count[zi]);
      with_data.push_back(zi);
    }
  }
  std::sort(with_data.begin(), with_data.end(), [&](std::size_t a, std::size_t b) {
    if (*out[a].mean_score != *out[b].mean_score) return *out[a].mean_score < *out[b].mean_score;
    return out[a].zone_id < out[b].zone_id;
  });
  const std::size_t m = with_data.size();
  for (std::size_t pos = 0; pos < m; ++pos)
    out[with_data[pos]].percentile_rank =
        m == 1 ? 1.0 : static_cast<double>(pos) / static_cast<double>(m - 1);
  return out;
}

/// Field rows must be the graph's points in id order.
inline std::vector<ZoneAggregate> aggregate_zones(const ScoreField& field, const SegmentizedGraph& g,
                                                  const std::vector<Zone>& zones) {
  if (field.size() != g.size())
    throw ValidationError("score field does not match the segmentized graph");
  for (std::size_t r = 0; r < field.size(); ++r)
    if (field.point_ids[r] != r) throw ValidationError("score field rows are not in point-id order");
  return aggregate_zones(field, g.positions(), g.index(), zones);
}

/// Percentile of each scored point among all scored points, ties broken by
/// row order; unscored points get none.
inline std::vector<std::optional<double>> point_percentiles(const ScoreField& field) {
  std::vector<std::size_t> order;
  for (std::size_t r = 0; r < field.size(); ++r)
    if (field.has_score(r)) order.push_back(r);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return field.scores[a] < field.scores[b]; });
  std::vector<std::optional<double>> out(field.size());
  const std::size_t m = order.size();
  for (std::size_t pos = 0; pos < m; ++pos)
    out[order[pos]] = m == 1 ? 1.0 : static_cast<double>(pos) / static_cast<double>(m - 1);
  return out;
}

struct ZoneRanking {
  std::vector<ZoneAggregate> top;     // best first
  std::vector<ZoneAggregate> bottom;  // worst first
};

/// Top band: percentile >= 1 - band; bottom band: percentile <= band. A zone
/// that qualifies for both (the median at band 0.5) is listed in the top band only.
inline ZoneRanking rank_zones(const std::vector<ZoneAggregate>& aggs, double band) {
  if (!(band > 0.0 && band <= 0.5)) throw ValidationError("band must lie in (0, 0.5]");
  constexpr double eps = 1e-12;
  ZoneRanking r;
  for (const auto& z : aggs) {
    if (!z.percentile_rank) continue;
    if (*z.percentile_rank >= 1.0 - band - eps)
      r.top.push_back(z);
    else if (*z.percentile_rank <= band + eps)
      r.bottom.push_back(z);
  }
  std::sort(r.top.begin(), r.top.end(), [](const auto& a, const auto& b) {
    if (*a.mean_score != *b.mean_score) return *a.mean_score > *b.mean_score;
    return a.zone_id < b.zone_id;
  });
  std::sort(r.bottom.begin(), r.bottom.end(), [](const auto& a, const auto& b) {
    if (*a.mean_score != *b.mean_score) return *a.mean_score < *b.mean_score;
    return a.zone_id < b.zone_id;
  });
  return r;
}

/// Max zone mean over min zone mean; undefined unless every mean is positive.
inline std::optional<double> zone_ratio(const std::vector<ZoneAggregate>& aggs) {
  std::optional<double> lo, hi;
  for (const auto& z : aggs) {
    if (!z.mean_score) continue;
    lo = lo ? std::min(*lo, *z.mean_score) : *z.mean_score;
    hi = hi ? std::max(*hi, *z.mean_score) : *z.mean_score;
  }
  if (!lo || !(*lo > 0.0)) return std::nullopt;
  return *hi / *lo;
}

namespace detail {

inline std::vector<FeatureId> validate_profile(const RobotProfile& profile,
                                               const FeatureCatalog& catalog) {
  if (profile.included_features.empty())
    throw ValidationError("profile '" + profile.name + "' includes no features");
  std::vector<FeatureId> ids = profile.included_features;
  ContingencyMatrix::check_unique(ids);
  for (const auto& id : ids) {
    if (!catalog.find(id))
      throw ValidationError("profile '" + profile.name + "': unknown feature '" + id + "'");
    if (catalog.is_excluded(id))
      throw ValidationError("profile '" + profile.name + "': feature '" + id +
                            "' is excluded from the catalog");
  }
  for (const auto& [id, pol] : profile.polarity_overrides) {
    if (!catalog.find(id))
      throw ValidationError("profile '" + profile.name + "': polarity override for unknown feature '" +
                            id + "'");
    if (pol != 1 && pol != -1)
      throw ValidationError("profile '" + profile.name + "': polarity for '" + id +
                            "' must be +1 or -1");
  }
  for (const auto& [id, params] : profile.extractor_param_overrides)
    if (!catalog.find(id))
      throw ValidationError("profile '" + profile.name + "': parameter override for unknown feature '" +
                            id + "'");
  return ids;
}

inline PolarityMap profile_polarities(const RobotProfile& profile, const FeatureCatalog& catalog,
                                      const std::vector<FeatureId>& ids) {
  PolarityMap pol;
  for (const auto& id : ids) {
    auto o = profile.polarity_overrides.find(id);
    pol[id] = o != profile.polarity_overrides.end() ? o->second : catalog.find(id)->polarity;
  }
  return pol;
}

}  // namespace detail

/// Profile weights from the full contingency matrix (eigen recomputation).
inline ProfileWeights apply_profile(const RobotProfile& profile, const ContingencyMatrix& base,
                                    const FeatureCatalog& catalog) {
  const auto ids = detail::validate_profile(profile, catalog);
  ProfileWeights out;
  if (ids.size() == base.size() &&
      std::all_of(ids.begin(), ids.end(), [&](const auto& id) { return base.index_of(id).has_value(); }))
    out.weights = principal_weights(base);
  else
    out.weights = subset_weights(base, ids);
  out.polarities = detail::profile_polarities(profile, catalog, ids);
  return out;
}

/// Profile weights from a published weight column (simple rescaling).
inline ProfileWeights apply_profile(const RobotProfile& profile, const WeightSet& fixture,
                                    const FeatureCatalog& catalog) {
  const auto ids = detail::validate_profile(profile, catalog);
  ProfileWeights out;
  out.weights = fixture.renormalized(ids, "subset-of:" + fixture.source());
  out.polarities = detail::profile_polarities(profile, catalog, ids);
  return out;
}

}  // namespace robotability
