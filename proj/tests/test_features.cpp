#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "robotability/features.hpp"
#include "robotability/fixtures.hpp"
#include "robotability/synth.hpp"

using namespace robotability;

namespace {

// Straight 100 m street along x with a sample every 10 m.
struct Street {
  SidewalkGraph graph;
  SegmentizedGraph points;
  Street() {
    graph = build_graph({{"a", {0, 0}}, {"b", {100, 0}}},
                        {{"e", "a", "b", {}, std::nullopt, {{"width", 3.0}}}});
    points = segmentize(graph, 10.0);
  }
  // Point id at x (ids are 0 for x=0, 1 for x=100, then 2.. for 10..90).
  PointId at(double x) const {
    for (PointId p = 0; p < points.size(); ++p)
      if (points.positions()[p].x == x) return p;
    return 0;
  }
};

FeatureDef feature(ExtractorKind k, std::vector<std::string> sources = {}, std::map<std::string, double> params = {}) {
  FeatureDef f;
  f.id = "f";
  f.extractor = k;
  f.sources = std::move(sources);
  f.params = std::move(params);
  return f;
}

}  // namespace

TEST(MinMax, MapsToUnitIntervalAndHandlesDegenerate) {
  const std::vector<double> raw{2, 4, NAN, 6};
  const auto c = minmax_normalize(raw);
  EXPECT_EQ(c.values[0], 0.0);
  EXPECT_EQ(c.values[1], 0.5);
  EXPECT_TRUE(std::isnan(c.values[2]));
  EXPECT_EQ(c.values[3], 1.0);
  EXPECT_EQ(c.stats.min, 2.0);
  EXPECT_EQ(c.stats.max, 6.0);
  EXPECT_FALSE(c.stats.degenerate);
  const auto d = minmax_normalize(std::vector<double>{3, 3, NAN});
  EXPECT_TRUE(d.stats.degenerate);
  EXPECT_EQ(d.values[0], 0.5);
  EXPECT_TRUE(std::isnan(d.values[2]));
  EXPECT_THROW(minmax_normalize(std::vector<double>{NAN, NAN}), DataError);
}

TEST(DensityJoin, ClassWeightsWithinRadius) {
  const Street s;
  PointDataset items;
  items.positions = {{50, 1}, {52, 0}, {90, 0}};
  items.classes = {"tree", "bench", "bench"};
  const auto v = density_join(s.points, items, {{"tree", 0.25}, {"bench", 2.0}}, 5.0);
  EXPECT_DOUBLE_EQ(v[s.at(50)], 2.25);
  EXPECT_DOUBLE_EQ(v[s.at(60)], 0.0);
  EXPECT_DOUBLE_EQ(v[s.at(90)], 2.0);
  items.classes[0] = "unknown";
  EXPECT_THROW(density_join(s.points, items, {{"bench", 2.0}}, 5.0), ValidationError);
  EXPECT_THROW(density_join(s.points, items, {}, 0.0), ValidationError);
}

TEST(ObservationJoin, NearestPointMeanAndMissing) {
  const Street s;
  const std::vector<Vec2> pos{{21, 0}, {19, 3}, {88, 0}};
  const std::vector<double> counts{10, 20, 7};
  const auto v = observation_count_join(s.points, pos, counts);
  EXPECT_DOUBLE_EQ(v[s.at(20)], 15.0);
  EXPECT_DOUBLE_EQ(v[s.at(90)], 7.0);
  EXPECT_TRUE(std::isnan(v[s.at(50)]));
  EXPECT_THROW(observation_count_join(s.points, pos, std::vector<double>{1, -1, 0}), ValidationError);
  EXPECT_THROW(observation_count_join(s.points, pos, std::vector<double>{1}), ValidationError);
}

TEST(NearestFacility, ProximityIsOneMinusScaledDistance) {
  const Street s;
  const std::vector<Vec2> fac{{0, 0}};
  const auto d = nearest_facility_distance(s.points, fac);
  EXPECT_DOUBLE_EQ(d[s.at(30)], 30.0);
  const auto p = nearest_facility_proximity(s.points, fac);
  EXPECT_DOUBLE_EQ(p.values[s.at(0)], 1.0);
  EXPECT_DOUBLE_EQ(p.values[s.at(100)], 0.0);
  EXPECT_DOUBLE_EQ(p.values[s.at(30)], 0.7);
  EXPECT_THROW(nearest_facility_distance(s.points, {}), DataError);
}

TEST(ThresholdBinary, StrictAndConjunctive) {
  EXPECT_EQ(threshold_binary(std::vector<double>{9, 10, 11, NAN}, 10), (std::vector<double>{0, 0, 1, 0}));
  const std::vector<std::vector<double>> ch{{20, 20, 5}, {20, 5, 20}};
  EXPECT_EQ(threshold_binary_all(ch, 10), (std::vector<double>{1, 0, 0}));
  EXPECT_THROW(threshold_binary_all({}, 10), ValidationError);
}

TEST(AdditiveLayers, CountsLayersNotItems) {
  const Street s;
  const std::vector<std::vector<Vec2>> layers{{{50, 0}, {51, 0}}, {{52, 0}}, {}, {{100, 50}}};
  const auto v = additive_layer_count(s.points, layers, 5.0);
  EXPECT_DOUBLE_EQ(v[s.at(50)], 2.0);
  EXPECT_DOUBLE_EQ(v[s.at(0)], 0.0);
}

TEST(Slope, MatchesOracleOnRandomGraph) {
  synth::SynthConfig cfg;
  cfg.blocks = 3;
  cfg.jitter = 0.2;
  const auto city = synth::synth_city(cfg);
  const auto g = segmentize(city.graph, 12.0);
  std::mt19937_64 rng(8);
  std::vector<double> z(g.size());
  for (auto& v : z) v = oracle::uniform(rng, 0, 20);
  const std::vector<Vec2> pts(g.positions().begin(), g.positions().end());
  for (std::size_t k : {2u, 5u, 8u}) {
    const auto v = slope_gradient_from_elevations(g, z, k, 30.0);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double e = oracle::slope_at(p, pts, z, k, 30.0);
      if (std::isnan(e)) {
        EXPECT_TRUE(std::isnan(v[p]));
      } else {
        EXPECT_NEAR(v[p], e, 1e-12);
      }
    }
  }
}

TEST(Slope, IsolatedPointIsMissingAndValidation) {
  const Street s;
  std::vector<double> z(s.points.size(), 0.0);
  const auto v = slope_gradient_from_elevations(s.points, z, 2, 5.0);
  for (double x : v) EXPECT_TRUE(std::isnan(x));
  EXPECT_THROW(slope_gradient_from_elevations(s.points, z, 0, 5.0), ValidationError);
  EXPECT_THROW(slope_gradient_from_elevations(s.points, z, 2, 0.0), ValidationError);
  z[3] = NAN;
  EXPECT_THROW(slope_gradient_from_elevations(s.points, z, 2, 15.0), DataError);
}

TEST(Elevation, BilinearIsExactOnPlanes) {
  // 5 x 4 raster of z = 2 + 0.1 x - 0.05 y at cell centers, origin (0, 0), cell 10.
  const std::size_t cols = 5, rows = 4;
  std::vector<double> vals;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = 5.0 + 10.0 * static_cast<double>(c);
      const double y = 40.0 - 5.0 - 10.0 * static_cast<double>(r);
      vals.push_back(2 + 0.1 * x - 0.05 * y);
    }
  const ElevationSampler es(0, 0, 10, cols, rows, vals);
  EXPECT_NEAR(es.sample({12.5, 21.0}), 2 + 1.25 - 1.05, 1e-12);
  bool clamped = false;
  es.sample({-100, 20}, &clamped);
  EXPECT_TRUE(clamped);
  const ElevationSampler strict(0, 0, 10, cols, rows, vals, std::nullopt, ElevationSampler::OutOfBounds::Error);
  EXPECT_THROW(strict.sample({-100, 20}), DataError);
  vals[0] = -9999;
  const ElevationSampler holes(0, 0, 10, cols, rows, vals, -9999.0);
  EXPECT_TRUE(std::isnan(holes.sample({5, 35})));
  EXPECT_THROW(ElevationSampler(0, 0, 0, cols, rows, vals), ValidationError);
  EXPECT_THROW(ElevationSampler(0, 0, 1, cols, rows + 1, vals), ValidationError);
}

TEST(Extract, InvertAndEdgeAttribute) {
  const Street s;
  DataSources src;
  auto f = feature(ExtractorKind::EdgeAttribute);
  f.attribute = "width";
  const auto c = extract_feature(f, s.graph, s.points, src, {});
  EXPECT_TRUE(c.stats.degenerate);
  for (double v : c.values) EXPECT_EQ(v, 0.5);
  f.attribute = "absent";
  EXPECT_THROW(extract_feature(f, s.graph, s.points, src, {}), DataError);

  src.datasets["obs"].positions = {{0, 0}, {100, 0}};
  src.datasets["obs"].channels = {{1.0, 3.0}};
  auto o = feature(ExtractorKind::ObservationCount, {"obs"}, {{"invert", 1}});
  const auto inv = extract_feature(o, s.graph, s.points, src, {});
  EXPECT_EQ(inv.values[s.at(0)], 1.0);
  EXPECT_EQ(inv.values[s.at(100)], 0.0);
  EXPECT_TRUE(std::isnan(inv.values[s.at(50)]));
}

TEST(Extract, MissingSourcesAreDataErrors) {
  const Street s;
  DataSources src;
  EXPECT_THROW(extract_feature(feature(ExtractorKind::DensityJoin, {"nope"}), s.graph, s.points, src, {}), DataError);
  EXPECT_THROW(extract_feature(feature(ExtractorKind::SlopeGradient), s.graph, s.points, src, {}), DataError);
  EXPECT_THROW(extract_feature(feature(ExtractorKind::AdditiveLayers), s.graph, s.points, src, {}), DataError);
  EXPECT_THROW(extract_feature(feature(ExtractorKind::Uniform, {}, {{"value", 2}}), s.graph, s.points, src, {}),
               ValidationError);
}

TEST(Catalog, ReferenceShape) {
  const auto c = fixtures::reference_catalog();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.features.size(), 24u);
  EXPECT_EQ(c.active_ids().size(), 19u);
  EXPECT_TRUE(c.is_excluded("weather"));
  EXPECT_EQ(c.find("slope_gradient")->polarity, -1);
  EXPECT_EQ(c.find("charging_proximity")->polarity, 1);
  auto bad = c;
  bad.features.push_back(bad.features.front());
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Catalog, PublishedColumnsSumToOne) {
  using fixtures::WeightColumn;
  for (auto col : {WeightColumn::All, WeightColumn::Academia, WeightColumn::Industry, WeightColumn::Other,
                   WeightColumn::NycPoc, WeightColumn::Trashbot}) {
    double s = 0;
    for (const auto& row : fixtures::kPublishedWeights)
      if (row.weights[static_cast<std::size_t>(col)] >= 0) s += row.weights[static_cast<std::size_t>(col)];
    EXPECT_NEAR(s, 1.0, 0.006) << fixtures::to_string(col);
  }
  EXPECT_EQ(*fixtures::published_weight(WeightColumn::All, "pedestrian_density"), 0.111);
  EXPECT_EQ(*fixtures::published_weight(WeightColumn::Trashbot, "pedestrian_density"), 0.173);
  EXPECT_FALSE(fixtures::published_weight(WeightColumn::NycPoc, "weather"));
  EXPECT_EQ(fixtures::fixture_weights(WeightColumn::NycPoc).size(), 19u);
}

TEST(Assemble, SynthCityMatrixIsInUnitInterval) {
  const auto city = synth::synth_city({});
  const auto g = segmentize(city.graph, 15.0);
  const auto catalog = fixtures::reference_catalog();
  ExtractionOptions o;
  o.workers = 1;
  const auto m = assemble_feature_matrix(city.graph, g, catalog, city.sources, o);
  EXPECT_EQ(m.rows(), 1441u);
  EXPECT_EQ(m.cols(), 19u);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    EXPECT_GE(m.values[i], 0.0);
    EXPECT_LE(m.values[i], 1.0);
  }
  o.workers = 4;
  const auto m4 = assemble_feature_matrix(city.graph, g, catalog, city.sources, o);
  EXPECT_EQ(m.values, m4.values);
  EXPECT_EQ(m.missing, m4.missing);
  EXPECT_THROW(assemble_feature_matrix(city.graph, g, catalog, city.sources, o, std::vector<FeatureId>{"weather"}),
               ValidationError);
}
