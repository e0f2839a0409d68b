#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "robotability/sidewalk_graph.hpp"

using namespace robotability;

namespace {

SidewalkGraph square() {
  std::vector<SidewalkNode> n{{"a", {0, 0}}, {"b", {30, 0}}, {"c", {30, 30}}, {"d", {0, 30}}};
  std::vector<EdgeInput> e{{"ab", "a", "b", {}, std::nullopt, {{"width", 2.0}}},
                           {"bc", "b", "c", {}, std::nullopt, {}},
                           {"cd", "c", "d", {}, std::nullopt, {}},
                           {"da", "d", "a", {}, std::nullopt, {}}};
  return build_graph(n, e);
}

}  // namespace

TEST(BuildGraph, LengthsAndAttributes) {
  const auto g = square();
  EXPECT_EQ(g.nodes().size(), 4u);
  EXPECT_DOUBLE_EQ(g.total_length(), 120.0);
  EXPECT_EQ(g.edges()[0].attributes.at("width"), 2.0);
  EXPECT_EQ(*g.node_index("c"), 2u);
  EXPECT_FALSE(g.node_index("zz"));
}

TEST(BuildGraph, PolylineArcLength) {
  std::vector<SidewalkNode> n{{"a", {0, 0}}, {"b", {10, 0}}};
  std::vector<EdgeInput> e{{"e", "a", "b", {{0, 0}, {5, 5}, {10, 0}}, std::nullopt, {}}};
  const auto g = build_graph(n, e);
  EXPECT_NEAR(g.edges()[0].length, 2 * std::sqrt(50.0), 1e-12);
}

TEST(BuildGraph, Rejections) {
  std::vector<SidewalkNode> n{{"a", {0, 0}}, {"b", {10, 0}}};
  auto bad = [&](std::vector<SidewalkNode> nodes, EdgeInput e) {
    EXPECT_THROW(build_graph(nodes, {e}), ValidationError) << e.id;
  };
  bad(n, {"missing node", "a", "q", {}, std::nullopt, {}});
  bad({{"a", {0, 0}}, {"a", {1, 0}}}, {"dup node", "a", "a", {}, std::nullopt, {}});
  bad({{"a", {0, 0}}, {"b", {NAN, 0}}}, {"nan", "a", "b", {}, std::nullopt, {}});
  bad(n, {"detached", "a", "b", {{0, 1}, {10, 0}}, std::nullopt, {}});
  bad(n, {"short", "a", "b", {{0, 0}}, std::nullopt, {}});
  bad(n, {"length", "a", "b", {}, 11.0, {}});
  EXPECT_NO_THROW(build_graph(n, {{"ok", "a", "b", {}, 10.0, {}}}));
  EXPECT_THROW(build_graph(n, {{"e", "a", "b", {}, std::nullopt, {}}, {"e", "b", "a", {}, std::nullopt, {}}}),
               ValidationError);
}

TEST(Segmentize, CountLawAndSharedEndpoints) {
  const auto g = square();
  const auto s = segmentize(g, 7.0);  // ceil(30/7) = 5 intervals per edge
  for (const auto& ids : s.edge_points()) EXPECT_EQ(ids.size(), 6u);
  EXPECT_EQ(s.size(), 4u + 4u * 4u);
  EXPECT_EQ(s.edge_points()[0].back(), s.edge_points()[1].front());
  EXPECT_EQ(s.edge_points()[3].back(), s.edge_points()[0].front());
  for (std::size_t k = 0; k < 6; ++k) {
    const auto& p = s.points()[s.edge_points()[0][k]];
    EXPECT_NEAR(p.pos.x, 6.0 * static_cast<double>(k), 1e-12);
    EXPECT_NEAR(p.pos.y, 0.0, 1e-12);
  }
}

TEST(Segmentize, ExactMultipleAndShortEdges) {
  const auto s = segmentize(square(), 15.0);
  for (const auto& ids : s.edge_points()) EXPECT_EQ(ids.size(), 3u);
  const auto t = segmentize(square(), 100.0);
  EXPECT_EQ(t.size(), 4u);
}

TEST(Segmentize, OffsetsAndProvenance) {
  const auto g = square();
  const auto s = segmentize(g, 10.0);
  std::set<PointId> seen;
  for (std::size_t e = 0; e < g.edges().size(); ++e)
    for (auto id : s.edge_points()[e])
      if (seen.insert(id).second) {
        const auto& p = s.points()[id];
        EXPECT_EQ(p.edge, e);
        EXPECT_NEAR(oracle::dist(p.pos, g.nodes()[g.edges()[e].a].pos), p.offset, 1e-9);
      }
  EXPECT_EQ(seen.size(), s.size());
}

TEST(Segmentize, RejectsBadThreshold) {
  EXPECT_THROW(segmentize(square(), 0.0), ValidationError);
  EXPECT_THROW(segmentize(square(), -1.0), ValidationError);
  EXPECT_THROW(segmentize(square(), INFINITY), ValidationError);
  EXPECT_THROW(segmentize(build_graph({{"a", {0, 0}}}, {}), 5.0), ValidationError);
}
