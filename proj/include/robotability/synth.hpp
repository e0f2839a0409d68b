#pragma once

// Seeded synthetic city: a block-grid sidewalk network with a planted
// "downtown" where crowding, traffic and clutter peak and sidewalks are worst,
// plus every data source the reference catalog reads. All randomness comes
// from one mt19937_64 stream, so a seed fixes every output byte.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "robotability/ahp.hpp"
#include "robotability/features.hpp"
#include "robotability/fixtures.hpp"
#include "robotability/geometry.hpp"
#include "robotability/scoring.hpp"
#include "robotability/sidewalk_graph.hpp"

namespace robotability::synth {

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t blocks = 10;     // blocks per side; (blocks+1)^2 intersections
  double block_size = 100.0;   // metres
  double jitter = 0.0;         // node displacement, fraction of block_size
  double downtown_sigma = 1.5; // gradient width in blocks
  double intensity = 1.0;      // strength of the planted gradient, 0 disables it
  std::size_t downtown_zones = 3;  // side of the central square of downtown zones
  std::size_t votes_per_pair = 30;
};

struct SynthCity {
  SynthConfig config;
  SidewalkGraph graph;
  std::vector<Zone> zones;
  std::vector<std::string> downtown_zone_ids;
  DataSources sources;
  std::map<std::string, std::vector<std::string>> channel_names;
  std::vector<PairwiseVote> votes;
  Vec2 center;
  nlohmann::json planting;
};

namespace detail {

class Stream {
public:
  explicit Stream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1), built from the top 53 bits so it is portable.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  /// Integer with expectation `mean` (floor plus a Bernoulli remainder).
  std::size_t count(double mean) {
    const double f = std::floor(mean);
    return static_cast<std::size_t>(f) + (uniform() < mean - f ? 1 : 0);
  }

private:
  std::mt19937_64 eng_;
};

inline std::string grid_id(const char* prefix, std::size_t i, std::size_t j) {
  return std::string(prefix) + std::to_string(i) + "_" + std::to_string(j);
}

}  // namespace detail

/// Downtown strength in [0, 1] at p: a Gaussian bump around the city center.
inline double downtown_level(const SynthConfig& cfg, Vec2 center, Vec2 p) {
  const double s = cfg.downtown_sigma * cfg.block_size;
  const double d2 = squared_distance(p, center);
  return std::exp(-d2 / (2.0 * s * s));
}

inline SynthCity synth_city(const SynthConfig& cfg) {
  if (cfg.blocks < 1) throw ValidationError("synthetic city needs at least one block");
  if (!(cfg.block_size > 0.0)) throw ValidationError("block size must be > 0");
  if (!(cfg.jitter >= 0.0 && cfg.jitter < 0.25)) throw ValidationError("jitter must lie in [0, 0.25)");
  if (cfg.downtown_zones > cfg.blocks + 1) throw ValidationError("downtown larger than the city");

  detail::Stream rng(cfg.seed);
  SynthCity city;
  city.config = cfg;
  const std::size_t n = cfg.blocks;
  const double B = cfg.block_size;
  city.center = {B * static_cast<double>(n) / 2.0, B * static_cast<double>(n) / 2.0};
  auto level = [&](Vec2 p) { return cfg.intensity * downtown_level(cfg, city.center, p); };

  // Network.
  std::vector<SidewalkNode> nodes;
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i) {
      Vec2 p{B * static_cast<double>(i), B * static_cast<double>(j)};
      if (cfg.jitter > 0.0) {
        p.x += rng.uniform(-cfg.jitter, cfg.jitter) * B;
        p.y += rng.uniform(-cfg.jitter, cfg.jitter) * B;
      }
      nodes.push_back({detail::grid_id("n", i, j), p});
    }
  auto node_at = [&](std::size_t i, std::size_t j) -> const SidewalkNode& { return nodes[j * (n + 1) + i]; };
  std::vector<EdgeInput> edges;
  auto add_edge = [&](const SidewalkNode& a, const SidewalkNode& b, std::string id) {
    const Vec2 mid = lerp(a.pos, b.pos, 0.5);
    const double g = level(mid);
    EdgeInput e{std::move(id), a.id, b.id, {}, std::nullopt, {}};
    e.attributes["width"] = 2.0 + 3.0 * (1.0 - g) * rng.uniform(0.6, 1.0);
    e.attributes["surface_rating"] = 1.0 + 4.0 * (1.0 - 0.8 * g) * rng.uniform(0.7, 1.0);
    e.attributes["land_use_intensity"] = 0.1 + 0.9 * g + 0.1 * rng.uniform();
    e.attributes["speed_limit"] = 25.0 + 5.0 * static_cast<double>(rng.below(4));
    e.attributes["bike_lane_class"] = static_cast<double>(rng.below(4));
    edges.push_back(std::move(e));
  };
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      add_edge(node_at(i, j), node_at(i + 1, j), detail::grid_id("h", i, j));
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      add_edge(node_at(i, j), node_at(i, j + 1), detail::grid_id("v", i, j));
  city.graph = build_graph(nodes, edges);

  // Zones: one square per intersection, centered on its unjittered position.
  const std::size_t lo = (n + 1 - cfg.downtown_zones) / 2;
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i) {
      const double cx = B * static_cast<double>(i), cy = B * static_cast<double>(j), h = B / 2;
      Zone z{detail::grid_id("z", i, j), {{{cx - h, cy - h}, {cx + h, cy - h}, {cx + h, cy + h}, {cx - h, cy + h}}, {}}};
      if (i >= lo && i < lo + cfg.downtown_zones && j >= lo && j < lo + cfg.downtown_zones)
        city.downtown_zone_ids.push_back(z.id);
      city.zones.push_back(std::move(z));
    }

  // Sampling helpers over the network.
  const auto& gedges = city.graph.edges();
  auto on_edge = [&](const SidewalkEdge& e, double t, double side) {
    const Vec2 a = e.polyline.front(), b = e.polyline.back();
    const Vec2 p = lerp(a, b, t);
    const double len = distance(a, b);
    return Vec2{p.x - (b.y - a.y) / len * side, p.y + (b.x - a.x) / len * side};
  };
  auto& ds = city.sources.datasets;

  // Dashcam-style observations: a few per edge, count rising toward downtown.
  auto observations = [&](const std::string& name, double base, double peak, double per_edge) {
    PointDataset obs;
    obs.channels.resize(1);
    for (const auto& e : gedges) {
      const std::size_t k = rng.count(per_edge);
      for (std::size_t s = 0; s < k; ++s) {
        const Vec2 p = on_edge(e, rng.uniform(), rng.uniform(-2.0, 2.0));
        const double lambda = base + peak * level(p);
        obs.positions.push_back(p);
        obs.channels[0].push_back(std::floor(lambda * rng.uniform(0.5, 1.5)));
      }
    }
    city.channel_names[name] = {"count"};
    ds[name] = std::move(obs);
  };
  observations("pedestrians", 2.0, 40.0, 4.0);
  observations("vehicles", 3.0, 25.0, 3.0);
  observations("bicycles", 0.5, 8.0, 2.0);

  // Street furniture by class, denser downtown.
  {
    PointDataset f;
    std::vector<std::string> classes;
    for (const auto& [cls, w] : fixtures::furniture_weights()) classes.push_back(cls);
    for (const auto& e : gedges) {
      const double g = level(lerp(e.polyline.front(), e.polyline.back(), 0.5));
      const std::size_t k = rng.count(2.0 + 14.0 * g);
      for (std::size_t s = 0; s < k; ++s) {
        f.positions.push_back(on_edge(e, rng.uniform(), rng.uniform(1.0, 4.0)));
        f.classes.push_back(classes[rng.below(classes.size())]);
      }
    }
    ds["furniture"] = std::move(f);
  }

  // Point items around intersections and scattered along edges.
  {
    PointDataset collisions, ramps, cctv, charging;
    for (const auto& nd : city.graph.nodes()) {
      const double g = level(nd.pos);
      const std::size_t k = rng.count(0.3 + 6.0 * g);
      for (std::size_t s = 0; s < k; ++s)
        collisions.positions.push_back({nd.pos.x + rng.uniform(-6.0, 6.0), nd.pos.y + rng.uniform(-6.0, 6.0)});
      for (int corner = 0; corner < 4; ++corner)
        if (rng.uniform() < 0.7)
          ramps.positions.push_back({nd.pos.x + ((corner & 1) ? 3.0 : -3.0), nd.pos.y + ((corner & 2) ? 3.0 : -3.0)});
    }
    for (const auto& e : gedges) {
      if (rng.uniform() < 0.35) cctv.positions.push_back(on_edge(e, rng.uniform(), rng.uniform(2.0, 6.0)));
      if (rng.uniform() < 0.04) charging.positions.push_back(on_edge(e, rng.uniform(), rng.uniform(3.0, 8.0)));
    }
    if (charging.positions.empty()) charging.positions.push_back(on_edge(gedges.front(), 0.5, 4.0));
    ds["collisions"] = std::move(collisions);
    ds["curb_ramps"] = std::move(ramps);
    ds["cctv"] = std::move(cctv);
    ds["charging"] = std::move(charging);
  }

  // Traffic-management layers: each picks a random subset of intersections.
  {
    const double share[] = {0.10, 0.15, 0.08, 0.12, 0.05, 0.20};
    const auto layers = fixtures::traffic_layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      PointDataset layer;
      for (const auto& nd : city.graph.nodes())
        if (rng.uniform() < share[l]) layer.positions.push_back({nd.pos.x + rng.uniform(-3.0, 3.0), nd.pos.y + rng.uniform(-3.0, 3.0)});
      if (layer.positions.empty()) layer.positions.push_back(city.graph.nodes().front().pos);
      ds[layers[l]] = std::move(layer);
    }
  }

  // Wireless speed-test samples on a 25 m lattice (download, upload in Mbps).
  const double margin = 2.0 * B;
  const double extent = B * static_cast<double>(n);
  {
    PointDataset w;
    w.channels.resize(2);
    for (double y = -B / 2; y <= extent + B / 2; y += 25.0)
      for (double x = -B / 2; x <= extent + B / 2; x += 25.0) {
        w.positions.push_back({x, y});
        w.channels[0].push_back(rng.uniform(4.0, 80.0));
        w.channels[1].push_back(rng.uniform(2.0, 40.0));
      }
    city.channel_names["wireless"] = {"download", "upload"};
    ds["wireless"] = std::move(w);
  }

  // Elevation: gentle rolling terrain plus a steep mound downtown.
  {
    const double cell = 10.0;
    const double x0 = -margin, y0 = -margin;
    const auto cols = static_cast<std::size_t>(std::ceil((extent + 2 * margin) / cell));
    const auto rows = cols;
    const double phase = rng.uniform(0.0, 6.283185307179586);
    std::vector<double> z(cols * rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const Vec2 p{x0 + (static_cast<double>(c) + 0.5) * cell,
                     y0 + (static_cast<double>(rows - 1 - r) + 0.5) * cell};
        z[r * cols + c] = 20.0 + 3.0 * std::sin(p.x / 170.0 + phase) * std::cos(p.y / 230.0) +
                          18.0 * level(p);
      }
    city.sources.elevation = ElevationSampler(x0, y0, cell, cols, rows, std::move(z));
  }

  // Expert votes drawn from the published overall column over the active features.
  {
    const auto catalog = fixtures::reference_catalog();
    const auto ids = catalog.active_ids();
    const auto w = fixtures::fixture_weights(fixtures::WeightColumn::All).renormalized(ids, "plant");
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        const double p = w.at(ids[i]) / (w.at(ids[i]) + w.at(ids[j]));
        for (std::size_t v = 0; v < cfg.votes_per_pair; ++v) {
          const std::string rater = "r" + std::to_string(rng.below(12));
          city.votes.push_back({rater, ids[i], ids[j], rng.uniform() < p ? ids[i] : ids[j]});
        }
      }
  }

  city.planting = {{"seed", cfg.seed},
                   {"blocks", cfg.blocks},
                   {"block_size", cfg.block_size},
                   {"jitter", cfg.jitter},
                   {"center", {city.center.x, city.center.y}},
                   {"downtown_sigma_blocks", cfg.downtown_sigma},
                   {"intensity", cfg.intensity},
                   {"downtown_zones", city.downtown_zone_ids},
                   {"gradients",
                    {{"pedestrians", "count 2 + 40 g"},
                     {"vehicles", "count 3 + 25 g"},
                     {"bicycles", "count 0.5 + 8 g"},
                     {"furniture", "items per edge 2 + 14 g"},
                     {"collisions", "per node 0.3 + 6 g"},
                     {"width", "2 + 3 (1 - g) u"},
                     {"surface_rating", "1 + 4 (1 - 0.8 g) u"},
                     {"land_use_intensity", "0.1 + 0.9 g + 0.1 u"},
                     {"elevation", "mound of 18 m times g"}}},
                   {"g", "exp(-d^2 / (2 (sigma * block_size)^2)) * intensity"},
                   {"votes_per_pair", cfg.votes_per_pair}};
  return city;
}

}  // namespace robotability::synth
