// Acceptance suite: one line per criterion, "PASS <name>: ..." or "FAIL <name>: ...".
// Usage: acceptance [criterion ...]   (no arguments runs all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "robotability/ahp.hpp"
#include "robotability/features.hpp"
#include "robotability/fixtures.hpp"
#include "robotability/io.hpp"
#include "robotability/pipeline.hpp"
#include "robotability/scoring.hpp"
#include "robotability/service.hpp"
#include "robotability/sidewalk_graph.hpp"
#include "robotability/synth.hpp"

namespace rb = robotability;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and limits, fixed here for every criterion.
constexpr double kConsistencyTol = 1e-9;
constexpr double kConsistencySeconds = 1.0;
constexpr double kMonteCarloTol = 0.05;
constexpr double kInvariantTol = 1e-12;
constexpr double kSlopeTol = 1e-12;
constexpr double kScoringTol = 1e-12;
constexpr double kBottomBand = 0.10;
constexpr double kTrashbotTol = 1e-3;
constexpr double kExtractScoreSeconds = 60.0;
constexpr double kScoreSeconds = 10.0;
constexpr std::size_t kPerfPoints = 1'000'000;
constexpr std::size_t kPerfFeatures = 20;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- AHP

Outcome ahp_consistency() {
  std::mt19937_64 rng(20240601);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 8);
    std::vector<double> w(n);
    for (auto& x : w) x = oracle::uniform(rng, 0.01, 1.0);
    const double s = std::accumulate(w.begin(), w.end(), 0.0);
    const auto m = rb::ContingencyMatrix::consistent(oracle::names(n), w);
    const auto got = rb::principal_weights(m);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(got.entries()[i].second - w[i] / s));
  }
  const double secs = seconds_since(t0);
  return {worst <= kConsistencyTol && secs < kConsistencySeconds,
          fmt("100 vectors n=3..10, max error %.3g (tol %.0e), %.4f s (limit %.0f s)", worst, kConsistencyTol,
              secs, kConsistencySeconds)};
}

Outcome ahp_monte_carlo() {
  const std::vector<double> plant{0.4, 0.25, 0.15, 0.12, 0.08};
  double worst = 0.0;
  int rank_ok = 0;
  for (int seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    const auto votes = oracle::sample_votes(plant, 10000, rng);
    const auto m = rb::build_contingency_matrix(votes, oracle::names(5));
    const auto w = rb::principal_weights(m);
    std::vector<std::size_t> order(5);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return w.entries()[a].second > w.entries()[b].second; });
    if (order == std::vector<std::size_t>{0, 1, 2, 3, 4}) ++rank_ok;
    for (std::size_t i = 0; i < 5; ++i) worst = std::max(worst, std::abs(w.entries()[i].second - plant[i]));
  }
  return {rank_ok == 20 && worst <= kMonteCarloTol,
          fmt("20 seeds x 10000 votes: ranking exact %d/20, max |w - w*| %.4f (tol %.2f)", rank_ok, worst,
              kMonteCarloTol)};
}

Outcome ahp_invariants() {
  std::mt19937_64 rng(77);
  double worst_recip = 0.0, worst_sum = 0.0;
  int subset_mismatch = 0, nonpositive = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng() % 8;
    const auto ids = oracle::names(n);
    std::vector<double> w(n);
    for (auto& x : w) x = oracle::uniform(rng, 0.05, 1.0);
    const auto votes = oracle::sample_votes(w, rng() % 300, rng, 1 + rng() % 6);
    const auto m = rb::build_contingency_matrix(votes, ids);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) worst_recip = std::max(worst_recip, std::abs(m.at(i, j) * m.at(j, i) - 1.0));
    const auto ws = rb::principal_weights(m);
    double s = 0.0;
    for (const auto& [id, v] : ws.entries()) {
      s += v;
      nonpositive += v > 0.0 ? 0 : 1;
    }
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));

    // Subset: random keep set, listed in shuffled order.
    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), 0);
    std::shuffle(pick.begin(), pick.end(), rng);
    const std::size_t k = 2 + rng() % (n - 1);
    std::vector<rb::FeatureId> keep;
    for (std::size_t i = 0; i < k; ++i) keep.push_back(ids[pick[i]]);
    std::vector<std::size_t> rows(pick.begin(), pick.begin() + static_cast<long>(k));
    std::sort(rows.begin(), rows.end());
    std::vector<rb::FeatureId> sub_ids;
    std::vector<double> sub;
    for (auto r : rows) {
      sub_ids.push_back(ids[r]);
      for (auto c : rows) sub.push_back(m.entries()[r * n + c]);
    }
    const auto expect = rb::principal_weights(rb::ContingencyMatrix(sub_ids, sub, m.smoothing()));
    const auto got = rb::subset_weights(m, keep);
    if (expect.entries() != got.entries()) ++subset_mismatch;
  }
  const bool ok = worst_recip <= kInvariantTol && worst_sum <= kInvariantTol && subset_mismatch == 0 && nonpositive == 0;
  return {ok, fmt("1000 vote sets: max |M_ij M_ji - 1| %.3g, max |sum w - 1| %.3g (tol %.0e), "
                  "non-positive weights %d, subset mismatches %d",
                  worst_recip, worst_sum, kInvariantTol, nonpositive, subset_mismatch)};
}

Outcome transitivity_bruteforce() {
  std::mt19937_64 rng(4242);
  int cases = 0, mismatches = 0;
  std::size_t total_cycles = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng() % 6;
    const auto ids = oracle::names(n);
    std::vector<rb::PairwiseVote> votes;
    const std::size_t raters = 1 + rng() % 5;
    const std::size_t count = rng() % 120;
    for (std::size_t v = 0; v < count; ++v) {
      const std::size_t i = rng() % n, j = rng() % n;
      if (i == j) continue;
      votes.push_back({"r" + std::to_string(rng() % raters), ids[i], ids[j], (rng() & 1) ? ids[i] : ids[j]});
    }
    const auto report = rb::transitivity_report(votes, ids);
    const auto pooled = oracle::brute_force_cycles(votes, ids);
    bool ok = report.inter_rater_violations == pooled.cycles && report.triples_evaluated == pooled.decided;
    std::map<std::string, std::vector<rb::PairwiseVote>> by;
    for (const auto& v : votes) by[v.rater_id].push_back(v);
    if (report.intra_rater.size() != by.size()) ok = false;
    for (const auto& [r, rv] : by) {
      auto it = report.intra_rater.find(r);
      if (it == report.intra_rater.end() || it->second != oracle::brute_force_cycles(rv, ids).cycles) ok = false;
    }
    total_cycles += pooled.cycles;
    ++cases;
    mismatches += ok ? 0 : 1;
  }
  return {mismatches == 0 && cases >= 200,
          fmt("%d randomized vote sets (<= 8 features), %zu pooled cycles, mismatches %d", cases, total_cycles,
              mismatches)};
}

// ---------------------------------------------------------------- segmentization

Outcome segmentization() {
  std::mt19937_64 rng(9001);
  int law_fail = 0, gap_fail = 0, graphs = 0, edges_checked = 0;
  for (int trial = 0; trial < 60; ++trial, ++graphs) {
    const std::size_t nn = 3 + rng() % 10;
    std::vector<rb::SidewalkNode> nodes;
    for (std::size_t i = 0; i < nn; ++i)
      nodes.push_back({"n" + std::to_string(i), {oracle::uniform(rng, 0, 500), oracle::uniform(rng, 0, 500)}});
    std::vector<rb::EdgeInput> edges;
    const std::size_t ne = 2 + rng() % 15;
    for (std::size_t e = 0; e < ne; ++e) {
      const std::size_t a = rng() % nn;
      std::size_t b = rng() % nn;
      if (b == a) b = (a + 1) % nn;
      rb::EdgeInput in{"e" + std::to_string(e), nodes[a].id, nodes[b].id, {}, std::nullopt, {}};
      in.polyline.push_back(nodes[a].pos);
      for (std::size_t k = rng() % 3; k > 0; --k)
        in.polyline.push_back({oracle::uniform(rng, 0, 500), oracle::uniform(rng, 0, 500)});
      in.polyline.push_back(nodes[b].pos);
      edges.push_back(std::move(in));
    }
    const double T = oracle::uniform(rng, 2.0, 40.0);
    const auto g = rb::build_graph(nodes, edges);
    const auto s = rb::segmentize(g, T);
    for (std::size_t e = 0; e < g.edges().size(); ++e, ++edges_checked) {
      const auto& ids = s.edge_points()[e];
      const double L = g.edges()[e].length;
      if (ids.size() != static_cast<std::size_t>(std::ceil(L / T)) + 1) ++law_fail;
      for (std::size_t k = 1; k < ids.size(); ++k) {
        // Arc spacing along the edge, and the straight-line gap between samples.
        const double arc = L / static_cast<double>(ids.size() - 1);
        const double chord = oracle::dist(s.positions()[ids[k - 1]], s.positions()[ids[k]]);
        if (arc > T + 1e-9 || chord > T + 1e-9) {
          ++gap_fail;
          break;
        }
      }
    }
  }
  rb::synth::SynthConfig cfg;
  cfg.seed = 42;
  const auto city = rb::synth::synth_city(cfg);
  const auto s = rb::segmentize(city.graph, 15.0);
  std::size_t before = 0;
  for (const auto& ids : s.edge_points()) before += ids.size();
  const std::size_t per_edge = static_cast<std::size_t>(std::ceil(100.0 / 15.0)) + 1;
  const std::size_t expect_before = 220 * per_edge;
  const std::size_t expect_unique = 121 + 220 * (per_edge - 2);
  const bool grid_ok = city.graph.edges().size() == 220 && before == expect_before && s.size() == expect_unique;
  return {law_fail == 0 && gap_fail == 0 && grid_ok,
          fmt("%d random graphs / %d edges: count-law failures %d, gap failures %d; 10x10 grid: %zu edges, "
              "%zu points before dedup (expect %zu), %zu unique (expect %zu)",
              graphs, edges_checked, law_fail, gap_fail, city.graph.edges().size(), before, expect_before, s.size(),
              expect_unique)};
}

// ---------------------------------------------------------------- slope

rb::SegmentizedGraph line_graph(double length, double T) {
  std::vector<rb::SidewalkNode> nodes{{"a", {0, 0}}, {"b", {length, 0}}};
  std::vector<rb::EdgeInput> edges{{"e", "a", "b", {}, std::nullopt, {}}};
  return rb::segmentize(rb::build_graph(nodes, edges), T);
}

Outcome slope_gradient() {
  double worst_hand = 0.0;
  // x = 0, 10, 20; z = 0, 1, 2; K = 2, D = 15. Middle: mean(|-1/10|, |1/10|) = 0.1;
  // each end sees only the middle: 0.1.
  {
    const auto g = line_graph(20.0, 10.0);
    const auto v = rb::slope_gradient_from_elevations(g, std::vector<double>{0, 1, 2}, 2, 15.0);
    for (double got : v) worst_hand = std::max(worst_hand, std::abs(got - 0.1));
  }
  // x = 0, 10, 20, 30; z = 0, 1, 3, 6; K = 2, D = 15 (point order is 0, 30, 10, 20).
  // x=0: |1/10| = 0.1; x=10: (0.1 + 0.2)/2 = 0.15; x=20: (0.2 + 0.3)/2 = 0.25; x=30: 0.3.
  {
    const auto g = line_graph(30.0, 10.0);
    std::vector<double> z(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double x = g.positions()[p].x;
      z[p] = x == 0 ? 0 : x == 10 ? 1 : x == 20 ? 3 : 6;
    }
    const auto v = rb::slope_gradient_from_elevations(g, z, 2, 15.0);
    for (std::size_t p = 0; p < g.size(); ++p) {
      const double x = g.positions()[p].x;
      const double expect = x == 0 ? 0.1 : x == 10 ? 0.15 : x == 20 ? 0.25 : 0.3;
      worst_hand = std::max(worst_hand, std::abs(v[p] - expect));
    }
  }
  // x = 0..40 step 10, z = 0, 2, 2, 2, 10; K = 1 (nearest only, ties to the lower id), D = 10.
  // Same check against the independent oracle with larger K and D.
  {
    const auto g = line_graph(40.0, 10.0);
    std::vector<double> z(g.size());
    std::vector<rb::Vec2> pts(g.positions().begin(), g.positions().end());
    for (std::size_t p = 0; p < g.size(); ++p) z[p] = std::pow(pts[p].x / 10.0, 2.0);
    for (std::size_t k : {1u, 2u, 3u, 8u})
      for (double d : {10.0, 15.0, 25.0, 100.0}) {
        const auto v = rb::slope_gradient_from_elevations(g, z, k, d);
        for (std::size_t p = 0; p < g.size(); ++p) {
          if (k == 1) continue;  // equidistant neighbours make K = 1 tie-dependent
          worst_hand = std::max(worst_hand, std::abs(v[p] - oracle::slope_at(p, pts, z, k, d)));
        }
      }
  }
  // Flat terrain and offset invariance on a synthetic city.
  rb::synth::SynthConfig cfg;
  cfg.blocks = 4;
  const auto city = rb::synth::synth_city(cfg);
  const auto g = rb::segmentize(city.graph, 15.0);
  std::mt19937_64 rng(5);
  std::vector<double> flat(g.size(), 37.5), z(g.size()), z_off(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    z[p] = oracle::uniform(rng, 0.0, 50.0);
    z_off[p] = z[p] + 100.0;
  }
  const auto vf = rb::slope_gradient_from_elevations(g, flat, 8, 30.0);
  const auto v0 = rb::slope_gradient_from_elevations(g, z, 8, 30.0);
  const auto v1 = rb::slope_gradient_from_elevations(g, z_off, 8, 30.0);
  double worst_flat = 0.0, worst_offset = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    worst_flat = std::max(worst_flat, std::abs(vf[p]));
    worst_offset = std::max(worst_offset, std::abs(v0[p] - v1[p]));
  }
  return {worst_hand <= kSlopeTol && worst_flat == 0.0 && worst_offset <= kSlopeTol,
          fmt("hand-computed colinear cases max error %.3g (tol %.0e); flat max %.3g; offset +100 max change %.3g",
              worst_hand, kSlopeTol, worst_flat, worst_offset)};
}

// ---------------------------------------------------------------- scoring

Outcome scoring_oracle() {
  std::mt19937_64 rng(31337);
  double worst_r = 0.0, worst_g = 0.0, worst_zone = 0.0, max_abs = 0.0;
  int antisym_fail = 0, zone_presence_fail = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 100, k = 2 + rng() % 7;
    rb::FeatureMatrix m;
    m.feature_ids = oracle::names(k);
    m.raw_stats.resize(k);
    std::vector<std::vector<double>> x(n, std::vector<double>(k));
    std::vector<rb::Vec2> pos(n);
    for (std::size_t r = 0; r < n; ++r) {
      m.point_ids.push_back(static_cast<rb::PointId>(r));
      // Integer coordinates put some points exactly on zone edges.
      pos[r] = (r % 3 == 0) ? rb::Vec2{static_cast<double>(rng() % 11) * 10, static_cast<double>(rng() % 11) * 10}
                            : rb::Vec2{oracle::uniform(rng, 0, 100), oracle::uniform(rng, 0, 100)};
      for (std::size_t c = 0; c < k; ++c) {
        const bool miss = oracle::uniform(rng) < 0.1;
        x[r][c] = miss ? NAN : oracle::uniform(rng);
        m.values.push_back(miss ? 0.0 : x[r][c]);
        m.missing.push_back(miss ? 1 : 0);
      }
    }
    std::vector<double> raw(k);
    for (auto& v : raw) v = oracle::uniform(rng, 0.01, 1.0);
    const auto w = rb::WeightSet::normalized(m.feature_ids, raw, "test");
    std::vector<double> wv;
    for (const auto& [id, v] : w.entries()) wv.push_back(v);
    std::vector<int> pv(k);
    rb::PolarityMap pol, flipped;
    for (std::size_t c = 0; c < k; ++c) {
      pv[c] = (rng() & 1) ? 1 : -1;
      pol[m.feature_ids[c]] = pv[c];
      flipped[m.feature_ids[c]] = -pv[c];
    }
    std::vector<rb::Zone> zones;
    std::vector<rb::Polygon> polys;
    for (int z = 0; z < 6; ++z) {
      const double x0 = static_cast<double>(rng() % 8) * 10, y0 = static_cast<double>(rng() % 8) * 10;
      const double w2 = static_cast<double>(1 + rng() % 4) * 10, h2 = static_cast<double>(1 + rng() % 4) * 10;
      rb::Polygon p{{{x0, y0}, {x0 + w2, y0}, {x0 + w2, y0 + h2}, {x0, y0 + h2}}, {}};
      if (z == 5) p = {{{0, 0}, {100, 0}, {50, 100}}, {}};  // catch-all triangle, listed last
      zones.push_back({"z" + std::to_string(z), p});
      polys.push_back(p);
    }
    const rb::GridIndex index(pos);
    for (auto policy : {rb::MissingPolicy::Renormalize, rb::MissingPolicy::ZeroFill, rb::MissingPolicy::PropagateMissing}) {
      const auto op = policy == rb::MissingPolicy::Renormalize ? oracle::Policy::Renormalize
                      : policy == rb::MissingPolicy::ZeroFill  ? oracle::Policy::ZeroFill
                                                               : oracle::Policy::Propagate;
      const auto f = rb::score_points(m, w, pol, policy);
      const auto f2 = rb::score_points(m, w, flipped, policy);
      std::vector<double> expect(n);
      double sum = 0.0;
      int cnt = 0;
      for (std::size_t r = 0; r < n; ++r) {
        expect[r] = oracle::score_point(x[r], wv, pv, op);
        if (std::isnan(expect[r]) != std::isnan(f.scores[r])) worst_r = INFINITY;
        if (!std::isnan(expect[r])) {
          worst_r = std::max(worst_r, std::abs(expect[r] - f.scores[r]));
          max_abs = std::max(max_abs, std::abs(f.scores[r]));
          sum += expect[r];
          ++cnt;
          if (!(f2.scores[r] == -f.scores[r])) ++antisym_fail;
        }
      }
      if (cnt > 0) worst_g = std::max(worst_g, std::abs(rb::aggregate_graph(f) - sum / cnt));
      const auto aggs = rb::aggregate_zones(f, pos, index, zones);
      const auto means = oracle::zone_means(pos, expect, polys);
      for (std::size_t z = 0; z < zones.size(); ++z) {
        if (aggs[z].mean_score.has_value() != means[z].has_value()) {
          ++zone_presence_fail;
          continue;
        }
        if (means[z]) worst_zone = std::max(worst_zone, std::abs(*aggs[z].mean_score - *means[z]));
      }
    }
  }
  const bool ok = worst_r <= kScoringTol && worst_g <= kScoringTol && worst_zone <= kScoringTol &&
                  max_abs <= 1.0 && antisym_fail == 0 && zone_presence_fail == 0;
  return {ok, fmt("50 instances x 100 points x 3 policies: max |dR_n| %.3g, |dR_G| %.3g, |dzone| %.3g (tol %.0e); "
                  "max |R_n| %.6f; antisymmetry failures %d; zone presence mismatches %d",
                  worst_r, worst_g, worst_zone, kScoringTol, max_abs, antisym_fail, zone_presence_fail)};
}

// ---------------------------------------------------------------- end to end

Outcome planted_downtown() {
  int ok_seeds = 0;
  std::string worst;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    rb::synth::SynthConfig sc;
    sc.seed = seed;
    const auto city = rb::synth::synth_city(sc);
    rb::pipeline::RunConfig cfg;
    cfg.band = kBottomBand;
    const auto ws = rb::pipeline::workspace_from_city(city, cfg);
    const auto r = rb::pipeline::evaluate_profile(ws, rb::fixtures::full_profile(ws.catalog));
    std::set<std::string> bottom;
    for (const auto& z : r.ranking.bottom) bottom.insert(z.zone_id);
    std::size_t in = 0;
    double worst_pct = 0.0;
    for (const auto& id : city.downtown_zone_ids) {
      in += bottom.count(id);
      for (const auto& z : r.zones)
        if (z.zone_id == id) worst_pct = std::max(worst_pct, z.percentile_rank.value_or(1.0));
    }
    if (in == city.downtown_zone_ids.size()) ++ok_seeds;
    worst += fmt("%s%zu/%zu(p<=%.3f)", seed == 1 ? "" : " ", in, city.downtown_zone_ids.size(), worst_pct);
  }
  return {ok_seeds == 10, fmt("%d/10 seeds with every downtown zone in the bottom %.0f%% band; per seed: %s",
                              ok_seeds, kBottomBand * 100, worst.c_str())};
}

Outcome trashbot_fixture() {
  using rb::fixtures::WeightColumn;
  const auto catalog = rb::fixtures::reference_catalog();
  const auto profile = rb::fixtures::trashbot_profile(catalog);
  const auto poc = rb::fixtures::fixture_weights(WeightColumn::NycPoc);
  const auto pw = rb::apply_profile(profile, poc, catalog);
  double worst = 0.0;
  std::string worst_id, unlisted;
  std::size_t compared = 0;
  for (const auto& [id, v] : pw.weights.entries()) {
    const auto published = rb::fixtures::published_weight(WeightColumn::Trashbot, id);
    if (!published) {
      unlisted += " " + id;
      continue;
    }
    ++compared;
    if (std::abs(v - *published) > worst) {
      worst = std::abs(v - *published);
      worst_id = id;
    }
  }
  std::string extra;
  for (const auto& row : rb::fixtures::kPublishedWeights)
    if (row.weights[5] >= 0 && !pw.weights.find(std::string(row.id))) extra += " " + std::string(row.id);
  return {worst <= kTrashbotTol && unlisted.empty(),
          fmt("%zu features compared; max |rescaled NYC POC - Trashbot| %.4f at %s (tol %.0e); "
              "in published Trashbot column but excluded here:%s",
              compared, worst, worst_id.c_str(), kTrashbotTol, extra.empty() ? " none" : extra.c_str())};
}

Outcome performance() {
  // Blocks per side so that the segmentized grid reaches the target point count.
  std::size_t blocks = 10;
  while (13 * blocks * blocks + 14 * blocks + 1 < kPerfPoints) ++blocks;
  rb::synth::SynthConfig sc;
  sc.seed = 3;
  sc.blocks = blocks;
  sc.votes_per_pair = 1;
  const auto city = rb::synth::synth_city(sc);
  auto catalog = rb::fixtures::reference_catalog();
  auto extra = *catalog.find("slope_gradient");
  extra.id = "slope_gradient_local";
  extra.params = {{"K", 4}, {"D", 15.0}};
  catalog.features.push_back(extra);
  const auto ids = catalog.active_ids();
  std::vector<double> raw;
  for (const auto& id : ids) raw.push_back(rb::fixtures::published_weight(rb::fixtures::WeightColumn::All, id).value_or(0.02));
  const auto weights = rb::WeightSet::normalized(ids, raw, "perf");
  rb::PolarityMap pol;
  for (const auto& id : ids) pol[id] = catalog.find(id)->polarity;

  const auto graph = city.graph;
  const auto points = rb::segmentize(graph, 15.0);
  auto run = [&](std::size_t workers, double& extract_s, double& score_s) {
    rb::ExtractionOptions opts;
    opts.workers = workers;
    const auto t0 = Clock::now();
    auto m = rb::assemble_feature_matrix(graph, points, catalog, city.sources, opts);
    extract_s = seconds_since(t0);
    const auto t1 = Clock::now();
    auto f = rb::score_points(m, weights, pol, rb::MissingPolicy::Renormalize, workers);
    score_s = seconds_since(t1);
    return std::make_pair(std::move(m), std::move(f));
  };
  double e1, s1, e2, s2;
  const auto a = run(0, e1, s1);
  const auto b = run(3, e2, s2);
  const bool same = a.first.values == b.first.values && a.first.missing == b.first.missing &&
                    std::equal(a.second.scores.begin(), a.second.scores.end(), b.second.scores.begin(),
                               [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; });
  const bool ok = points.size() >= kPerfPoints && a.first.cols() == kPerfFeatures && e1 + s1 < kExtractScoreSeconds &&
                  s1 < kScoreSeconds && same;
  return {ok, fmt("%zu points x %zu features on %u hardware thread(s): extraction %.2f s + scoring %.2f s = %.2f s "
                  "(limit %.0f s), scoring limit %.0f s; 3-worker rerun %.2f s, outputs identical: %s",
                  points.size(), a.first.cols(), std::thread::hardware_concurrency(), e1, s1, e1 + s1,
                  kExtractScoreSeconds, kScoreSeconds, e2 + s2, same ? "yes" : "no")};
}

Outcome service_parity() {
  const auto root = oracle::temp_dir("acceptance_service");
  rb::pipeline::RunConfig synth;
  synth.output = (root / "city").string();
  synth.seed = 11;
  rb::pipeline::cmd_synth_city(synth);
  auto base = rb::pipeline::load_config(root / "city" / "config.json");
  base.output = (root / "base").string();
  rb::pipeline::cmd_score(base);
  const auto svc = rb::service::ScoreService::from_artifacts(base.output);

  std::mt19937_64 rng(808);
  const auto active = svc->workspace().catalog.active_ids();
  int equal = 0;
  for (int i = 0; i < 10; ++i) {
    rb::RobotProfile p;
    p.name = "random-" + std::to_string(i);
    for (const auto& id : active)
      if (oracle::uniform(rng) < 0.6) p.included_features.push_back(id);
    while (p.included_features.size() < 2) p.included_features.push_back(active[p.included_features.size() * 3]);
    for (const auto& id : p.included_features)
      if (oracle::uniform(rng) < 0.2) p.polarity_overrides[id] = -svc->workspace().catalog.find(id)->polarity;
    if (i % 3 == 0 && std::find(p.included_features.begin(), p.included_features.end(), "slope_gradient") == p.included_features.end())
      p.included_features.push_back("slope_gradient");
    if (i % 3 == 0) p.extractor_param_overrides["slope_gradient"] = {{"K", static_cast<double>(2 + i)}, {"D", 20.0}};
    const auto body = rb::io::profile_to_json(p).dump();
    const auto path = root / ("profile" + std::to_string(i) + ".json");
    rb::io::write_text(path, body);
    auto cfg = base;
    cfg.profile = path.string();
    cfg.output = (root / ("run" + std::to_string(i))).string();
    rb::pipeline::cmd_score(cfg);
    const auto batch = rb::io::read_text(fs::path(cfg.output) / "profile.json");
    const auto resp = svc->handle({"POST", "/profile", {}, body});
    if (resp.status == 200 && resp.body == batch) ++equal;
  }

  // bbox queries against the full-precision export.
  const auto rows = rb::io::parse_scores_csv(rb::io::read_text(fs::path(base.output) / "scores.csv"));
  int box_ok = 0, boxes = 0;
  std::vector<rb::BBox> queries;
  for (int i = 0; i < 8; ++i) {
    const double x0 = oracle::uniform(rng, -60, 1000), y0 = oracle::uniform(rng, -60, 1000);
    queries.push_back({x0, y0, x0 + oracle::uniform(rng, 1, 400), y0 + oracle::uniform(rng, 1, 400)});
  }
  queries.push_back({2000, 2000, 2100, 2100});  // empty
  const auto one = rows[rows.size() / 2].pos;
  queries.push_back({one.x - 1e-6, one.y - 1e-6, one.x + 1e-6, one.y + 1e-6});  // a single point
  for (const auto& q : queries) {
    ++boxes;
    std::vector<std::pair<std::uint32_t, std::string>> expect, got;
    for (const auto& r : rows)
      if (r.pos.x >= q.min_x && r.pos.x <= q.max_x && r.pos.y >= q.min_y && r.pos.y <= q.max_y)
        expect.emplace_back(r.point_id, r.score ? rb::io::format9(*r.score) : "null");
    std::string cursor;
    for (;;) {
      std::map<std::string, std::string> qs{{"bbox", fmt("%.17g,%.17g,%.17g,%.17g", q.min_x, q.min_y, q.max_x, q.max_y)},
                                            {"limit", "97"}};
      if (!cursor.empty()) qs["cursor"] = cursor;
      const auto resp = svc->handle({"GET", "/scores", qs, ""});
      if (resp.status != 200) break;
      const auto doc = nlohmann::json::parse(resp.body);
      for (const auto& f : doc["features"]) {
        const auto& s = f["properties"]["score"];
        got.emplace_back(f["properties"]["point_id"].get<std::uint32_t>(),
                         s.is_null() ? "null" : rb::io::format9(s.get<double>()));
      }
      if (doc["next_cursor"].is_null()) break;
      cursor = doc["next_cursor"].get<std::string>();
    }
    if (got == expect) ++box_ok;
  }
  return {equal == 10 && box_ok == boxes,
          fmt("POST /profile byte-equal to batch profile.json: %d/10; GET /scores bbox equal to filtered export: %d/%d",
              equal, box_ok, boxes)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ahp_consistency", ahp_consistency},
      {"ahp_monte_carlo", ahp_monte_carlo},
      {"ahp_invariants", ahp_invariants},
      {"transitivity_bruteforce", transitivity_bruteforce},
      {"segmentization", segmentization},
      {"slope_gradient", slope_gradient},
      {"scoring_oracle", scoring_oracle},
      {"planted_downtown", planted_downtown},
      {"trashbot_fixture", trashbot_fixture},
      {"performance", performance},
      {"service_parity", service_parity},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted)
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == w; })) {
      std::fprintf(stderr, "unknown criterion '%s'\n", w.c_str());
      return 2;
    }
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
