#pragma once

// Batch commands. Every command reads a RunConfig, writes its outputs plus a
// manifest into the output directory and returns a short text summary.
// Profile evaluation lives here too; the HTTP service reuses it verbatim so
// batch and service responses cannot drift apart.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robotability/ahp.hpp"
#include "robotability/digest.hpp"
#include "robotability/error.hpp"
#include "robotability/features.hpp"
#include "robotability/fixtures.hpp"
#include "robotability/io.hpp"
#include "robotability/scoring.hpp"
#include "robotability/sidewalk_graph.hpp"
#include "robotability/synth.hpp"

namespace robotability::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  // Exactly one of votes / fixture feeds the weights. `fixture` is a published
  // column name (all, nyc-poc, ...) or a weight file.
  std::string votes;
  std::string fixture;
  std::string graph;  // GeoJSON LineStrings, or a directory holding nodes.csv + edges.csv
  std::string catalog;  // empty = built-in reference catalog
  std::string zones;
  std::string elevation;
  std::string data_dir;  // every .csv / .geojson inside becomes a source named by its stem
  std::map<std::string, std::string> sources;
  // Staged inputs from earlier commands.
  std::string features;
  std::string scores;
  std::string zone_scores;

  double threshold = 15.0;
  std::optional<double> slope_k;
  std::optional<double> slope_d;
  MissingPolicy missing_policy = MissingPolicy::Renormalize;
  std::string profile = "full";  // full, trashbot or a profile JSON file
  std::string output = "out";
  std::uint64_t seed = 42;
  std::size_t workers = 0;
  double band = 0.1;
  double smoothing = 1.0;
  bool strict_pairs = false;

  // synth-city only
  std::size_t blocks = 10;
  double block_size = 100.0;
  double jitter = 0.0;
  double intensity = 1.0;
};

namespace detail {

inline std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

inline bool is_builtin_profile(const std::string& s) { return s == "full" || s == "trashbot"; }

inline bool is_fixture_column(const std::string& s) {
  try {
    fixtures::parse_weight_column(s);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

}  // namespace detail

/// Applies the keys of a JSON config object; relative paths resolve against `base`.
inline void apply_config_json(RunConfig& c, const json& j, const fs::path& base) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  auto path = [&](const json& v) { return detail::resolve(v.get<std::string>(), base); };
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "votes") c.votes = path(v);
      else if (k == "fixture") {
        const auto s = v.get<std::string>();
        c.fixture = detail::is_fixture_column(s) ? s : path(v);
      } else if (k == "graph") c.graph = path(v);
      else if (k == "catalog") c.catalog = path(v);
      else if (k == "zones") c.zones = path(v);
      else if (k == "elevation") c.elevation = path(v);
      else if (k == "data_dir") c.data_dir = path(v);
      else if (k == "sources") {
        for (const auto& [name, p] : v.items()) c.sources[name] = path(p);
      } else if (k == "features") c.features = path(v);
      else if (k == "scores") c.scores = path(v);
      else if (k == "zone_scores") c.zone_scores = path(v);
      else if (k == "threshold") c.threshold = v.get<double>();
      else if (k == "slope_k") c.slope_k = v.get<double>();
      else if (k == "slope_d") c.slope_d = v.get<double>();
      else if (k == "missing_policy") c.missing_policy = parse_missing_policy(v.get<std::string>());
      else if (k == "profile") {
        const auto s = v.get<std::string>();
        c.profile = detail::is_builtin_profile(s) ? s : path(v);
      } else if (k == "output") c.output = path(v);
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "workers") c.workers = v.get<std::size_t>();
      else if (k == "band") c.band = v.get<double>();
      else if (k == "smoothing") c.smoothing = v.get<double>();
      else if (k == "strict_pairs") c.strict_pairs = v.get<bool>();
      else if (k == "blocks") c.blocks = v.get<std::size_t>();
      else if (k == "block_size") c.block_size = v.get<double>();
      else if (k == "jitter") c.jitter = v.get<double>();
      else if (k == "intensity") c.intensity = v.get<double>();
      else throw ValidationError("config: unknown key '" + k + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

inline RunConfig load_config(const fs::path& path) {
  RunConfig c;
  apply_config_json(c, io::read_json(path), fs::absolute(path).parent_path());
  return c;
}

/// Every parameter except the output directory, with absolute paths.
inline json config_to_json(const RunConfig& c) {
  auto abs = [](const std::string& p) {
    return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
  };
  json sources = json::object();
  for (const auto& [k, v] : c.sources) sources[k] = abs(v);
  return {{"votes", abs(c.votes)},
          {"fixture", detail::is_fixture_column(c.fixture) ? c.fixture : abs(c.fixture)},
          {"graph", abs(c.graph)},
          {"catalog", abs(c.catalog)},
          {"zones", abs(c.zones)},
          {"elevation", abs(c.elevation)},
          {"data_dir", abs(c.data_dir)},
          {"sources", sources},
          {"features", abs(c.features)},
          {"scores", abs(c.scores)},
          {"zone_scores", abs(c.zone_scores)},
          {"threshold", c.threshold},
          {"slope_k", c.slope_k ? json(*c.slope_k) : json(nullptr)},
          {"slope_d", c.slope_d ? json(*c.slope_d) : json(nullptr)},
          {"missing_policy", std::string(to_string(c.missing_policy))},
          {"profile", detail::is_builtin_profile(c.profile) ? c.profile : abs(c.profile)},
          {"seed", c.seed},
          {"workers", c.workers},
          {"band", c.band},
          {"smoothing", c.smoothing},
          {"strict_pairs", c.strict_pairs},
          {"blocks", c.blocks},
          {"block_size", c.block_size},
          {"jitter", c.jitter},
          {"intensity", c.intensity}};
}

/// Inverse of config_to_json (null and empty entries are skipped).
inline RunConfig config_from_json(const json& j) {
  json clean = json::object();
  for (const auto& [k, v] : j.items()) {
    if (v.is_null() || (v.is_string() && v.get<std::string>().empty())) continue;
    if (k == "sources" && v.empty()) continue;
    clean[k] = v;
  }
  RunConfig c;
  apply_config_json(c, clean, fs::current_path());
  return c;
}

inline void validate_config(const RunConfig& c) {
  if (!(c.threshold > 0.0) || !std::isfinite(c.threshold))
    throw ValidationError("config: threshold T must be > 0");
  if (c.slope_k && !(*c.slope_k >= 1.0 && std::floor(*c.slope_k) == *c.slope_k))
    throw ValidationError("config: slope K must be an integer >= 1");
  if (c.slope_d && !(*c.slope_d > 0.0)) throw ValidationError("config: slope D must be > 0");
  if (!(c.band > 0.0 && c.band <= 0.5)) throw ValidationError("config: band must lie in (0, 0.5]");
  if (!(c.smoothing >= 0.0)) throw ValidationError("config: smoothing must be >= 0");
}

inline void require_weight_source(const RunConfig& c) {
  if (c.votes.empty() == c.fixture.empty())
    throw ValidationError("config: provide exactly one of a vote file or fixture weights");
}

template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

// ---------------------------------------------------------------- input loading

/// Input files touched by a run, with their SHA-256 digests.
struct Digests {
  std::map<std::string, std::string> files;

  void add(const std::string& path) {
    if (path.empty() || !fs::is_regular_file(path)) return;
    files[fs::absolute(path).lexically_normal().string()] = sha256_file(path);
  }
  json to_json() const { return files; }
};

inline FeatureCatalog load_catalog(const RunConfig& c, Digests* d = nullptr) {
  FeatureCatalog cat = c.catalog.empty() ? fixtures::reference_catalog() : io::read_catalog(c.catalog);
  if (d) d->add(c.catalog);
  for (auto& f : cat.features) {
    if (f.extractor != ExtractorKind::SlopeGradient) continue;
    if (c.slope_k) f.params["K"] = *c.slope_k;
    if (c.slope_d) f.params["D"] = *c.slope_d;
  }
  cat.validate();
  return cat;
}

inline SidewalkGraph load_graph(const RunConfig& c, Digests* d = nullptr) {
  if (c.graph.empty()) throw ValidationError("config: no graph source given");
  if (d) {
    if (fs::is_directory(c.graph)) {
      d->add((fs::path(c.graph) / "nodes.csv").string());
      d->add((fs::path(c.graph) / "edges.csv").string());
    } else {
      d->add(c.graph);
    }
  }
  return io::read_graph(c.graph);
}

inline DataSources load_sources(const RunConfig& c, Digests* d = nullptr) {
  DataSources src;
  std::map<std::string, std::string> files;
  if (!c.data_dir.empty()) {
    if (!fs::is_directory(c.data_dir)) throw DataError("data directory '" + c.data_dir + "' not found");
    for (const auto& entry : fs::directory_iterator(c.data_dir)) {
      const auto ext = entry.path().extension().string();
      if (entry.is_regular_file() && (ext == ".csv" || ext == ".geojson"))
        files[entry.path().stem().string()] = entry.path().string();
    }
  }
  for (const auto& [name, path] : c.sources) files[name] = path;
  for (const auto& [name, path] : files) {
    if (d) d->add(path);
    src.datasets[name] = io::read_point_dataset(path);
  }
  if (!c.elevation.empty()) {
    if (d) d->add(c.elevation);
    src.elevation = io::read_ascii_grid(c.elevation);
  }
  return src;
}

/// Feature ids in a vote file, catalog order first, then unknown ids as they appear.
inline std::vector<FeatureId> vote_features(const std::vector<PairwiseVote>& votes,
                                            const FeatureCatalog& catalog) {
  std::vector<FeatureId> seen;
  for (const auto& v : votes)
    for (const auto* id : {&v.feature_a, &v.feature_b})
      if (std::find(seen.begin(), seen.end(), *id) == seen.end()) seen.push_back(*id);
  std::vector<FeatureId> out;
  for (const auto& f : catalog.features)
    if (std::find(seen.begin(), seen.end(), f.id) != seen.end()) out.push_back(f.id);
  for (const auto& id : seen)
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  return out;
}

inline MatrixOptions matrix_options(const RunConfig& c) {
  return {c.smoothing, c.strict_pairs ? UncomparedPolicy::Error : UncomparedPolicy::NeutralFill};
}

struct BaseWeights {
  std::optional<ContingencyMatrix> matrix;
  std::optional<WeightSet> fixture;
};

inline BaseWeights load_base_weights(const RunConfig& c, const FeatureCatalog& catalog,
                                     Digests* d = nullptr) {
  require_weight_source(c);
  BaseWeights b;
  if (!c.votes.empty()) {
    if (d) d->add(c.votes);
    const auto votes = io::read_votes(c.votes);
    b.matrix = build_contingency_matrix(votes, vote_features(votes, catalog), matrix_options(c));
  } else if (detail::is_fixture_column(c.fixture)) {
    b.fixture = fixtures::fixture_weights(fixtures::parse_weight_column(c.fixture));
  } else {
    if (d) d->add(c.fixture);
    b.fixture = io::read_weights(c.fixture).weights;
  }
  return b;
}

inline RobotProfile load_profile(const RunConfig& c, const FeatureCatalog& catalog,
                                 Digests* d = nullptr) {
  if (c.profile.empty() || c.profile == "full") return fixtures::full_profile(catalog);
  if (c.profile == "trashbot") return fixtures::trashbot_profile(catalog);
  if (d) d->add(c.profile);
  return io::profile_from_json(io::read_json(c.profile));
}

/// Everything a profile is evaluated against; immutable once loaded.
struct Workspace {
  RunConfig config;
  FeatureCatalog catalog;
  SidewalkGraph graph;
  SegmentizedGraph points;
  DataSources sources;
  FeatureMatrix matrix;
  std::vector<Zone> zones;
  BaseWeights base;
  Digests digests;
};

inline ExtractionOptions extraction_options(const RunConfig& c) {
  ExtractionOptions o;
  o.workers = c.workers;
  return o;
}

/// Loads every input; extracts the feature matrix unless a staged one is given.
inline Workspace load_workspace(const RunConfig& c, bool need_weights = true) {
  validate_config(c);
  Workspace ws;
  ws.config = c;
  ws.catalog = stage("catalog", [&] { return load_catalog(c, &ws.digests); });
  ws.graph = stage("build-graph", [&] { return load_graph(c, &ws.digests); });
  ws.points = stage("segmentize", [&] { return segmentize(ws.graph, c.threshold); });
  ws.sources = stage("sources", [&] { return load_sources(c, &ws.digests); });
  if (!c.zones.empty()) {
    ws.digests.add(c.zones);
    ws.zones = stage("zones", [&] { return io::read_zones(c.zones); });
  }
  if (need_weights)
    ws.base = stage("weights", [&] { return load_base_weights(c, ws.catalog, &ws.digests); });
  ws.matrix = stage("extract", [&] {
    if (c.features.empty())
      return assemble_feature_matrix(ws.graph, ws.points, ws.catalog, ws.sources, extraction_options(c));
    ws.digests.add(c.features);
    auto m = io::read_feature_matrix(c.features);
    if (m.rows() != ws.points.size())
      throw ValidationError("staged feature matrix has " + std::to_string(m.rows()) +
                            " rows but the graph segmentizes to " + std::to_string(ws.points.size()) +
                            " points");
    for (const auto& id : ws.catalog.active_ids())
      if (!m.column_of(id))
        throw ValidationError("staged feature matrix lacks active feature '" + id + "'");
    return m;
  });
  return ws;
}

/// In-memory workspace over a synthetic city, weighted by its own votes.
inline Workspace workspace_from_city(const synth::SynthCity& city, const RunConfig& c,
                                     FeatureCatalog catalog = fixtures::reference_catalog()) {
  validate_config(c);
  Workspace ws;
  ws.config = c;
  ws.catalog = std::move(catalog);
  ws.graph = city.graph;
  ws.points = segmentize(ws.graph, c.threshold);
  ws.sources = city.sources;
  ws.zones = city.zones;
  ws.base.matrix = build_contingency_matrix(city.votes, vote_features(city.votes, ws.catalog), matrix_options(c));
  ws.matrix = assemble_feature_matrix(ws.graph, ws.points, ws.catalog, ws.sources, extraction_options(c));
  return ws;
}

// ---------------------------------------------------------------- profile evaluation

struct ProfileResult {
  RobotProfile profile;
  std::string token;
  ProfileWeights weights;
  ScoreField field;
  std::vector<std::optional<double>> percentiles;
  std::vector<ZoneAggregate> zones;
  double graph_mean = 0.0;
  std::optional<double> ratio;
  ZoneRanking ranking;
  std::vector<std::string> warnings;
  std::string document;
};

inline std::string profile_token(const RobotProfile& p) {
  return sha256_hex(io::profile_to_json(p).dump()).substr(0, 32);
}

inline ProfileWeights profile_weights(const Workspace& ws, const RobotProfile& p) {
  if (ws.base.matrix) {
    if (p.weight_source == RobotProfile::WeightSource::Fixture)
      throw ValidationError("weight_source: fixture weights requested but the run was built from votes");
    return apply_profile(p, *ws.base.matrix, ws.catalog);
  }
  if (ws.base.fixture) return apply_profile(p, *ws.base.fixture, ws.catalog);
  throw ValidationError("no base weights loaded");
}

/// Copy of the listed columns, in the listed order.
inline FeatureMatrix select_columns(const FeatureMatrix& m, const std::vector<FeatureId>& ids) {
  FeatureMatrix out;
  out.point_ids = m.point_ids;
  out.feature_ids = ids;
  out.warnings = m.warnings;
  std::vector<std::size_t> src;
  for (const auto& id : ids) {
    auto c = m.column_of(id);
    if (!c) throw ValidationError("feature matrix has no column '" + id + "'");
    src.push_back(*c);
    out.raw_stats.push_back(m.raw_stats[*c]);
  }
  const std::size_t k = ids.size(), nf = m.cols();
  out.values.resize(m.rows() * k);
  out.missing.resize(m.rows() * k);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t i = 0; i < k; ++i) {
      out.values[r * k + i] = m.values[r * nf + src[i]];
      out.missing[r * k + i] = m.missing[r * nf + src[i]];
    }
  return out;
}

inline json profile_document(const ProfileResult& r, MissingPolicy policy, double band) {
  json pol = json::object();
  for (const auto& [id, v] : r.weights.polarities) pol[id] = v;
  json zones = json::array();
  for (const auto& z : r.zones)
    zones.push_back({{"zone_id", z.zone_id},
                     {"mean_score", io::number9(z.mean_score)},
                     {"point_count", z.point_count},
                     {"percentile_rank", io::number9(z.percentile_rank)}});
  json top = json::array(), bottom = json::array();
  for (const auto& z : r.ranking.top) top.push_back(z.zone_id);
  for (const auto& z : r.ranking.bottom) bottom.push_back(z.zone_id);
  std::size_t scored = 0;
  for (std::size_t i = 0; i < r.field.size(); ++i) scored += r.field.has_score(i) ? 1 : 0;
  return {{"token", r.token},
          {"profile", io::profile_to_json(r.profile)},
          {"weights", io::weights_to_json(r.weights.weights)},
          {"polarities", pol},
          {"missing_policy", std::string(to_string(policy))},
          {"summary",
           {{"graph_mean", io::round9(r.graph_mean)},
            {"zone_ratio", io::number9(r.ratio)},
            {"scored_points", scored},
            {"total_points", r.field.size()},
            {"zone_count", r.zones.size()}}},
          {"zones", zones},
          {"ranking", {{"band", band}, {"top", top}, {"bottom", bottom}}},
          {"warnings", r.warnings}};
}

/// Weights, scores, zone aggregates and ranking for one profile.
inline ProfileResult evaluate_profile(const Workspace& ws, const RobotProfile& profile) {
  ProfileResult r;
  r.profile = profile;
  r.token = profile_token(profile);
  r.weights = profile_weights(ws, profile);
  const auto ids = r.weights.weights.ids();

  std::map<FeatureId, std::map<std::string, double>> overrides;
  for (const auto& [id, params] : profile.extractor_param_overrides)
    if (std::find(ids.begin(), ids.end(), id) != ids.end() && !params.empty()) overrides[id] = params;

  const FeatureMatrix* m = &ws.matrix;
  FeatureMatrix local;
  if (!overrides.empty()) {
    local = select_columns(ws.matrix, ids);
    local.warnings.clear();
    for (const auto& [id, params] : overrides) {
      FeatureDef def = *ws.catalog.find(id);
      for (const auto& [k, v] : params) def.params[k] = v;
      auto col = extract_feature(def, ws.graph, ws.points, ws.sources, extraction_options(ws.config),
                                 &local.warnings);
      set_column(local, *local.column_of(id), col);
    }
    r.warnings = local.warnings;
    m = &local;
  }
  for (const auto& id : ids) {
    const std::size_t c = *m->column_of(id);
    bool any = false;
    for (std::size_t row = 0; row < m->rows() && !any; ++row) any = !m->is_missing(row, c);
    if (!any) throw DataError("feature '" + id + "' has no data at any point");
  }
  r.field = score_profile(*m, r.weights.weights, r.weights.polarities, ws.config.missing_policy,
                          ws.config.workers);
  r.field.profile = profile.name;
  r.graph_mean = aggregate_graph(r.field);
  r.percentiles = point_percentiles(r.field);
  if (!ws.zones.empty()) {
    r.zones = aggregate_zones(r.field, ws.points, ws.zones);
    r.ratio = zone_ratio(r.zones);
    r.ranking = rank_zones(r.zones, ws.config.band);
  }
  r.document = profile_document(r, ws.config.missing_policy, ws.config.band).dump();
  return r;
}

// ---------------------------------------------------------------- commands

namespace detail {

inline fs::path out_dir(const RunConfig& c) {
  fs::create_directories(c.output);
  return c.output;
}

inline void write_manifest(const RunConfig& c, const std::string& command, const Digests& d, json extra) {
  json m = {{"tool", "robotability"},
            {"version", kVersion},
            {"command", command},
            {"config", config_to_json(c)},
            {"inputs", d.to_json()}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  io::write_text(out_dir(c) / ("manifest." + command + ".json"), m.dump(2) + "\n");
}

inline std::string weight_table(const WeightSet& w) {
  auto rows = w.entries();
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string out;
  char buf[160];
  for (const auto& [id, v] : rows) {
    std::snprintf(buf, sizeof buf, "%-28s %.3f\n", id.c_str(), v);
    out += buf;
  }
  return out;
}

}  // namespace detail

inline std::string cmd_derive_weights(const RunConfig& c) {
  validate_config(c);
  if (c.votes.empty()) throw ValidationError("derive-weights: a vote file is required");
  Digests d;
  const auto catalog = stage("catalog", [&] { return load_catalog(c, &d); });
  d.add(c.votes);
  const auto votes = stage("derive-weights", [&] { return io::read_votes(c.votes); });
  const auto features = vote_features(votes, catalog);
  const auto m = stage("derive-weights", [&] { return build_contingency_matrix(votes, features, matrix_options(c)); });
  const auto w = stage("derive-weights", [&] { return principal_weights(m); });
  const auto report = transitivity_report(votes, features);
  const auto dir = detail::out_dir(c);
  io::write_text(dir / "weights.csv", io::format_weights(w, c.smoothing));
  io::write_text(dir / "transitivity.json", io::transitivity_to_json(report).dump(2) + "\n");
  json entries = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m.at(i, j));
    entries.push_back(row);
  }
  io::write_text(dir / "matrix.json",
                 json{{"features", m.features()}, {"smoothing", m.smoothing()}, {"entries", entries}}.dump(2) + "\n");
  detail::write_manifest(c, "derive-weights", d,
                         {{"outputs", {"weights.csv", "transitivity.json", "matrix.json"}},
                          {"votes", votes.size()}});
  return detail::weight_table(w) + "transitivity violations: " +
         std::to_string(report.inter_rater_violations) + " pooled of " +
         std::to_string(report.triples_evaluated) + " triples\n";
}

inline std::string cmd_build_graph(const RunConfig& c) {
  Digests d;
  const auto g = stage("build-graph", [&] { return load_graph(c, &d); });
  io::write_text(detail::out_dir(c) / "graph.geojson", io::graph_to_geojson(g).dump() + "\n");
  detail::write_manifest(c, "build-graph", d, {{"outputs", {"graph.geojson"}}});
  char buf[160];
  std::snprintf(buf, sizeof buf, "nodes %zu, edges %zu, total length %.3f m\n", g.nodes().size(),
                g.edges().size(), g.total_length());
  return buf;
}

inline std::string cmd_segmentize(const RunConfig& c) {
  validate_config(c);
  Digests d;
  const auto g = stage("build-graph", [&] { return load_graph(c, &d); });
  const auto s = stage("segmentize", [&] { return segmentize(g, c.threshold); });
  io::write_text(detail::out_dir(c) / "points.csv", io::format_points_csv(g, s));
  detail::write_manifest(c, "segmentize", d, {{"outputs", {"points.csv"}}, {"points", s.size()}});
  return "points " + std::to_string(s.size()) + " from " + std::to_string(g.edges().size()) + " edges\n";
}

inline std::string cmd_extract(const RunConfig& c) {
  RunConfig fresh = c;
  fresh.features.clear();
  const auto ws = load_workspace(fresh, false);
  io::write_feature_matrix(detail::out_dir(c) / "features.bin", ws.matrix);
  detail::write_manifest(c, "extract", ws.digests,
                         {{"outputs", {"features.bin"}},
                          {"points", ws.matrix.rows()},
                          {"features", ws.matrix.feature_ids},
                          {"warnings", ws.matrix.warnings}});
  std::string out = "extracted " + std::to_string(ws.matrix.cols()) + " features at " +
                    std::to_string(ws.matrix.rows()) + " points\n";
  for (const auto& w : ws.matrix.warnings) out += "warning: " + w + "\n";
  return out;
}

/// Full run: weights, extraction (or staged matrix), scores, zones, manifest.
inline std::string cmd_score(const RunConfig& c) {
  const auto ws = load_workspace(c);
  const auto profile = stage("profile", [&] { return load_profile(c, ws.catalog); });
  Digests digests = ws.digests;
  if (!detail::is_builtin_profile(c.profile)) digests.add(c.profile);
  const auto r = stage("score", [&] { return evaluate_profile(ws, profile); });
  const auto dir = detail::out_dir(c);
  std::vector<std::string> outputs{"features.bin", "weights.csv", "scores.csv", "scores.geojson", "profile.json"};
  if (c.features.empty() || fs::absolute(c.features) != fs::absolute(dir / "features.bin"))
    io::write_feature_matrix(dir / "features.bin", ws.matrix);
  io::write_text(dir / "weights.csv", io::format_weights(r.weights.weights));
  io::write_text(dir / "scores.csv", io::format_scores_csv(r.field, ws.points.positions()));
  io::write_text(dir / "scores.geojson",
                 io::format_scores_geojson(r.field, ws.points.positions(), &r.percentiles));
  io::write_text(dir / "profile.json", r.document);
  if (!ws.zones.empty()) {
    io::write_text(dir / "zones.geojson", io::zone_aggregates_to_geojson(r.zones).dump() + "\n");
    outputs.push_back("zones.geojson");
  }
  detail::write_manifest(c, "score", digests,
                         {{"outputs", outputs},
                          {"profile", io::profile_to_json(profile)},
                          {"active_features", r.weights.weights.ids()},
                          {"catalog_active", ws.catalog.active_ids()},
                          {"points", ws.points.size()},
                          {"warnings", ws.matrix.warnings}});
  std::string out = detail::weight_table(r.weights.weights);
  char buf[200];
  std::snprintf(buf, sizeof buf, "points %zu, graph mean %.6f", r.field.size(), r.graph_mean);
  out += buf;
  if (r.ratio) {
    std::snprintf(buf, sizeof buf, ", zone max/min %.3f", *r.ratio);
    out += buf;
  }
  out += "\n";
  for (const auto& w : ws.matrix.warnings) out += "warning: " + w + "\n";
  return out;
}

inline std::string cmd_aggregate(const RunConfig& c) {
  if (c.scores.empty()) throw ValidationError("aggregate: a score file is required");
  if (c.zones.empty()) throw ValidationError("aggregate: a zone file is required");
  Digests d;
  d.add(c.scores);
  d.add(c.zones);
  const auto rows = stage("aggregate", [&] { return io::parse_scores_csv(io::read_text(c.scores), c.scores); });
  if (rows.empty()) throw DataError("aggregate: score file has no rows");
  const auto zones = stage("zones", [&] { return io::read_zones(c.zones); });
  const auto field = io::score_field_from_rows(rows);
  std::vector<Vec2> pos;
  for (const auto& row : rows) pos.push_back(row.pos);
  const auto aggs = stage("aggregate", [&] { return aggregate_zones(field, pos, GridIndex(pos), zones); });
  io::write_text(detail::out_dir(c) / "zones.geojson", io::zone_aggregates_to_geojson(aggs).dump() + "\n");
  detail::write_manifest(c, "aggregate", d, {{"outputs", {"zones.geojson"}}});
  std::size_t with = 0;
  for (const auto& z : aggs) with += z.mean_score ? 1 : 0;
  std::string out = "zones " + std::to_string(aggs.size()) + ", with data " + std::to_string(with) + "\n";
  if (auto r = zone_ratio(aggs)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "zone max/min %.3f\n", *r);
    out += buf;
  }
  return out;
}

inline std::string cmd_rank(const RunConfig& c) {
  validate_config(c);
  const std::string src = c.zone_scores.empty() ? (fs::path(c.output) / "zones.geojson").string() : c.zone_scores;
  Digests d;
  d.add(src);
  const auto aggs = stage("rank", [&] { return io::parse_zone_aggregates(io::read_json(src), src); });
  const auto r = stage("rank", [&] { return rank_zones(aggs, c.band); });
  auto list = [](const std::vector<ZoneAggregate>& zs) {
    json a = json::array();
    for (const auto& z : zs)
      a.push_back({{"zone_id", z.zone_id},
                   {"mean_score", io::number9(z.mean_score)},
                   {"percentile_rank", io::number9(z.percentile_rank)}});
    return a;
  };
  io::write_text(detail::out_dir(c) / "ranking.json",
                 json{{"band", c.band}, {"top", list(r.top)}, {"bottom", list(r.bottom)}}.dump(2) + "\n");
  detail::write_manifest(c, "rank", d, {{"outputs", {"ranking.json"}}});
  std::string out = "top:\n";
  char buf[160];
  for (const auto& z : r.top) {
    std::snprintf(buf, sizeof buf, "  %-16s %.6f\n", z.zone_id.c_str(), *z.mean_score);
    out += buf;
  }
  out += "bottom:\n";
  for (const auto& z : r.bottom) {
    std::snprintf(buf, sizeof buf, "  %-16s %.6f\n", z.zone_id.c_str(), *z.mean_score);
    out += buf;
  }
  return out;
}

inline synth::SynthConfig synth_config(const RunConfig& c) {
  synth::SynthConfig s;
  s.seed = c.seed;
  s.blocks = c.blocks;
  s.block_size = c.block_size;
  s.jitter = c.jitter;
  s.intensity = c.intensity;
  return s;
}

/// Writes a synthetic city and a config.json that runs the pipeline on it.
inline std::string cmd_synth_city(const RunConfig& c) {
  const auto city = stage("synth-city", [&] { return synth::synth_city(synth_config(c)); });
  const auto dir = detail::out_dir(c);
  io::write_text(dir / "graph.geojson", io::graph_to_geojson(city.graph).dump() + "\n");
  io::write_text(dir / "zones.geojson", io::zones_to_geojson(city.zones).dump() + "\n");
  fs::create_directories(dir / "data");
  for (const auto& [name, ds] : city.sources.datasets) {
    auto it = city.channel_names.find(name);
    io::write_text(dir / "data" / (name + ".csv"),
                   io::format_point_csv(ds, it == city.channel_names.end() ? std::vector<std::string>{} : it->second));
  }
  io::write_text(dir / "elevation.asc", io::format_ascii_grid(*city.sources.elevation));
  io::write_text(dir / "votes.csv", io::format_votes(city.votes));
  io::write_text(dir / "catalog.json", io::catalog_to_json(fixtures::reference_catalog()).dump(2) + "\n");
  io::write_text(dir / "planting.json", city.planting.dump(2) + "\n");
  const json cfg = {{"graph", "graph.geojson"}, {"zones", "zones.geojson"}, {"data_dir", "data"},
                    {"elevation", "elevation.asc"}, {"votes", "votes.csv"}, {"catalog", "catalog.json"},
                    {"threshold", c.threshold}, {"profile", "full"}, {"output", "run"}};
  io::write_text(dir / "config.json", cfg.dump(2) + "\n");
  return "synthetic city: " + std::to_string(city.graph.nodes().size()) + " nodes, " +
         std::to_string(city.graph.edges().size()) + " edges, " + std::to_string(city.zones.size()) +
         " zones, " + std::to_string(city.votes.size()) + " votes\n";
}

}  // namespace robotability::pipeline
