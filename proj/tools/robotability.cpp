// robotability: batch pipeline and score service.
//
//   robotability synth-city --output city
//   robotability score --config city/config.json
//   robotability serve --artifacts city/run --addr 127.0.0.1:8080

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robotability/pipeline.hpp"
#include "robotability/service.hpp"
#include "robotability/service_http.hpp"

namespace rb = robotability;
namespace pl = robotability::pipeline;

namespace {

// Flags are parsed into `flags`; only options actually given are copied over
// the config-file values.
struct FlagSet {
  pl::RunConfig flags;
  std::string config_file;
  std::string policy;
  std::vector<std::string> sources;
  std::vector<std::pair<CLI::Option*, std::function<void(pl::RunConfig&)>>> appliers;

  template <class T>
  void add(CLI::App* app, const std::string& name, T pl::RunConfig::*field, const std::string& help) {
    auto* opt = app->add_option(name, flags.*field, help);
    appliers.emplace_back(opt, [this, field](pl::RunConfig& c) { c.*field = flags.*field; });
  }

  void add_optional(CLI::App* app, const std::string& name, std::optional<double> pl::RunConfig::*field,
                    const std::string& help) {
    auto* opt = app->add_option(name, value_store[name], help);
    appliers.emplace_back(opt, [this, field, name](pl::RunConfig& c) { c.*field = value_store[name]; });
  }

  void register_all(CLI::App* app) {
    app->add_option("-c,--config", config_file, "JSON config file; flags override its values");
    add(app, "--votes", &pl::RunConfig::votes, "pairwise vote file");
    add(app, "--fixture", &pl::RunConfig::fixture, "published weight column or weight file");
    add(app, "--graph", &pl::RunConfig::graph, "sidewalk graph (GeoJSON or nodes/edges CSV directory)");
    add(app, "--catalog", &pl::RunConfig::catalog, "feature catalog JSON");
    add(app, "--zones", &pl::RunConfig::zones, "zone polygons GeoJSON");
    add(app, "--elevation", &pl::RunConfig::elevation, "elevation raster (ESRI ASCII grid)");
    add(app, "--data-dir", &pl::RunConfig::data_dir, "directory of point datasets");
    auto* src = app->add_option("--source", sources, "extra dataset as name=path");
    appliers.emplace_back(src, [this](pl::RunConfig& c) {
      for (const auto& s : sources) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw rb::ValidationError("--source expects name=path");
        c.sources[s.substr(0, eq)] = s.substr(eq + 1);
      }
    });
    add(app, "--features", &pl::RunConfig::features, "staged feature matrix (features.bin)");
    add(app, "--scores", &pl::RunConfig::scores, "staged score file (scores.csv)");
    add(app, "--zone-scores", &pl::RunConfig::zone_scores, "zone aggregate GeoJSON to rank");
    add(app, "-T,--threshold", &pl::RunConfig::threshold, "segmentization spacing in metres");
    add_optional(app, "--slope-k", &pl::RunConfig::slope_k, "slope neighbour count K");
    add_optional(app, "--slope-d", &pl::RunConfig::slope_d, "slope neighbour radius D in metres");
    auto* pol = app->add_option("--missing-policy", policy, "renormalize | zero-fill | propagate-missing");
    appliers.emplace_back(pol, [this](pl::RunConfig& c) { c.missing_policy = rb::parse_missing_policy(policy); });
    add(app, "--profile", &pl::RunConfig::profile, "full, trashbot or a profile JSON file");
    add(app, "-o,--output", &pl::RunConfig::output, "output directory");
    add(app, "--seed", &pl::RunConfig::seed, "random seed (synth-city)");
    add(app, "-j,--workers", &pl::RunConfig::workers, "worker threads, 0 = all cores");
    add(app, "--band", &pl::RunConfig::band, "top/bottom band for ranking");
    add(app, "--smoothing", &pl::RunConfig::smoothing, "additive vote smoothing");
    add(app, "--strict-pairs", &pl::RunConfig::strict_pairs, "fail on feature pairs without votes");
    add(app, "--blocks", &pl::RunConfig::blocks, "blocks per side (synth-city)");
    add(app, "--block-size", &pl::RunConfig::block_size, "block size in metres (synth-city)");
    add(app, "--jitter", &pl::RunConfig::jitter, "node jitter as a fraction of a block (synth-city)");
    add(app, "--intensity", &pl::RunConfig::intensity, "planted downtown strength (synth-city)");
  }

  pl::RunConfig resolve() const {
    pl::RunConfig c = config_file.empty() ? pl::RunConfig{} : pl::load_config(config_file);
    for (const auto& [opt, apply] : appliers)
      if (opt->count() > 0) apply(c);
    return c;
  }

  std::map<std::string, double> value_store;
};

int run_serve(const std::string& artifacts, const std::string& addr) {
  if (artifacts.empty()) throw rb::ValidationError("serve: no artifact directory (--artifacts or ROBOTABILITY_ARTIFACT_DIR)");
  const auto bind = rb::service::parse_bind_address(addr);
  auto svc = rb::service::ScoreService::from_artifacts(artifacts);
  httplib::Server server;
  rb::service::mount(server, *svc);
  std::fprintf(stderr, "serving %s on %s:%d\n", artifacts.c_str(), bind.host.c_str(), bind.port);
  if (!server.listen(bind.host, bind.port)) throw rb::DataError("serve: cannot bind " + addr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robotability score engine"};
  app.require_subcommand(1);

  using Command = std::string (*)(const pl::RunConfig&);
  const std::vector<std::tuple<const char*, const char*, Command>> commands{
      {"derive-weights", "derive feature weights from pairwise votes", &pl::cmd_derive_weights},
      {"build-graph", "load and validate a sidewalk graph", &pl::cmd_build_graph},
      {"segmentize", "sample computation points along the graph", &pl::cmd_segmentize},
      {"extract", "extract the feature matrix", &pl::cmd_extract},
      {"score", "score points and zones for a profile", &pl::cmd_score},
      {"aggregate", "aggregate a score file into zones", &pl::cmd_aggregate},
      {"rank", "list top and bottom zones", &pl::cmd_rank},
      {"synth-city", "generate a synthetic city", &pl::cmd_synth_city},
  };
  std::vector<std::unique_ptr<FlagSet>> flagsets;
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn] : commands) {
    auto* sub = app.add_subcommand(name, help);
    flagsets.push_back(std::make_unique<FlagSet>());
    flagsets.back()->register_all(sub);
    subs.emplace_back(sub, fn);
  }
  std::string artifacts, addr = "127.0.0.1:8080";
  auto* serve = app.add_subcommand("serve", "serve a scored run over HTTP");
  serve->add_option("--artifacts", artifacts, "output directory of a score run")->envname("ROBOTABILITY_ARTIFACT_DIR");
  serve->add_option("--addr", addr, "bind address host:port")->envname("ROBOTABILITY_ADDR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (serve->parsed()) return run_serve(artifacts, addr);
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i].first->parsed()) {
        std::cout << subs[i].second(flagsets[i]->resolve());
        return 0;
      }
  } catch (const rb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
