#pragma once

// HTTP facade over a scored run's artifact directory. Handlers are plain
// functions of (state, request) so tests can drive them without sockets; the
// cpp-httplib binding in `serve` only moves bytes.

#include <cstdlib>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "robotability/error.hpp"
#include "robotability/io.hpp"
#include "robotability/pipeline.hpp"

namespace robotability::service {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

class NotFound : public Error {
public:
  using Error::Error;
};

/// Bounded LRU of profile results keyed by profile token.
class ProfileCache {
public:
  using Value = std::shared_ptr<const pipeline::ProfileResult>;

  explicit ProfileCache(std::size_t capacity = 32) : capacity_(capacity == 0 ? 1 : capacity) {}

  Value get(const std::string& key) {
    std::lock_guard lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
  }

  /// Inserts unless present; returns the cached value either way.
  Value put(const std::string& key, Value v) {
    std::lock_guard lock(mu_);
    if (auto it = map_.find(key); it != map_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->second;
    }
    order_.emplace_front(key, std::move(v));
    map_[key] = order_.begin();
    if (order_.size() > capacity_) {
      map_.erase(order_.back().first);
      order_.pop_back();
    }
    return order_.front().second;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return order_.size();
  }

private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<std::pair<std::string, Value>> order_;
  std::unordered_map<std::string, decltype(order_)::iterator> map_;
};

namespace detail {

inline HttpResponse json_response(int status, const std::string& body) {
  return {status, "application/json", body};
}

inline HttpResponse error_response(int status, const std::string& what) {
  std::istringstream in(what);
  std::string line, head;
  json details = json::array();
  std::getline(in, head);
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(' ');
    if (b != std::string::npos) details.push_back(line.substr(b));
  }
  json body = {{"error", head}, {"status", status}};
  if (!details.empty()) body["details"] = details;
  return json_response(status, body.dump());
}

inline std::optional<BBox> parse_bbox(const std::string& s) {
  const auto parts = io::split_csv(s);
  if (parts.size() != 4) return std::nullopt;
  double v[4];
  for (int i = 0; i < 4; ++i) {
    char* end = nullptr;
    v[i] = std::strtod(parts[i].c_str(), &end);
    if (parts[i].empty() || end != parts[i].c_str() + parts[i].size() || !std::isfinite(v[i]))
      return std::nullopt;
  }
  if (!(v[0] < v[2] && v[1] < v[3])) return std::nullopt;
  return BBox{v[0], v[1], v[2], v[3]};
}

inline std::optional<std::size_t> parse_count(const std::string& s) {
  if (s.empty() || s.size() > 12 || s.find_first_not_of("0123456789") != std::string::npos)
    return std::nullopt;
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace detail

class ScoreService {
public:
  static constexpr std::size_t kDefaultPageSize = 10000;
  static constexpr std::size_t kMaxPageSize = 100000;

  /// Fails fast if the workspace cannot score its base (full) profile.
  explicit ScoreService(pipeline::Workspace ws, std::size_t cache_capacity = 32)
      : ws_(std::move(ws)), cache_(cache_capacity) {
    base_ = std::make_shared<const pipeline::ProfileResult>(
        pipeline::evaluate_profile(ws_, fixtures::full_profile(ws_.catalog)));
  }

  /// Loads the run recorded in `dir/manifest.score.json` against `dir/features.bin`.
  static std::unique_ptr<ScoreService> from_artifacts(const fs::path& dir, std::size_t cache_capacity = 32) {
    const auto manifest_path = dir / "manifest.score.json";
    if (!fs::is_regular_file(manifest_path))
      throw DataError("artifact directory '" + dir.string() + "' has no manifest.score.json");
    const auto manifest = io::read_json(manifest_path);
    auto cfg = pipeline::config_from_json(manifest.at("config"));
    cfg.features = (dir / "features.bin").string();
    if (!fs::is_regular_file(cfg.features))
      throw DataError("artifact directory '" + dir.string() + "' has no features.bin");
    return std::make_unique<ScoreService>(pipeline::load_workspace(cfg), cache_capacity);
  }

  const pipeline::Workspace& workspace() const noexcept { return ws_; }
  const pipeline::ProfileResult& base() const noexcept { return *base_; }
  std::size_t cached_profiles() const { return cache_.size(); }

  HttpResponse handle(const HttpRequest& req) const {
    try {
      if (req.path == "/healthz") return only(req, "GET", [&] { return healthz(); });
      if (req.path == "/catalog") return only(req, "GET", [&] { return catalog(); });
      if (req.path == "/weights") return only(req, "GET", [&] { return weights(); });
      if (req.path == "/profile") return only(req, "POST", [&] { return post_profile(req.body); });
      if (req.path == "/zones") return only(req, "GET", [&] { return zones(param(req, "profile")); });
      if (req.path == "/scores")
        return only(req, "GET", [&] {
          return scores(param(req, "bbox"), param(req, "profile"), param(req, "cursor"), param(req, "limit"));
        });
      return detail::error_response(404, "no route for " + req.path);
    } catch (const NotFound& e) {
      return detail::error_response(404, e.what());
    } catch (const ValidationError& e) {
      return detail::error_response(400, e.what());
    } catch (const DataError& e) {
      return detail::error_response(422, e.what());
    } catch (const std::exception& e) {
      return detail::error_response(500, e.what());
    }
  }

  HttpResponse healthz() const {
    return detail::json_response(200, json{{"status", "ok"},
                                           {"points", ws_.points.size()},
                                           {"features", ws_.matrix.feature_ids},
                                           {"zones", ws_.zones.size()}}
                                          .dump());
  }

  /// Catalog order; excluded entries carry their reason.
  HttpResponse catalog() const {
    json feats = json::array();
    for (const auto& f : ws_.catalog.features) {
      json e = io::feature_def_to_json(f);
      e["active"] = !ws_.catalog.is_excluded(f.id);
      for (const auto& [id, why] : ws_.catalog.excluded)
        if (id == f.id) e["excluded_reason"] = why;
      feats.push_back(std::move(e));
    }
    return detail::json_response(
        200, json{{"features", feats}, {"active_count", ws_.catalog.active_ids().size()}}.dump());
  }

  HttpResponse weights() const {
    json w = io::weights_to_json(base_->weights.weights);
    json pol = json::object();
    for (const auto& [id, v] : base_->weights.polarities) pol[id] = v;
    w["polarities"] = pol;
    return detail::json_response(200, w.dump());
  }

  HttpResponse post_profile(const std::string& body) const {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("profile body is not valid JSON: ") + e.what());
    }
    return detail::json_response(200, evaluate(io::profile_from_json(doc))->document);
  }

  HttpResponse zones(const std::string& token) const {
    const auto r = lookup(token);
    return detail::json_response(200, io::zone_aggregates_to_geojson(r->zones).dump());
  }

  /// Points inside the box in id order, paged by an offset cursor.
  HttpResponse scores(const std::string& bbox, const std::string& token, const std::string& cursor,
                      const std::string& limit) const {
    const auto box = detail::parse_bbox(bbox);
    if (!box) throw ValidationError("bbox must be minx,miny,maxx,maxy with min < max on both axes");
    std::size_t start = 0, page = kDefaultPageSize;
    if (!cursor.empty()) {
      auto c = detail::parse_count(cursor);
      if (!c) throw ValidationError("cursor must be a non-negative integer");
      start = *c;
    }
    if (!limit.empty()) {
      auto l = detail::parse_count(limit);
      if (!l || *l == 0 || *l > kMaxPageSize)
        throw ValidationError("limit must be an integer in [1, " + std::to_string(kMaxPageSize) + "]");
      page = *l;
    }
    const auto r = lookup(token);
    const auto ids = ws_.points.index().in_box(*box);
    std::vector<std::size_t> rows;
    for (std::size_t i = start; i < ids.size() && rows.size() < page; ++i) rows.push_back(ids[i]);
    const std::size_t next = start + rows.size();
    json extra = {{"total", ids.size()},
                  {"next_cursor", next < ids.size() ? json(std::to_string(next)) : json(nullptr)},
                  {"profile", r->token}};
    return {200, "application/geo+json",
            io::format_scores_geojson(r->field, ws_.points.positions(), &r->percentiles, &rows, extra)};
  }

  /// Cached evaluation; identical profiles share one result.
  std::shared_ptr<const pipeline::ProfileResult> evaluate(const RobotProfile& p) const {
    const auto token = pipeline::profile_token(p);
    if (token == base_->token) return base_;
    if (auto hit = cache_.get(token)) return hit;
    auto fresh = std::make_shared<const pipeline::ProfileResult>(pipeline::evaluate_profile(ws_, p));
    return cache_.put(token, std::move(fresh));
  }

private:
  template <class Fn>
  static HttpResponse only(const HttpRequest& req, const char* method, Fn&& fn) {
    if (req.method != method)
      return detail::error_response(405, "method " + req.method + " not allowed on " + req.path);
    return fn();
  }

  static std::string param(const HttpRequest& req, const std::string& key) {
    auto it = req.query.find(key);
    return it == req.query.end() ? std::string() : it->second;
  }

  std::shared_ptr<const pipeline::ProfileResult> lookup(const std::string& token) const {
    if (token.empty() || token == base_->token) return base_;
    if (auto hit = cache_.get(token)) return hit;
    throw NotFound("unknown profile token '" + token + "'");
  }

  pipeline::Workspace ws_;
  std::shared_ptr<const pipeline::ProfileResult> base_;
  mutable ProfileCache cache_;
};

struct BindAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// "host:port", ":port" or "port".
inline BindAddress parse_bind_address(const std::string& s) {
  BindAddress a;
  if (s.empty()) return a;
  const auto colon = s.rfind(':');
  std::string port = colon == std::string::npos ? s : s.substr(colon + 1);
  if (colon != std::string::npos && colon > 0) a.host = s.substr(0, colon);
  auto p = detail::parse_count(port);
  if (!p || *p == 0 || *p > 65535) throw ValidationError("bad bind address '" + s + "'");
  a.port = static_cast<int>(*p);
  return a;
}

}  // namespace robotability::service
