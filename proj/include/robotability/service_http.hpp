#pragma once

#include <httplib.h>

#include "robotability/service.hpp"

namespace robotability::service {

/// Routes every request through ScoreService::handle.
inline void mount(httplib::Server& server, const ScoreService& svc) {
  auto forward = [&svc](const httplib::Request& in, httplib::Response& out) {
    HttpRequest req;
    req.method = in.method;
    req.path = in.path;
    for (const auto& [k, v] : in.params) req.query.emplace(k, v);
    req.body = in.body;
    const auto r = svc.handle(req);
    out.status = r.status;
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_content(r.body, r.content_type);
  };
  server.Get(R"(/.*)", forward);
  server.Post(R"(/.*)", forward);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& out) {
    out.set_header("Access-Control-Allow-Origin", "*");
    out.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    out.set_header("Access-Control-Allow-Headers", "Content-Type");
    out.status = 204;
  });
}

}  // namespace robotability::service
