#include "gaze360/annotation_http.hpp"

#include <charconv>
#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "gaze360/formats.hpp"

namespace gaze360 {

using json = nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  send_json(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

std::optional<std::int64_t> int_param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  const std::string v = req.get_param_value(name);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ApiError(400, "bad_parameter", std::string(name) + " must be an integer");
  }
  return out;
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ApiError(400, "bad_json", e.what());
  }
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json track_to_json(const std::string& id, const LabelState& state) {
  json primary = json::array(), secondary = json::array();
  for (auto l : state.track.primary) primary.push_back(std::string(to_token(l)));
  for (auto l : state.track.secondary) secondary.push_back(std::string(to_token(l)));
  return {{"id", id},
          {"revision", state.revision},
          {"t_us", state.track.t_us},
          {"primary", std::move(primary)},
          {"secondary", std::move(secondary)}};
}

LabelTrack track_from_json(const json& j) {
  if (!j.is_object() || !j.contains("t_us") || !j.contains("primary") ||
      !j.contains("secondary")) {
    throw ApiError(400, "bad_track", "track needs t_us, primary and secondary arrays");
  }
  LabelTrack t;
  try {
    t.t_us = j["t_us"].get<std::vector<std::int64_t>>();
    for (const auto& s : j["primary"]) {
      auto l = primary_from_token(s.get<std::string>());
      if (!l) throw ApiError(400, "bad_label", "unknown primary label " + s.dump());
      t.primary.push_back(*l);
    }
    for (const auto& s : j["secondary"]) {
      auto l = secondary_from_token(s.get<std::string>());
      if (!l) throw ApiError(400, "bad_label", "unknown secondary label " + s.dump());
      t.secondary.push_back(*l);
    }
  } catch (const json::exception& e) {
    throw ApiError(400, "bad_track", e.what());
  }
  return t;
}

LabelEdit edit_from_json(const json& j) {
  if (!j.is_object()) throw ApiError(400, "bad_edit", "edits must be objects");
  LabelEdit e;
  try {
    e.from_us = j.at("from_us").get<std::int64_t>();
    e.to_us = j.at("to_us").get<std::int64_t>();
    const std::string tier = j.at("tier").get<std::string>();
    const std::string token = j.at("label").get<std::string>();
    if (tier == "primary") {
      auto l = primary_from_token(token);
      if (!l) throw ApiError(400, "bad_label", "unknown primary label '" + token + "'");
      e.label = *l;
    } else if (tier == "secondary") {
      auto l = secondary_from_token(token);
      if (!l) throw ApiError(400, "bad_label", "unknown secondary label '" + token + "'");
      e.label = *l;
    } else {
      throw ApiError(400, "bad_edit", "tier must be 'primary' or 'secondary'");
    }
  } catch (const json::exception& ex) {
    throw ApiError(400, "bad_edit", ex.what());
  }
  return e;
}

int base_revision(const json& body, bool required) {
  if (!body.contains("base_revision")) {
    if (required) throw ApiError(400, "missing_base_revision", "base_revision is required");
    return -1;
  }
  if (!body["base_revision"].is_number_integer()) {
    throw ApiError(400, "bad_base_revision", "base_revision must be an integer");
  }
  return body["base_revision"].get<int>();
}

}  // namespace

std::filesystem::path default_schema_file() {
  return std::filesystem::path(GAZE360_SCHEMA_DIR) / "annotation_api.schema.json";
}

struct AnnotationServer::Impl {
  AnnotationStore& store;
  ServerOptions options;
  httplib::Server server;

  Impl(AnnotationStore& s, ServerOptions o) : store(s), options(std::move(o)) {
    if (options.schema_file.empty()) options.schema_file = default_schema_file();
    routes();
  }

  // Wraps a handler so ApiError and other failures become JSON errors.
  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const ApiError& e) {
        send_error(res, e.status(), e.code(), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Get("/api/schema", guarded([this](const httplib::Request&, httplib::Response& res) {
      res.set_content(read_text_file(options.schema_file), "application/schema+json");
    }));

    server.Get("/api/recordings", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& r : store.list()) {
        json item = {{"id", r.id},
                     {"n_samples", r.n_samples},
                     {"duration_us", r.duration_us},
                     {"sampling_rate_hz", r.sampling_rate_hz},
                     {"status", r.status},
                     {"revision", r.revision}};
        if (!r.error.empty()) item["error"] = r.error;
        list.push_back(std::move(item));
      }
      send_json(res, {{"recordings", std::move(list)}});
    }));

    server.Get("/api/recordings/:id/samples",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.path_params.at("id");
                 const std::string frame =
                     req.has_param("frame") ? req.get_param_value("frame") : "fov";
                 const auto s =
                     store.samples(id, frame, int_param(req, "from_us"), int_param(req, "to_us"));
                 json gaze = json::array(), head = json::array(), valid = json::array();
                 for (double v : s.gaze_speed) gaze.push_back(nullable(v));
                 for (double v : s.head_speed) head.push_back(nullable(v));
                 for (bool v : s.valid) valid.push_back(v);
                 send_json(res, {{"id", id},
                                 {"frame", s.frame},
                                 {"t_us", s.t_us},
                                 {"x", s.x},
                                 {"y", s.y},
                                 {"gaze_speed", std::move(gaze)},
                                 {"head_speed", std::move(head)},
                                 {"valid", std::move(valid)}});
               }));

    server.Get("/api/recordings/:id/labels",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.path_params.at("id");
                 send_json(res, track_to_json(id, store.labels(id)));
               }));

    server.Put("/api/recordings/:id/labels",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.path_params.at("id");
                 const json body = parse_body(req);
                 const int base = base_revision(body, true);
                 const bool has_track = body.contains("track");
                 const bool has_edits = body.contains("edits");
                 if (has_track == has_edits) {
                   throw ApiError(400, "bad_request", "send exactly one of 'track' or 'edits'");
                 }
                 int rev;
                 if (has_track) {
                   rev = store.put_track(id, base, track_from_json(body["track"]));
                 } else {
                   if (!body["edits"].is_array()) {
                     throw ApiError(400, "bad_edit", "'edits' must be an array");
                   }
                   std::vector<LabelEdit> edits;
                   for (const auto& e : body["edits"]) edits.push_back(edit_from_json(e));
                   rev = store.apply_edits(id, base, edits);
                 }
                 send_json(res, {{"id", id}, {"revision", rev}});
               }));

    server.Post("/api/recordings/:id/prelabel",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.path_params.at("id");
                  const bool force = req.has_param("force") && req.get_param_value("force") != "0";
                  send_json(res, {{"id", id}, {"revision", store.prelabel(id, force)}});
                }));

    server.Post("/api/recordings/:id/undo",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.path_params.at("id");
                  const json body = parse_body(req);
                  const int base = base_revision(body, false);
                  const auto rev = store.undo(id, base < 0 ? std::nullopt : std::optional(base));
                  send_json(res, {{"id", id}, {"revision", rev}});
                }));

    if (!options.static_dir.empty()) server.set_mount_point("/", options.static_dir.string());
  }
};

AnnotationServer::AnnotationServer(AnnotationStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

AnnotationServer::~AnnotationServer() = default;

bool AnnotationServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int AnnotationServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool AnnotationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void AnnotationServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void AnnotationServer::stop() { impl_->server.stop(); }

}  // namespace gaze360
