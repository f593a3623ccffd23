#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "gaze360/annotation.hpp"

namespace gaze360 {

struct ServerOptions {
  /// Directory served at / when set (the browser UI build).
  std::filesystem::path static_dir;
  /// JSON schema returned by GET /api/schema.
  std::filesystem::path schema_file;
};

/// Path of the in-repo API schema, as configured at build time.
std::filesystem::path default_schema_file();

/// HTTP + JSON front end of an AnnotationStore.
///
///   GET  /api/schema
///   GET  /api/recordings
///   GET  /api/recordings/{id}/samples?frame=fov|eh&from_us=&to_us=
///   GET  /api/recordings/{id}/labels
///   PUT  /api/recordings/{id}/labels         {base_revision, track | edits}
///   POST /api/recordings/{id}/prelabel?force=1
///   POST /api/recordings/{id}/undo           {base_revision}?
///
/// Errors are {"error": {"code", "message"}} with a 4xx/5xx status.
class AnnotationServer {
 public:
  AnnotationServer(AnnotationStore& store, ServerOptions options = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gaze360
