#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace crackfield {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;  // served at "/" when set
  std::size_t queue_capacity = 4;
  int workers = 1;
};

/// HTTP front end for the analysis engine.
///
///   POST /api/fields?units=mm          upload a CSV (multipart "file" or raw body)
///   GET  /api/fields/{id}              grid metadata
///   GET  /api/fields/{id}/magnitude    displacement magnitude, at most 512 x 512
///   PUT  /api/fields/{id}/crack        crack definition (SI units)
///   POST /api/fields/{id}/jobs         analysis or q sweep
///   GET  /api/jobs/{id}                job status and result
///
/// Errors are returned as {"error": {kind, module, message}}.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves on a background thread. Returns the bound port.
  int start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crackfield
