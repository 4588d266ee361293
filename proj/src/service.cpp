#include "crackfield/service.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "crackfield/analysis.hpp"
#include "crackfield/serialize.hpp"
#include "crackfield/studies.hpp"

// after Eigen: <resolv.h> defines a `_res` macro
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace crackfield {
namespace {

constexpr const char* kModule = "service";
constexpr int kMaxPreview = 512;

enum class JobStatus { queued, running, done, failed };

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
  }
  return "unknown";
}

struct FieldEntry {
  DisplacementField field;
  GridReport grid;
  std::vector<std::string> warnings;
  std::optional<CrackDefinition> crack;
  std::string hash;  // key into the magnitude cache
};

struct JobEntry {
  std::string id;
  std::string field_id;
  std::string kind;
  JobStatus status = JobStatus::queued;
  // inputs, copied at submission
  DisplacementField field;
  CrackDefinition crack;
  Material material;
  AnalysisOptions options;
  std::vector<double> angles;
  // outputs
  Json result;
  Json study;
  Json suggestion;
  Json error;
};

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const Error& e) { send_json(res, status, error_json(e)); }

void send_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  send_json(res, status, error_json(kind, kModule, message));
}

std::optional<Json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    send_error(res, 400, "ConfigError", std::string("request body is not valid JSON: ") + e.what());
    return std::nullopt;
  }
}

Json field_json(const std::string& id, const FieldEntry& f) {
  const auto& d = f.field;
  return Json{{"id", id},
              {"grid", to_json(f.grid)},
              {"nx", d.nx},
              {"ny", d.ny},
              {"lower", {d.lower.x(), d.lower.y()}},
              {"upper", {d.upper.x(), d.upper.y()}},
              {"has_out_of_plane", d.has_out_of_plane},
              {"source_units", to_string(d.source_units)},
              {"masked_nodes", d.masked_count()},
              {"crack", f.crack ? to_json(*f.crack) : Json(nullptr)},
              {"warnings", f.warnings}};
}

std::string magnitude_json(const DisplacementField& field) {
  const int stride = std::max(1, (std::max(field.nx, field.ny) + kMaxPreview - 1) / kMaxPreview);
  const auto mag = magnitude(field);
  const int px = (field.nx + stride - 1) / stride;
  const int py = (field.ny + stride - 1) / stride;
  Json values = Json::array();
  double vmax = 0.0;
  for (int j = 0; j < field.ny; j += stride) {
    for (int i = 0; i < field.nx; i += stride) {
      const double v = mag[field.index(i, j)];
      vmax = std::max(vmax, v);
      values.push_back(v);
    }
  }
  Json out{{"nx", px},
           {"ny", py},
           {"stride", stride},
           {"lower", {field.lower.x(), field.lower.y()}},
           {"spacing_x", field.spacing_x * stride},
           {"spacing_y", field.spacing_y * stride},
           {"max", vmax},
           {"values", std::move(values)}};
  return out.dump();
}

int status_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ConfigError:
    case ErrorKind::IoError:
      return 400;
    default:
      return 422;
  }
}

}  // namespace

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::thread listener;
  std::vector<std::thread> workers;

  std::mutex mutex;
  std::condition_variable cv;
  bool stopping = false;
  std::map<std::string, FieldEntry> fields;
  std::map<std::string, JobEntry> jobs;
  std::map<std::string, std::string> magnitude_cache;  // content hash -> response body
  std::deque<std::string> queue;
  std::uint64_t next_field = 1;
  std::uint64_t next_job = 1;

  explicit Impl(ServiceOptions o) : options(std::move(o)) { routes(); }

  void routes();
  void upload(const httplib::Request& req, httplib::Response& res);
  void put_crack(const httplib::Request& req, httplib::Response& res);
  void submit(const httplib::Request& req, httplib::Response& res);
  void worker_loop();
  void run_job(JobEntry& job);
  Json job_json(const JobEntry& job) const;
};

void Service::Impl::routes() {
  server.Post("/api/fields", [this](const httplib::Request& req, httplib::Response& res) { upload(req, res); });

  server.Get(R"(/api/fields/([A-Za-z0-9]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex);
    auto it = fields.find(req.matches[1]);
    if (it == fields.end()) return send_error(res, 404, "NotFound", "unknown field");
    send_json(res, 200, field_json(it->first, it->second));
  });

  server.Get(R"(/api/fields/([A-Za-z0-9]+)/magnitude)", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex);
    auto it = fields.find(req.matches[1]);
    if (it == fields.end()) return send_error(res, 404, "NotFound", "unknown field");
    res.set_content(magnitude_cache.at(it->second.hash), "application/json");
  });

  server.Put(R"(/api/fields/([A-Za-z0-9]+)/crack)",
             [this](const httplib::Request& req, httplib::Response& res) { put_crack(req, res); });

  server.Post(R"(/api/fields/([A-Za-z0-9]+)/jobs)",
              [this](const httplib::Request& req, httplib::Response& res) { submit(req, res); });

  server.Get(R"(/api/jobs/([A-Za-z0-9]+))", [this](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mutex);
    auto it = jobs.find(req.matches[1]);
    if (it == jobs.end()) return send_error(res, 404, "NotFound", "unknown job");
    send_json(res, it->second.status == JobStatus::failed ? 500 : 200, job_json(it->second));
  });

  if (!options.static_dir.empty()) server.set_mount_point("/", options.static_dir.string());
}

void Service::Impl::upload(const httplib::Request& req, httplib::Response& res) {
  std::string body = req.body;
  if (req.is_multipart_form_data()) {
    if (!req.has_file("file")) return send_error(res, 400, "ConfigError", "multipart upload needs a 'file' part");
    body = req.get_file_value("file").content;
  }
  FieldEntry entry;
  try {
    const LengthUnit units = parse_length_unit(req.has_param("units") ? req.get_param_value("units") : "m");
    std::istringstream in(body);
    const PointCloud points = read_points(in, units);
    entry.grid = validate_grid(points);
    Diagnostics diag;
    entry.field = to_field(points, entry.grid, &diag);
    entry.warnings = std::move(diag.warnings);
    entry.hash = fnv1a64(body) + "-" + std::string(to_string(units));
  } catch (const Error& e) {
    return send_error(res, 400, e);
  }
  std::string id;
  {
    std::lock_guard lock(mutex);
    id = "f" + std::to_string(next_field++);
    if (!magnitude_cache.contains(entry.hash)) magnitude_cache.emplace(entry.hash, magnitude_json(entry.field));
    fields.emplace(id, std::move(entry));
    const auto& f = fields.at(id);
    send_json(res, 201,
              Json{{"id", id}, {"grid", to_json(f.grid)}, {"has_out_of_plane", f.field.has_out_of_plane},
                   {"warnings", f.warnings}});
  }
  spdlog::info("field {} uploaded", id);
}

void Service::Impl::put_crack(const httplib::Request& req, httplib::Response& res) {
  const std::string id = req.matches[1];
  DisplacementField field;
  {
    std::lock_guard lock(mutex);
    auto it = fields.find(id);
    if (it == fields.end()) return send_error(res, 404, "NotFound", "unknown field");
    field = it->second.field;
  }
  auto body = parse_body(req, res);
  if (!body) return;
  CrackDefinition crack;
  Json out;
  try {
    crack = crack_from_json(*body);
    Diagnostics diag;
    if (crack.mask) field = apply_mask(field, *crack.mask, &diag);
    const SeamMesh mesh = build_seam_mesh(field, crack, &diag);
    Json chain = Json::array();
    for (int n : mesh.seam_chain) {
      const Vec2 p = field.position(static_cast<std::size_t>(n));
      chain.push_back({p.x(), p.y()});
    }
    out = Json{{"crack", to_json(crack)},
               {"snapped_chain", chain},
               {"seam_nodes", mesh.seam_pairs.size()},
               {"available_contours", available_contours(mesh)},
               {"warnings", diag.warnings}};
  } catch (const Error& e) {
    return send_error(res, status_for(e), e);
  }
  std::lock_guard lock(mutex);
  auto it = fields.find(id);
  if (it == fields.end()) return send_error(res, 404, "NotFound", "unknown field");
  it->second.crack = std::move(crack);
  send_json(res, 200, out);
}

void Service::Impl::submit(const httplib::Request& req, httplib::Response& res) {
  const std::string field_id = req.matches[1];
  auto body = parse_body(req, res);
  if (!body) return;
  JobEntry job;
  job.field_id = field_id;
  try {
    if (!body->is_object()) throw Error(ErrorKind::ConfigError, kModule, "job request must be a JSON object");
    job.kind = body->value("kind", std::string("analysis"));
    if (job.kind != "analysis" && job.kind != "qsweep") {
      throw Error(ErrorKind::ConfigError, kModule, "unknown job kind '" + job.kind + "' (analysis | qsweep)");
    }
    if (!body->contains("material")) throw Error(ErrorKind::ConfigError, kModule, "job needs a 'material'");
    job.material = material_from_json(body->at("material"));
    job.options = analysis_options_from_json(*body);
    if (body->contains("angles_deg")) {
      for (const auto& a : body->at("angles_deg")) job.angles.push_back(a.get<double>() * std::numbers::pi / 180.0);
    }
  } catch (const Error& e) {
    return send_error(res, 400, e);
  } catch (const Json::exception& e) {
    return send_error(res, 400, "ConfigError", e.what());
  }

  std::lock_guard lock(mutex);
  auto it = fields.find(field_id);
  if (it == fields.end()) return send_error(res, 404, "NotFound", "unknown field");
  if (!it->second.crack) return send_error(res, 409, "Conflict", "define a crack before submitting jobs");
  for (const auto& [_, other] : jobs) {
    if (other.field_id == field_id && (other.status == JobStatus::queued || other.status == JobStatus::running)) {
      return send_error(res, 409, "Conflict", "job " + other.id + " is still active for this field");
    }
  }
  if (queue.size() >= options.queue_capacity) return send_error(res, 503, "QueueFull", "job queue is full");
  job.field = it->second.field;
  job.crack = *it->second.crack;
  job.id = "j" + std::to_string(next_job++);
  const std::string id = job.id;
  auto [slot, _] = jobs.emplace(id, std::move(job));
  queue.push_back(id);
  cv.notify_one();
  send_json(res, 202, job_json(slot->second));
}

void Service::Impl::worker_loop() {
  for (;;) {
    JobEntry* job = nullptr;
    {
      std::unique_lock lock(mutex);
      cv.wait(lock, [this] { return stopping || !queue.empty(); });
      if (stopping) return;
      job = &jobs.at(queue.front());
      queue.pop_front();
      job->status = JobStatus::running;
    }
    // Inputs are immutable once queued, so the job runs without the lock.
    JobEntry work;
    work.kind = job->kind;
    work.field = std::move(job->field);
    work.crack = job->crack;
    work.material = job->material;
    work.options = job->options;
    work.angles = job->angles;
    run_job(work);
    std::lock_guard lock(mutex);
    job->status = work.status;
    job->result = std::move(work.result);
    job->study = std::move(work.study);
    job->suggestion = std::move(work.suggestion);
    job->error = std::move(work.error);
    spdlog::info("job {} {}", job->id, to_string(job->status));
  }
}

void Service::Impl::run_job(JobEntry& job) {
  try {
    const PreparedProblem problem = prepare_problem(job.field, job.crack, job.material, job.options);
    const double q = problem.crack.q_direction();
    job.result = result_json(summarize(problem, evaluate_series(problem, q), q));
    if (job.kind == "qsweep") {
      const double crack_angle = problem.crack.crack_direction();
      const auto angles = job.angles.empty() ? default_sweep_angles(crack_angle) : job.angles;
      const StudyResult sweep = q_sweep(problem, angles);
      job.study = to_json(sweep);
      job.suggestion = to_json(suggest_q_direction(sweep, crack_angle));
    }
    job.status = JobStatus::done;
  } catch (const Error& e) {
    job.error = error_json(e).at("error");
    job.status = JobStatus::failed;
  } catch (const std::exception& e) {
    job.error = error_json("InternalError", kModule, e.what()).at("error");
    job.status = JobStatus::failed;
  }
}

Json Service::Impl::job_json(const JobEntry& job) const {
  return Json{{"id", job.id},         {"field_id", job.field_id}, {"kind", job.kind},
              {"status", to_string(job.status)}, {"result", job.result},     {"study", job.study},
              {"suggestion", job.suggestion},    {"error", job.error}};
}

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() { stop(); }

int Service::start() {
  auto& s = *impl_;
  int port = s.options.port;
  if (port == 0) {
    port = s.server.bind_to_any_port(s.options.host);
    if (port < 0) throw Error(ErrorKind::IoError, kModule, "cannot bind " + s.options.host);
  } else if (!s.server.bind_to_port(s.options.host, port)) {
    throw Error(ErrorKind::IoError, kModule, "cannot bind " + s.options.host + ":" + std::to_string(port));
  }
  for (int i = 0; i < std::max(1, s.options.workers); ++i) s.workers.emplace_back([&s] { s.worker_loop(); });
  s.listener = std::thread([&s] { s.server.listen_after_bind(); });
  s.server.wait_until_ready();
  spdlog::info("listening on http://{}:{}", s.options.host, port);
  return port;
}

void Service::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->cv.wait(lock, [this] { return impl_->stopping; });
}

void Service::stop() {
  auto& s = *impl_;
  s.server.stop();
  {
    std::lock_guard lock(s.mutex);
    s.stopping = true;
  }
  s.cv.notify_all();
  if (s.listener.joinable()) s.listener.join();
  for (auto& w : s.workers)
    if (w.joinable()) w.join();
  s.workers.clear();
}

}  // namespace crackfield
