#include "pointscene/service.h"

#include <httplib.h>

#include <charconv>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <thread>

#include "pointscene/error.h"
#include "pointscene/io.h"
#include "pointscene/render_pipeline.h"

namespace pointscene {
namespace {

constexpr char kRevisionHeader[] = "X-Scene-Revision";
constexpr char kJson[] = "application/json";

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownInstance:
    case ErrorCode::kUnknownView:
      return 404;
    case ErrorCode::kUnknownBackend:
      return 400;
    case ErrorCode::kBackendUnavailable:
      return 503;
    case ErrorCode::kBadResponse:
    case ErrorCode::kFidelityViolation:
      return 502;
    default:
      break;
  }
  switch (CategoryOf(code)) {
    case ErrorCategory::kValidation:
      return 400;
    case ErrorCategory::kIo:
      return 500;
    case ErrorCategory::kBackend:
      return 502;
  }
  return 500;
}

nlohmann::json ErrorJson(const std::string& code, const std::string& detail) {
  return {{"error", code}, {"detail", detail}};
}

void SendJson(httplib::Response& res, int status, const nlohmann::json& body,
              uint64_t revision) {
  res.status = status;
  res.set_header(kRevisionHeader, std::to_string(revision));
  res.set_content(body.dump(), kJson);
}

template <typename T>
void AppendLe(std::string& out, const T& value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

enum class JobStatus { kPending, kRunning, kDone, kFailed };

const char* JobStatusName(JobStatus s) {
  switch (s) {
    case JobStatus::kPending: return "pending";
    case JobStatus::kRunning: return "running";
    case JobStatus::kDone: return "done";
    case JobStatus::kFailed: return "failed";
  }
  return "unknown";
}

struct RenderRecord {
  JobStatus status = JobStatus::kPending;
  std::string backend;
  uint64_t revision = 0;
  std::string png;
  ErrorCode error_code = ErrorCode::kInvalidArgument;
  std::string error_detail;
};

}  // namespace

struct SceneService::Impl {
  PipelineConfig config;
  std::filesystem::path workspace;
  ServiceOptions options;

  SceneBundle bundle;
  ScenePointCloud original;

  mutable std::shared_mutex state_mutex;
  std::shared_ptr<const ScenePointCloud> cloud;
  EditLog log;
  uint64_t revision = 0;

  std::mutex jobs_mutex;
  std::map<std::string, RenderRecord> jobs;
  uint64_t next_job = 1;

  std::mutex queue_mutex;
  std::condition_variable queue_cv;
  std::deque<std::function<void()>> queue;
  bool stopping = false;
  std::vector<std::thread> workers;

  std::mutex external_mutex;
  std::unique_ptr<ExternalBackend> external;

  httplib::Server server;
  std::thread listener;
  std::mutex lifecycle_mutex;
  bool started = false;
  bool stopped = false;

  uint64_t Revision() const {
    std::shared_lock lock(state_mutex);
    return revision;
  }

  void SendError(httplib::Response& res, const Error& e) {
    SendJson(res, StatusFor(e.code()),
             ErrorJson(std::string(ErrorCodeName(e.code())), e.detail()),
             Revision());
  }

  // Wraps a handler so library errors become JSON error responses.
  httplib::Server::Handler Guard(
      std::function<void(const httplib::Request&, httplib::Response&)> fn) {
    return [this, fn = std::move(fn)](const httplib::Request& req,
                                      httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        SendError(res, e);
      } catch (const nlohmann::json::exception& e) {
        SendJson(res, 400, ErrorJson("invalid_argument", e.what()), Revision());
      } catch (const std::exception& e) {
        SendJson(res, 500, ErrorJson("internal", e.what()), Revision());
      }
    };
  }

  RenderBackend& BackendFor(const std::string& name,
                            std::unique_ptr<RenderBackend>& owned) {
    if (name == "external") {
      std::lock_guard lock(external_mutex);
      if (!external) external = std::make_unique<ExternalBackend>(config.external);
      return *external;
    }
    owned = MakeBackend(name, config.external);
    return *owned;
  }

  void Enqueue(std::function<void()> task) {
    {
      std::lock_guard lock(queue_mutex);
      queue.push_back(std::move(task));
    }
    queue_cv.notify_one();
  }

  void WorkerLoop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock lock(queue_mutex);
        queue_cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (queue.empty()) return;
        task = std::move(queue.front());
        queue.pop_front();
      }
      task();
    }
  }

  void RunRender(const std::string& job_id, const std::string& backend_name,
                 const Camera& camera,
                 std::shared_ptr<const ScenePointCloud> snapshot,
                 const EditLog& snapshot_log) {
    {
      std::lock_guard lock(jobs_mutex);
      jobs[job_id].status = JobStatus::kRunning;
    }
    RenderRecord result;
    try {
      const RenderJob job = BuildRenderJob(*snapshot, camera, bundle.frames,
                                           snapshot_log, config.splat, job_id);
      std::unique_ptr<RenderBackend> owned;
      RenderBackend& backend = BackendFor(backend_name, owned);
      const RgbImage image = Dispatch(job, backend);
      const std::vector<uint8_t> png = EncodePngRgb(image);
      result.png.assign(png.begin(), png.end());
      result.status = JobStatus::kDone;
    } catch (const Error& e) {
      result.status = JobStatus::kFailed;
      result.error_code = e.code();
      result.error_detail = e.detail();
    } catch (const std::exception& e) {
      result.status = JobStatus::kFailed;
      result.error_code = ErrorCode::kIo;
      result.error_detail = e.what();
    }
    std::lock_guard lock(jobs_mutex);
    RenderRecord& record = jobs[job_id];
    record.status = result.status;
    record.png = std::move(result.png);
    record.error_code = result.error_code;
    record.error_detail = std::move(result.error_detail);
  }

  void HandleScene(const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(state_mutex);
    nlohmann::json views = nlohmann::json::array();
    for (const ViewFrame& f : bundle.frames) {
      views.push_back({{"view_id", f.view_id},
                       {"width", f.width()},
                       {"height", f.height()},
                       {"camera", CameraToJson(f.camera())}});
    }
    SendJson(res, 200,
             {{"scene_id", bundle.metadata.scene_id},
              {"units", bundle.metadata.units},
              {"convention", bundle.metadata.convention},
              {"views", views},
              {"num_points", cloud->size()},
              {"num_alive", cloud->NumAlive()},
              {"num_edits", log.size()},
              {"revision", revision}},
             revision);
  }

  void HandleCloud(const httplib::Request& req, httplib::Response& res) {
    bool only_alive = true;
    if (req.has_param("only_alive")) {
      const std::string v = req.get_param_value("only_alive");
      PS_CHECK(v == "true" || v == "false" || v == "1" || v == "0",
               ErrorCode::kInvalidArgument, "only_alive must be true/false");
      only_alive = v == "true" || v == "1";
    }
    size_t max_points = 0;
    if (req.has_param("max_points")) {
      const std::string v = req.get_param_value("max_points");
      const auto [end, ec] =
          std::from_chars(v.data(), v.data() + v.size(), max_points);
      PS_CHECK(ec == std::errc() && end == v.data() + v.size() && !v.empty(),
               ErrorCode::kInvalidArgument,
               "max_points must be a non-negative integer");
    }
    std::shared_ptr<const ScenePointCloud> snapshot;
    uint64_t rev = 0;
    {
      std::shared_lock lock(state_mutex);
      snapshot = cloud;
      rev = revision;
    }
    std::vector<size_t> eligible;
    for (size_t i = 0; i < snapshot->size(); ++i) {
      if (!only_alive || snapshot->alive[i]) eligible.push_back(i);
    }
    size_t stride = 1;
    if (max_points > 0 && eligible.size() > max_points) {
      stride = (eligible.size() + max_points - 1) / max_points;
    }
    const size_t count = (eligible.size() + stride - 1) / stride;
    std::string body;
    body.reserve(kCloudHeaderBytes + count * kCloudRecordBytes);
    body.append(kCloudMagic, 4);
    AppendLe(body, static_cast<uint32_t>(count));
    AppendLe(body, static_cast<uint64_t>(rev));
    for (size_t k = 0; k < eligible.size(); k += stride) {
      const size_t i = eligible[k];
      for (int a = 0; a < 3; ++a) {
        AppendLe(body, static_cast<float>(snapshot->positions[i](a)));
      }
      body.append(reinterpret_cast<const char*>(snapshot->colors[i].data()), 3);
      AppendLe(body, snapshot->instance_id[i]);
    }
    res.status = 200;
    res.set_header(kRevisionHeader, std::to_string(rev));
    res.set_content(std::move(body), "application/octet-stream");
  }

  void HandleInstances(const httplib::Request&, httplib::Response& res) {
    std::shared_lock lock(state_mutex);
    std::map<int32_t, std::pair<size_t, size_t>> counts;  // total, alive
    for (size_t i = 0; i < cloud->size(); ++i) {
      const int32_t id = cloud->instance_id[i];
      if (id < 0) continue;
      ++counts[id].first;
      counts[id].second += cloud->alive[i];
    }
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [id, c] : counts) {
      list.push_back({{"id", id},
                      {"point_count", c.first},
                      {"alive_count", c.second},
                      {"removed", c.second == 0}});
    }
    SendJson(res, 200, {{"instances", list}, {"revision", revision}}, revision);
  }

  void HandlePostEdit(const httplib::Request& req, httplib::Response& res) {
    const EditOp op = EditOp::FromJson(nlohmann::json::parse(req.body));
    std::unique_lock lock(state_mutex);
    ScenePointCloud next = *cloud;
    EditLog next_log = log;
    next_log.Apply(next, op);
    cloud = std::make_shared<const ScenePointCloud>(std::move(next));
    log = std::move(next_log);
    ++revision;
    SendJson(res, 200,
             {{"revision", revision},
              {"op", op.ToJson()},
              {"removed_points", log.removed_points().back().size()},
              {"num_alive", cloud->NumAlive()}},
             revision);
  }

  void HandleUndo(const httplib::Request&, httplib::Response& res) {
    std::unique_lock lock(state_mutex);
    const std::optional<EditLog> shorter = log.WithoutLast();
    if (!shorter) {
      SendJson(res, 409, ErrorJson("nothing_to_undo", "edit log is empty"),
               revision);
      return;
    }
    ScenePointCloud next = original;
    EditLog next_log = ApplyEdits(next, shorter->ops());
    cloud = std::make_shared<const ScenePointCloud>(std::move(next));
    log = std::move(next_log);
    ++revision;
    SendJson(res, 200,
             {{"revision", revision},
              {"num_edits", log.size()},
              {"num_alive", cloud->NumAlive()}},
             revision);
  }

  void HandlePostRender(const httplib::Request& req, httplib::Response& res) {
    const nlohmann::json body = nlohmann::json::parse(req.body);
    const std::string backend_name = body.value("backend", config.backend);
    if (backend_name != "baseline" && backend_name != "external") {
      throw Error(ErrorCode::kUnknownBackend, backend_name);
    }
    if (backend_name == "external") {
      PS_CHECK(!config.external.endpoint.empty(),
               ErrorCode::kBackendUnavailable,
               "external backend has no endpoint configured");
    }
    Camera camera;
    if (body.contains("camera")) {
      camera = CameraFromJson(body.at("camera"), "camera");
    } else if (body.contains("view_id")) {
      const std::string id = body.at("view_id").get<std::string>();
      const int idx = bundle.IndexOf(id);
      PS_CHECK(idx >= 0, ErrorCode::kUnknownView, id);
      camera = bundle.frames[idx].camera();
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "render needs a camera or a view_id");
    }

    std::shared_ptr<const ScenePointCloud> snapshot;
    EditLog snapshot_log;
    uint64_t rev = 0;
    {
      std::shared_lock lock(state_mutex);
      snapshot = cloud;
      snapshot_log = log;
      rev = revision;
    }
    PS_CHECK(snapshot->NumAlive() > 0, ErrorCode::kEmptyCloud,
             "no alive points to project");
    std::string job_id;
    {
      std::lock_guard lock(jobs_mutex);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "r%06llu",
                    static_cast<unsigned long long>(next_job++));
      job_id = buf;
      RenderRecord& record = jobs[job_id];
      record.backend = backend_name;
      record.revision = rev;
    }
    Enqueue([this, job_id, backend_name, camera, snapshot, snapshot_log] {
      RunRender(job_id, backend_name, camera, snapshot, snapshot_log);
    });
    SendJson(res, 202,
             {{"job_id", job_id},
              {"status", "pending"},
              {"backend", backend_name},
              {"revision", rev}},
             Revision());
  }

  void HandleGetRender(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    std::lock_guard lock(jobs_mutex);
    const auto it = jobs.find(id);
    if (it == jobs.end()) {
      SendJson(res, 404, ErrorJson("unknown_job", id), Revision());
      return;
    }
    const RenderRecord& r = it->second;
    nlohmann::json status = {{"job_id", id},
                             {"status", JobStatusName(r.status)},
                             {"backend", r.backend},
                             {"revision", r.revision}};
    switch (r.status) {
      case JobStatus::kPending:
      case JobStatus::kRunning:
        SendJson(res, 202, status, Revision());
        return;
      case JobStatus::kFailed:
        status["error"] = std::string(ErrorCodeName(r.error_code));
        status["detail"] = r.error_detail;
        SendJson(res, StatusFor(r.error_code), status, Revision());
        return;
      case JobStatus::kDone:
        res.status = 200;
        res.set_header(kRevisionHeader, std::to_string(Revision()));
        res.set_header("X-Render-Revision", std::to_string(r.revision));
        res.set_content(r.png, "image/png");
        return;
    }
  }

  void HandleViewRgb(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const int idx = bundle.IndexOf(id);
    PS_CHECK(idx >= 0, ErrorCode::kUnknownView, id);
    const std::vector<uint8_t> png = EncodePngRgb(bundle.frames[idx].rgb);
    res.status = 200;
    res.set_header(kRevisionHeader, std::to_string(Revision()));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void Routes() {
    server.set_default_headers(
        {{"Access-Control-Allow-Origin", options.cors_origin},
         {"Access-Control-Expose-Headers",
          std::string(kRevisionHeader) + ", X-Render-Revision"}});
    server.Options(R"(/v1/.*)", [](const httplib::Request&,
                                   httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods",
                     "GET, POST, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    using std::placeholders::_1;
    using std::placeholders::_2;
    server.Get("/v1/scene", Guard(std::bind(&Impl::HandleScene, this, _1, _2)));
    server.Get("/v1/cloud", Guard(std::bind(&Impl::HandleCloud, this, _1, _2)));
    server.Get("/v1/instances",
               Guard(std::bind(&Impl::HandleInstances, this, _1, _2)));
    server.Post("/v1/edits",
                Guard(std::bind(&Impl::HandlePostEdit, this, _1, _2)));
    server.Delete("/v1/edits/last",
                  Guard(std::bind(&Impl::HandleUndo, this, _1, _2)));
    server.Post("/v1/render",
                Guard(std::bind(&Impl::HandlePostRender, this, _1, _2)));
    server.Get(R"(/v1/render/([A-Za-z0-9_-]+))",
               Guard(std::bind(&Impl::HandleGetRender, this, _1, _2)));
    server.Get(R"(/v1/views/([^/]+)/rgb)",
               Guard(std::bind(&Impl::HandleViewRgb, this, _1, _2)));
    server.set_post_routing_handler(
        [this](const httplib::Request&, httplib::Response& res) {
          if (!res.has_header(kRevisionHeader)) {
            res.set_header(kRevisionHeader, std::to_string(Revision()));
          }
        });
  }
};

SceneService::SceneService(SceneState state, PipelineConfig config,
                           std::filesystem::path workspace,
                           ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
  config.Validate();
  PS_CHECK(options.render_workers >= 1, ErrorCode::kInvalidArgument,
           "render_workers must be >= 1");
  impl_->config = std::move(config);
  impl_->workspace = std::move(workspace);
  impl_->options = std::move(options);
  impl_->bundle = std::move(state.bundle);
  impl_->original = std::move(state.original);
  impl_->cloud = std::make_shared<const ScenePointCloud>(std::move(state.cloud));
  impl_->log = std::move(state.log);
  impl_->Routes();
}

SceneService::~SceneService() { Stop(); }

int SceneService::Start() {
  std::lock_guard lock(impl_->lifecycle_mutex);
  PS_CHECK(!impl_->started, ErrorCode::kInvalidArgument, "already started");
  int port = impl_->options.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->options.host);
    PS_CHECK(port > 0, ErrorCode::kIo, "cannot bind " + impl_->options.host);
  } else {
    PS_CHECK(impl_->server.bind_to_port(impl_->options.host, port),
             ErrorCode::kIo,
             "cannot bind " + impl_->options.host + ":" + std::to_string(port));
  }
  for (int i = 0; i < impl_->options.render_workers; ++i) {
    impl_->workers.emplace_back([this] { impl_->WorkerLoop(); });
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  impl_->started = true;
  return port;
}

void SceneService::Stop() {
  std::lock_guard lock(impl_->lifecycle_mutex);
  if (!impl_->started || impl_->stopped) return;
  impl_->stopped = true;
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
  {
    std::lock_guard q(impl_->queue_mutex);
    impl_->stopping = true;
  }
  impl_->queue_cv.notify_all();
  for (auto& w : impl_->workers) w.join();
  if (!impl_->workspace.empty()) {
    std::shared_lock state(impl_->state_mutex);
    WriteEdits(impl_->workspace, impl_->log);
  }
}

uint64_t SceneService::revision() const { return impl_->Revision(); }

}  // namespace pointscene
