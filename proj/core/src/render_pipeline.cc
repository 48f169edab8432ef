#include "pointscene/render_pipeline.h"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <thread>

#include "pointscene/error.h"
#include "pointscene/io.h"

namespace pointscene {
namespace {

std::string RefRgbName(const std::string& id) { return "refs/" + id + ".png"; }
std::string RefMaskName(const std::string& id) {
  return "refs/" + id + "_mask.png";
}

}  // namespace

void RenderJob::Validate() const {
  target.intrinsics.Validate("target");
  target.pose.Validate("target");
  PS_CHECK(projection.coverage.SameShape(target.intrinsics.width,
                                         target.intrinsics.height),
           ErrorCode::kShapeMismatch, "projection vs target camera");
  projection.CheckInvariants();
  PS_CHECK(!references.empty(), ErrorCode::kInvalidArgument,
           "render job needs at least one reference");
  for (const ReferenceView& r : references) {
    const int w = r.camera.intrinsics.width;
    const int h = r.camera.intrinsics.height;
    PS_CHECK(r.rgb.SameShape(w, h) && r.hole_mask.SameShape(w, h),
             ErrorCode::kShapeMismatch, "reference " + r.view_id);
  }
}

nlohmann::json RenderJob::Manifest() const {
  nlohmann::json refs = nlohmann::json::array();
  for (const ReferenceView& r : references) {
    refs.push_back({{"view_id", r.view_id},
                    {"camera", CameraToJson(r.camera)},
                    {"rgb", RefRgbName(r.view_id)},
                    {"mask", RefMaskName(r.view_id)},
                    {"masked_pixels", CountTrue(r.hole_mask)}});
  }
  nlohmann::json ops = nlohmann::json::array();
  for (const EditOp& op : edit_ops) ops.push_back(op.ToJson());
  return {{"format_version", 1},
          {"job_id", job_id},
          {"target", CameraToJson(target)},
          {"files",
           {{"proj_rgb", "proj_rgb.png"},
            {"proj_mask", "proj_mask.png"},
            {"proj_depth", "proj_depth.f32"},
            {"proj_instance", "proj_instance.i32"}}},
          {"coverage", CountTrue(projection.coverage)},
          {"references", refs},
          {"edits", {{"ops", ops}, {"removed_points", removed_points}}},
          {"backend_hints",
           {{"splat_radius", splat.splat_radius},
            {"z_epsilon", splat.z_epsilon},
            {"reference_pixels_zeroed", true}}}};
}

RenderJob BuildRenderJob(const ScenePointCloud& cloud, const Camera& target,
                         std::span<const ViewFrame> frames,
                         const EditLog& edit_log, const SplatOptions& opts,
                         std::string job_id) {
  PS_CHECK(cloud.NumAlive() > 0, ErrorCode::kEmptyCloud,
           "no alive points to project");
  target.intrinsics.Validate("target");
  target.pose.Validate("target");
  RenderJob job;
  job.job_id = std::move(job_id);
  job.target = target;
  job.splat = opts;
  job.projection =
      ProjectPoints(cloud, target.intrinsics, target.pose, opts, true);
  job.edit_ops = edit_log.ops();
  const std::vector<PointIndex> removed = edit_log.AllRemoved();
  job.removed_points = removed.size();

  std::vector<BoolMask> holes;
  if (edit_log.HasRemovals()) {
    holes = ReferenceMasks(removed, cloud, frames, opts.splat_radius);
  }
  for (size_t i = 0; i < frames.size(); ++i) {
    const ViewFrame& f = frames[i];
    ReferenceView ref{f.view_id, f.camera(), f.rgb,
                      holes.empty() ? MakeMask(f.width(), f.height())
                                    : std::move(holes[i])};
    for (size_t px = 0; px < ref.hole_mask.num_pixels(); ++px) {
      if (!ref.hole_mask.raw()[px]) continue;
      for (int c = 0; c < 3; ++c) ref.rgb.raw()[px * 3 + c] = 0;
    }
    job.references.push_back(std::move(ref));
  }
  job.Validate();
  return job;
}

void WriteRenderJob(const fs::path& dir, const RenderJob& job) {
  fs::create_directories(dir / "refs");
  WriteProjectionResult(dir, job.projection);
  for (const ReferenceView& r : job.references) {
    WritePngRgb(dir / RefRgbName(r.view_id), r.rgb);
    WritePngMask(dir / RefMaskName(r.view_id), r.hole_mask);
  }
  WriteJson(dir / "manifest.json", job.Manifest());
}

RenderJob ReadRenderJob(const fs::path& dir) {
  const nlohmann::json m = ReadJson(dir / "manifest.json");
  RenderJob job;
  try {
    job.job_id = m.at("job_id").get<std::string>();
    job.target = CameraFromJson(m.at("target"), "target");
    job.projection = ReadProjectionResult(dir);
    for (const auto& r : m.at("references")) {
      ReferenceView ref;
      ref.view_id = r.at("view_id").get<std::string>();
      ref.camera = CameraFromJson(r.at("camera"), ref.view_id);
      ref.rgb = ReadPngRgb(dir / r.at("rgb").get<std::string>());
      ref.hole_mask = ReadPngMask(dir / r.at("mask").get<std::string>());
      job.references.push_back(std::move(ref));
    }
    const auto& edits = m.at("edits");
    for (const auto& op : edits.at("ops")) {
      job.edit_ops.push_back(EditOp::FromJson(op));
    }
    job.removed_points = edits.at("removed_points").get<size_t>();
    const auto& hints = m.at("backend_hints");
    job.splat.splat_radius = hints.at("splat_radius").get<int>();
    job.splat.z_epsilon = hints.at("z_epsilon").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "manifest.json: " + std::string(e.what()));
  }
  job.Validate();
  return job;
}

RgbImage BaselineInpaint(const ProjectionResult& projection) {
  struct Level {
    int w = 0;
    int h = 0;
    std::vector<int64_t> sum;     // 3 per pixel
    std::vector<int64_t> count;   // covered leaf pixels under this cell
  };
  std::vector<Level> pyramid;
  {
    Level base;
    base.w = projection.width();
    base.h = projection.height();
    base.sum.assign(base.w * static_cast<size_t>(base.h) * 3, 0);
    base.count.assign(base.w * static_cast<size_t>(base.h), 0);
    for (size_t px = 0; px < base.count.size(); ++px) {
      if (!projection.coverage.raw()[px]) continue;
      base.count[px] = 1;
      for (int c = 0; c < 3; ++c) {
        base.sum[px * 3 + c] = projection.rgb.raw()[px * 3 + c];
      }
    }
    pyramid.push_back(std::move(base));
  }
  // Pull: sum 2x2 children until a single cell remains.
  while (pyramid.back().w > 1 || pyramid.back().h > 1) {
    const Level& fine = pyramid.back();
    Level coarse;
    coarse.w = (fine.w + 1) / 2;
    coarse.h = (fine.h + 1) / 2;
    coarse.sum.assign(coarse.w * static_cast<size_t>(coarse.h) * 3, 0);
    coarse.count.assign(coarse.w * static_cast<size_t>(coarse.h), 0);
    for (int y = 0; y < fine.h; ++y) {
      for (int x = 0; x < fine.w; ++x) {
        const size_t f = static_cast<size_t>(y) * fine.w + x;
        const size_t p = static_cast<size_t>(y / 2) * coarse.w + x / 2;
        coarse.count[p] += fine.count[f];
        for (int c = 0; c < 3; ++c) coarse.sum[p * 3 + c] += fine.sum[f * 3 + c];
      }
    }
    pyramid.push_back(std::move(coarse));
  }

  // Push: every cell resolves to its own average, or its parent's.
  const auto average = [](int64_t sum, int64_t count) {
    return static_cast<uint8_t>((2 * sum + count) / (2 * count));
  };
  std::vector<uint8_t> above;  // resolved colors of the coarser level
  for (size_t li = pyramid.size(); li-- > 0;) {
    const Level& level = pyramid[li];
    std::vector<uint8_t> resolved(level.w * static_cast<size_t>(level.h) * 3, 0);
    const int parent_w = li + 1 < pyramid.size() ? pyramid[li + 1].w : 0;
    for (int y = 0; y < level.h; ++y) {
      for (int x = 0; x < level.w; ++x) {
        const size_t i = static_cast<size_t>(y) * level.w + x;
        for (int c = 0; c < 3; ++c) {
          if (level.count[i] > 0) {
            resolved[i * 3 + c] = average(level.sum[i * 3 + c], level.count[i]);
          } else if (!above.empty()) {
            const size_t p = static_cast<size_t>(y / 2) * parent_w + x / 2;
            resolved[i * 3 + c] = above[p * 3 + c];
          }
        }
      }
    }
    above = std::move(resolved);
  }
  RgbImage out = MakeRgb(projection.width(), projection.height());
  out.raw() = std::move(above);
  return out;
}

RgbImage BaselineBackend::Inpaint(const RenderJob& job) {
  return BaselineInpaint(job.projection);
}

ExternalBackend::ExternalBackend(ExternalBackendOptions options)
    : options_(std::move(options)) {
  PS_CHECK(!options_.endpoint.empty(), ErrorCode::kBackendUnavailable,
           "external backend has no endpoint configured");
  PS_CHECK(options_.max_attempts >= 1 && options_.max_concurrency >= 1 &&
               options_.timeout_secs > 0,
           ErrorCode::kInvalidArgument, "bad external backend options");
}

RgbImage ExternalBackend::Inpaint(const RenderJob& job) {
  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [&] { return in_flight_ < options_.max_concurrency; });
    ++in_flight_;
  }
  struct Release {
    ExternalBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->slot_free_.notify_one();
    }
  } release{this};

  httplib::MultipartFormDataItems items;
  items.push_back({"manifest", job.Manifest().dump(), "manifest.json",
                   "application/json"});
  const auto as_string = [](const std::vector<uint8_t>& b) {
    return std::string(b.begin(), b.end());
  };
  items.push_back({"proj_rgb", as_string(EncodePngRgb(job.projection.rgb)),
                   "proj_rgb.png", "image/png"});
  items.push_back({"proj_mask",
                   as_string(EncodePngMask(job.projection.coverage)),
                   "proj_mask.png", "image/png"});
  for (const ReferenceView& r : job.references) {
    items.push_back({RefRgbName(r.view_id), as_string(EncodePngRgb(r.rgb)),
                     RefRgbName(r.view_id), "image/png"});
    items.push_back({RefMaskName(r.view_id),
                     as_string(EncodePngMask(r.hole_mask)),
                     RefMaskName(r.view_id), "image/png"});
  }

  httplib::Client client(options_.endpoint);
  const auto timeout = std::chrono::duration<double>(options_.timeout_secs);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  std::string last_failure;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      const double wait =
          options_.initial_backoff_secs * std::pow(2.0, attempt - 2);
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    const httplib::Result res = client.Post("/v1/inpaint", items);
    if (!res) {
      last_failure = "transport: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 503) {
      last_failure = "status 503";
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kBadResponse,
                  "status " + std::to_string(res->status));
    }
    try {
      return DecodePngRgb(
          std::vector<uint8_t>(res->body.begin(), res->body.end()));
    } catch (const Error& e) {
      throw Error(ErrorCode::kBadResponse, "undecodable image: " + e.detail());
    }
  }
  throw Error(ErrorCode::kBackendUnavailable,
              options_.endpoint + " failed after " +
                  std::to_string(options_.max_attempts) +
                  " attempts (last: " + last_failure + ")");
}

std::unique_ptr<RenderBackend> MakeBackend(const std::string& name,
                                           const ExternalBackendOptions& ext) {
  if (name == "baseline") return std::make_unique<BaselineBackend>();
  if (name == "external") return std::make_unique<ExternalBackend>(ext);
  throw Error(ErrorCode::kUnknownBackend, name);
}

RgbImage Dispatch(const RenderJob& job, RenderBackend& backend) {
  RgbImage image = backend.Inpaint(job);
  const int w = job.target.intrinsics.width;
  const int h = job.target.intrinsics.height;
  PS_CHECK(image.SameShape(w, h) && image.channels() == 3,
           ErrorCode::kBadResponse,
           backend.name() + " returned " + std::to_string(image.width()) + "x" +
               std::to_string(image.height()) + " for a " + std::to_string(w) +
               "x" + std::to_string(h) + " job");
  if (backend.exact_fidelity()) {
    const auto& cov = job.projection.coverage.raw();
    for (size_t px = 0; px < cov.size(); ++px) {
      if (!cov[px]) continue;
      for (int c = 0; c < 3; ++c) {
        PS_CHECK(image.raw()[px * 3 + c] == job.projection.rgb.raw()[px * 3 + c],
                 ErrorCode::kFidelityViolation,
                 backend.name() + " altered covered pixel " +
                     std::to_string(px));
      }
    }
  }
  return image;
}

}  // namespace pointscene
