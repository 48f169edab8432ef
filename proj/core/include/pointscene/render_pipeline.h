#pragma once

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointscene/camera.h"
#include "pointscene/image.h"
#include "pointscene/projection.h"
#include "pointscene/scene_edit.h"
#include "pointscene/scene_model.h"

namespace pointscene {

struct ReferenceView {
  std::string view_id;
  Camera camera;
  RgbImage rgb;         // hole pixels already zeroed
  BoolMask hole_mask;   // pixels removed from the reference

  friend bool operator==(const ReferenceView&, const ReferenceView&) = default;
};

// Everything an inpainting backend needs to complete one target view.
struct RenderJob {
  std::string job_id;
  Camera target;
  ProjectionResult projection;
  std::vector<ReferenceView> references;
  std::vector<EditOp> edit_ops;
  size_t removed_points = 0;
  SplatOptions splat;

  void Validate() const;
  nlohmann::json Manifest() const;

  friend bool operator==(const RenderJob&, const RenderJob&) = default;
};

// Projects the alive cloud into `target` and packages every input frame as
// a reference. When the log removed points, each reference is zeroed on
// its ReferenceMasks region and carries that region as its hole mask.
RenderJob BuildRenderJob(const ScenePointCloud& cloud, const Camera& target,
                         std::span<const ViewFrame> frames,
                         const EditLog& edit_log, const SplatOptions& opts,
                         std::string job_id = "job");

// Directory layout: manifest.json, proj_rgb.png, proj_mask.png,
// proj_depth.f32, proj_instance.i32, refs/<id>.png, refs/<id>_mask.png.
void WriteRenderJob(const std::filesystem::path& dir, const RenderJob& job);
RenderJob ReadRenderJob(const std::filesystem::path& dir);

// Pull-push hole filling: covered pixels are copied verbatim; holes take the
// coverage-weighted average of the coarsest pyramid level that has data.
RgbImage BaselineInpaint(const ProjectionResult& projection);

class RenderBackend {
 public:
  virtual ~RenderBackend() = default;
  virtual std::string name() const = 0;
  virtual bool supports_reference_masks() const = 0;
  // True when covered pixels must come back byte-identical.
  virtual bool exact_fidelity() const { return false; }
  virtual RgbImage Inpaint(const RenderJob& job) = 0;
};

class BaselineBackend final : public RenderBackend {
 public:
  std::string name() const override { return "baseline"; }
  bool supports_reference_masks() const override { return false; }
  bool exact_fidelity() const override { return true; }
  RgbImage Inpaint(const RenderJob& job) override;
};

struct ExternalBackendOptions {
  std::string endpoint;  // e.g. http://127.0.0.1:9000
  double timeout_secs = 300.0;
  int max_attempts = 3;
  double initial_backoff_secs = 0.5;
  int max_concurrency = 2;
};

// HTTP client for POST /v1/inpaint. 503 and transport failures are retried
// with exponential backoff; other non-200 statuses fail at once.
class ExternalBackend final : public RenderBackend {
 public:
  explicit ExternalBackend(ExternalBackendOptions options);

  std::string name() const override { return "external"; }
  bool supports_reference_masks() const override { return true; }
  RgbImage Inpaint(const RenderJob& job) override;

 private:
  ExternalBackendOptions options_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
};

// "baseline" or "external"; anything else throws kUnknownBackend. An
// external backend without an endpoint throws kBackendUnavailable.
std::unique_ptr<RenderBackend> MakeBackend(const std::string& name,
                                           const ExternalBackendOptions& ext);

// Runs the backend and checks its output: target dimensions (kBadResponse)
// and, for exact-fidelity backends, untouched covered pixels
// (kFidelityViolation).
RgbImage Dispatch(const RenderJob& job, RenderBackend& backend);

}  // namespace pointscene
