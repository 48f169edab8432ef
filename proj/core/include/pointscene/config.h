#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pointscene/anomaly_filter.h"
#include "pointscene/instance_lift.h"
#include "pointscene/projection.h"
#include "pointscene/render_pipeline.h"

namespace pointscene {

// Every tunable of the batch pipeline, defaulting to the owning modules'
// defaults. JSON layout:
//   {"filter": {"tau", "min_violations", "min_observations"},
//    "unify": {"eta", "min_group_points", "closing_radius"},
//    "splat": {"splat_radius", "z_epsilon"},
//    "backend": {"name", "endpoint", "timeout_secs", "max_attempts",
//                "initial_backoff_secs", "max_concurrency"},
//    "metrics": {"depth_scale_align", "pose_estimate_scale"},
//    "threads": 0}
struct PipelineConfig {
  FilterConfig filter;
  UnifyConfig unify;
  SplatOptions splat;
  std::string backend = "baseline";
  ExternalBackendOptions external;
  bool depth_scale_align = true;
  bool pose_estimate_scale = true;
  int threads = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their current values; unknown keys are rejected.
  void MergeJson(const nlohmann::json& j);
  static PipelineConfig FromFile(const std::filesystem::path& path);
};

}  // namespace pointscene
