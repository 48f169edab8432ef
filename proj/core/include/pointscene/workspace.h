#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointscene/anomaly_filter.h"
#include "pointscene/config.h"
#include "pointscene/eval.h"
#include "pointscene/instance_lift.h"
#include "pointscene/scene_edit.h"
#include "pointscene/scene_model.h"

namespace pointscene {

// Stage glue shared by the CLI and the service. A workspace directory holds
// the artifacts of each stage:
//   ingest.json, cloud.ply                      ingest
//   consistency_report.json, filtered.ply,
//   views/<id>/valid.png                        filter
//   instances.json, labeled.ply                 segment
//   edits.json                                  edit
//   renders/...                                 render
//   eval_report.json                            eval
namespace ws {
inline constexpr char kIngest[] = "ingest.json";
inline constexpr char kCloud[] = "cloud.ply";
inline constexpr char kReport[] = "consistency_report.json";
inline constexpr char kFiltered[] = "filtered.ply";
inline constexpr char kInstances[] = "instances.json";
inline constexpr char kLabeled[] = "labeled.ply";
inline constexpr char kEdits[] = "edits.json";
inline constexpr char kEvalReport[] = "eval_report.json";
std::filesystem::path ValidMaskPath(const std::filesystem::path& dir,
                                    const std::string& view_id);
}  // namespace ws

struct FilterStage {
  ConsistencyReport report;
  std::vector<PointMap> pointmaps;  // validity intersected with the report
  ScenePointCloud cloud;
};

FilterStage RunFilter(const SceneBundle& bundle, const FilterConfig& cfg);
void WriteFilterStage(const std::filesystem::path& dir,
                      const FilterStage& stage, const FilterConfig& cfg);

// Pointmaps with validity restricted by the workspace's valid.png masks, or
// plain depth validity when the filter stage has not run.
std::vector<PointMap> LoadFilteredPointmaps(const SceneBundle& bundle,
                                            const std::filesystem::path& dir);

// Alternative mask input: <dir>/masks.json lists
//   {"masks": [{"view_id": "v00", "label": 3, "file": "v00_3.png"}, ...]}
// with binary PNGs relative to <dir>. Entries are painted in order; the
// first label to claim a pixel keeps it. Views without entries get no masks.
void ApplyMaskDirectory(SceneBundle& bundle, const std::filesystem::path& dir);

struct SegmentStage {
  std::vector<PointGroup> instances;
  ScenePointCloud cloud;  // labeled
  UnifyStats stats;
};

SegmentStage RunSegment(const SceneBundle& bundle,
                        std::span<const PointMap> pointmaps,
                        const ScenePointCloud& cloud, const UnifyConfig& cfg);
void WriteSegmentStage(const std::filesystem::path& dir,
                       const SegmentStage& stage);

// The labeled cloud rebuilt from the bundle and workspace (exact positions
// from depth, instance ids from labeled.ply) plus the edit log replayed
// from edits.json.
struct SceneState {
  SceneBundle bundle;
  ScenePointCloud original;  // labeled, unedited
  ScenePointCloud cloud;     // edits applied
  EditLog log;
};

SceneState LoadSceneState(const std::filesystem::path& bundle_dir,
                          const std::filesystem::path& dir);
void WriteEdits(const std::filesystem::path& dir, const EditLog& log);

// Labeled cloud points -> instance json with point counts taken from the
// (alive) cloud.
nlohmann::json InstanceSummary(const ScenePointCloud& cloud);

// Ground-truth directory as written by WriteSynthScene.
struct GroundTruth {
  std::vector<std::string> view_ids;
  std::vector<Camera> cameras;
  std::vector<DepthImage> depths;
  std::vector<LabelImage> object_labels;  // 0 = background
  std::vector<std::string> test_ids;
  std::vector<Camera> test_cameras;
  std::vector<RgbImage> test_rgb;
};
GroundTruth LoadGroundTruth(const std::filesystem::path& gt_dir);

// Aligns bundle cameras to ground-truth cameras by view id.
SimilarityTransform AlignBundleToGroundTruth(const SceneBundle& bundle,
                                             const GroundTruth& gt,
                                             bool estimate_scale);

// Per-point gt object index (-1 background) looked up at source pixels.
std::vector<int32_t> GroundTruthPointLabels(const ScenePointCloud& cloud,
                                            const GroundTruth& gt);

// Depth per frame + aggregate, instance AP (when the workspace is
// segmented), pose alignment, and PSNR/SSIM for every test view with a
// render at <dir>/renders/<id>.png.
nlohmann::json EvaluateWorkspace(const std::filesystem::path& bundle_dir,
                                 const std::filesystem::path& gt_dir,
                                 const std::filesystem::path& dir,
                                 const PipelineConfig& cfg);

}  // namespace pointscene
