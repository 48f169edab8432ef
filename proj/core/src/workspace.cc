#include "pointscene/workspace.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "pointscene/error.h"
#include "pointscene/io.h"
#include "pointscene/ply.h"

namespace pointscene {

namespace fs = std::filesystem;

fs::path ws::ValidMaskPath(const fs::path& dir, const std::string& view_id) {
  return dir / "views" / view_id / "valid.png";
}

FilterStage RunFilter(const SceneBundle& bundle, const FilterConfig& cfg) {
  const std::vector<PointMap> raw = UnprojectAll(bundle.frames);
  FilterStage stage;
  stage.report = ConsistencyMasks(raw, bundle.frames, cfg);
  stage.pointmaps = ApplyConsistency(raw, stage.report);
  stage.cloud = AssemblePointCloud(stage.pointmaps, bundle.frames);
  return stage;
}

void WriteFilterStage(const fs::path& dir, const FilterStage& stage,
                      const FilterConfig& cfg) {
  WriteJson(dir / ws::kReport, stage.report.ToJson(cfg));
  for (const ViewConsistency& v : stage.report.views) {
    WritePngMask(ws::ValidMaskPath(dir, v.view_id), v.valid);
  }
  WritePly(dir / ws::kFiltered, stage.cloud);
}

std::vector<PointMap> LoadFilteredPointmaps(const SceneBundle& bundle,
                                            const fs::path& dir) {
  std::vector<PointMap> maps = UnprojectAll(bundle.frames);
  for (size_t i = 0; i < maps.size(); ++i) {
    const fs::path p = ws::ValidMaskPath(dir, bundle.frames[i].view_id);
    if (!fs::exists(p)) continue;
    const BoolMask valid = ReadPngMask(p);
    PS_CHECK(valid.SameShape(maps[i].valid), ErrorCode::kShapeMismatch,
             bundle.frames[i].view_id + "/valid");
    for (size_t px = 0; px < valid.num_pixels(); ++px) {
      if (valid.raw()[px]) continue;
      maps[i].valid.raw()[px] = 0;
      maps[i].points[px].setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return maps;
}

void ApplyMaskDirectory(SceneBundle& bundle, const fs::path& dir) {
  const nlohmann::json index = ReadJson(dir / "masks.json");
  for (ViewFrame& f : bundle.frames) f.masks.reset();
  try {
    for (const auto& entry : index.at("masks")) {
      const std::string view_id = entry.at("view_id").get<std::string>();
      const int32_t label = entry.at("label").get<int32_t>();
      PS_CHECK(label >= 1, ErrorCode::kInvalidArgument,
               "masks.json: labels must be >= 1");
      const int idx = bundle.IndexOf(view_id);
      PS_CHECK(idx >= 0, ErrorCode::kUnknownView, view_id);
      ViewFrame& f = bundle.frames[idx];
      const BoolMask mask = ReadPngMask(dir / entry.at("file").get<std::string>());
      PS_CHECK(mask.SameShape(f.width(), f.height()), ErrorCode::kShapeMismatch,
               view_id + "/masks");
      if (!f.masks) {
        f.masks = InstanceMask2D{view_id, LabelImage(f.width(), f.height(), 1, 0)};
      }
      for (size_t px = 0; px < mask.num_pixels(); ++px) {
        int32_t& l = f.masks->labels.raw()[px];
        if (mask.raw()[px] && l == 0) l = label;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("masks.json: ") + e.what());
  }
}

SegmentStage RunSegment(const SceneBundle& bundle,
                        std::span<const PointMap> pointmaps,
                        const ScenePointCloud& cloud, const UnifyConfig& cfg) {
  cfg.Validate();
  std::vector<InstanceMask2D> masks;
  for (const ViewFrame& f : bundle.frames) {
    if (f.masks) masks.push_back(*f.masks);
  }
  SegmentStage stage;
  const std::vector<PointGroup> lifted =
      LiftMasks(masks, pointmaps, cloud, cfg.min_group_points);
  stage.instances =
      UnifyInstances(lifted, cloud, bundle.frames, cfg, &stage.stats);
  stage.cloud = LabelCloud(cloud, stage.instances);
  return stage;
}

void WriteSegmentStage(const fs::path& dir, const SegmentStage& stage) {
  nlohmann::json j = InstancesToJson(stage.instances);
  j["passes"] = stage.stats.passes;
  j["unions"] = stage.stats.unions;
  WriteJson(dir / ws::kInstances, j);
  WritePly(dir / ws::kLabeled, stage.cloud);
}

SceneState LoadSceneState(const fs::path& bundle_dir, const fs::path& dir) {
  SceneState state;
  state.bundle = LoadSceneBundle(bundle_dir);
  const std::vector<PointMap> maps = LoadFilteredPointmaps(state.bundle, dir);
  state.original = AssemblePointCloud(maps, state.bundle.frames);

  const fs::path labeled = dir / ws::kLabeled;
  if (fs::exists(labeled)) {
    const ScenePointCloud stored = ReadPly(labeled);
    PS_CHECK(stored.size() == state.original.size() &&
                 stored.sources == state.original.sources &&
                 stored.view_ids == state.original.view_ids,
             ErrorCode::kSourceMismatch,
             std::string(ws::kLabeled) +
                 " does not match the bundle and valid masks");
    state.original.instance_id = stored.instance_id;
  }
  state.cloud = state.original;
  const fs::path edits = dir / ws::kEdits;
  if (fs::exists(edits)) {
    const std::vector<EditOp> ops = EditLog::OpsFromJson(ReadJson(edits));
    state.log = ApplyEdits(state.cloud, ops);
  }
  return state;
}

void WriteEdits(const fs::path& dir, const EditLog& log) {
  WriteJson(dir / ws::kEdits, log.ToJson());
}

nlohmann::json InstanceSummary(const ScenePointCloud& cloud) {
  std::map<int32_t, size_t> counts;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.alive[i] && cloud.instance_id[i] >= 0) {
      ++counts[cloud.instance_id[i]];
    }
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [id, n] : counts) {
    list.push_back({{"id", id}, {"point_count", n}});
  }
  return list;
}

GroundTruth LoadGroundTruth(const fs::path& gt_dir) {
  const nlohmann::json synth = ReadJson(gt_dir / "synth.json");
  GroundTruth gt;
  try {
    gt.view_ids = synth.at("views").get<std::vector<std::string>>();
    gt.test_ids = synth.at("test_views").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("synth.json: ") + e.what());
  }
  for (const std::string& id : gt.view_ids) {
    const fs::path v = gt_dir / "views" / id;
    gt.cameras.push_back(CameraFromJson(ReadJson(v / "camera.json"), id));
    gt.depths.push_back(ReadDepthF32(v / "depth.f32"));
    gt.object_labels.push_back(ReadPngLabels16(v / "object_labels.png"));
  }
  for (const std::string& id : gt.test_ids) {
    const fs::path v = gt_dir / "test_views" / id;
    gt.test_cameras.push_back(CameraFromJson(ReadJson(v / "camera.json"), id));
    gt.test_rgb.push_back(ReadPngRgb(v / "rgb.png"));
  }
  return gt;
}

SimilarityTransform AlignBundleToGroundTruth(const SceneBundle& bundle,
                                             const GroundTruth& gt,
                                             bool estimate_scale) {
  std::vector<CameraPose> pred, truth;
  for (size_t i = 0; i < gt.view_ids.size(); ++i) {
    const int idx = bundle.IndexOf(gt.view_ids[i]);
    PS_CHECK(idx >= 0, ErrorCode::kUnknownView, gt.view_ids[i]);
    pred.push_back(bundle.frames[idx].pose);
    truth.push_back(gt.cameras[i].pose);
  }
  return AlignPoses(pred, truth, estimate_scale);
}

std::vector<int32_t> GroundTruthPointLabels(const ScenePointCloud& cloud,
                                            const GroundTruth& gt) {
  std::vector<const LabelImage*> labels;
  for (const std::string& id : cloud.view_ids) {
    const auto it = std::find(gt.view_ids.begin(), gt.view_ids.end(), id);
    PS_CHECK(it != gt.view_ids.end(), ErrorCode::kUnknownView, id);
    labels.push_back(&gt.object_labels[it - gt.view_ids.begin()]);
  }
  std::vector<int32_t> out(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const PointSource& s = cloud.sources[i];
    out[i] = labels[s.view]->at(s.u, s.v) - 1;
  }
  return out;
}

nlohmann::json EvaluateWorkspace(const fs::path& bundle_dir,
                                 const fs::path& gt_dir, const fs::path& dir,
                                 const PipelineConfig& cfg) {
  const GroundTruth gt = LoadGroundTruth(gt_dir);
  const SceneState state = LoadSceneState(bundle_dir, dir);
  nlohmann::json report;

  nlohmann::json frames = nlohmann::json::array();
  double rmse_sum = 0.0, delta_sum = 0.0;
  for (size_t i = 0; i < gt.view_ids.size(); ++i) {
    const int idx = state.bundle.IndexOf(gt.view_ids[i]);
    PS_CHECK(idx >= 0, ErrorCode::kUnknownView, gt.view_ids[i]);
    const DepthMetrics m = ComputeDepthMetrics(
        state.bundle.frames[idx].depth, gt.depths[i], cfg.depth_scale_align);
    nlohmann::json j = m.ToJson();
    j["view_id"] = gt.view_ids[i];
    frames.push_back(j);
    rmse_sum += m.rmse;
    delta_sum += m.delta_125;
  }
  report["depth"] = {
      {"scale_align", cfg.depth_scale_align},
      {"frames", frames},
      {"mean_rmse", rmse_sum / gt.view_ids.size()},
      {"mean_delta_125", delta_sum / gt.view_ids.size()}};

  if (fs::exists(dir / ws::kLabeled)) {
    const std::vector<int32_t> truth =
        GroundTruthPointLabels(state.original, gt);
    report["instances"] = InstanceAP(state.original.instance_id, truth).ToJson();
  } else {
    report["instances"] = nullptr;
  }

  const SimilarityTransform align =
      AlignBundleToGroundTruth(state.bundle, gt, cfg.pose_estimate_scale);
  double sq = 0.0;
  for (size_t i = 0; i < gt.view_ids.size(); ++i) {
    const int idx = state.bundle.IndexOf(gt.view_ids[i]);
    sq += (align.Apply(gt.cameras[i].pose.center()) -
           state.bundle.frames[idx].pose.center())
              .squaredNorm();
  }
  report["poses"] = {{"alignment", align.ToJson()},
                     {"center_rmse", std::sqrt(sq / gt.view_ids.size())}};

  nlohmann::json images = nlohmann::json::array();
  for (size_t i = 0; i < gt.test_ids.size(); ++i) {
    const fs::path render = dir / "renders" / (gt.test_ids[i] + ".png");
    if (!fs::exists(render)) continue;
    const ImageMetrics m = ComputeImageMetrics(ReadPngRgb(render), gt.test_rgb[i]);
    images.push_back({{"view_id", gt.test_ids[i]},
                      {"psnr", m.psnr},
                      {"ssim", m.ssim}});
  }
  report["images"] = images;
  return report;
}

}  // namespace pointscene
