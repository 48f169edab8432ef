#include "pointscene/scene_edit.h"

#include <algorithm>

#include "pointscene/error.h"
#include "pointscene/projection.h"

namespace pointscene {

void EditOp::Validate() const {
  PS_CHECK(instance_id >= 0, ErrorCode::kInvalidArgument,
           "instance_id must be >= 0");
  if (kind == EditKind::kTranslate) {
    PS_CHECK(delta.has_value() && delta->allFinite(),
             ErrorCode::kInvalidArgument, "translate needs a finite delta");
  }
}

nlohmann::json EditOp::ToJson() const {
  nlohmann::json j = {
      {"kind", kind == EditKind::kRemove ? "remove" : "translate"},
      {"instance_id", instance_id}};
  if (delta) j["delta"] = {delta->x(), delta->y(), delta->z()};
  return j;
}

EditOp EditOp::FromJson(const nlohmann::json& j) {
  EditOp op;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "remove") {
      op.kind = EditKind::kRemove;
    } else if (kind == "translate") {
      op.kind = EditKind::kTranslate;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown edit kind " + kind);
    }
    op.instance_id = j.at("instance_id").get<int32_t>();
    if (j.contains("delta") && !j.at("delta").is_null()) {
      const auto& d = j.at("delta");
      PS_CHECK(d.is_array() && d.size() == 3, ErrorCode::kInvalidArgument,
               "delta must have 3 components");
      op.delta = Eigen::Vector3d(d[0].get<double>(), d[1].get<double>(),
                                 d[2].get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("bad edit op: ") + e.what());
  }
  op.Validate();
  return op;
}

std::vector<PointIndex> RemoveInstance(ScenePointCloud& cloud,
                                       int32_t instance_id) {
  PS_CHECK(instance_id >= 0, ErrorCode::kInvalidArgument,
           "instance_id must be >= 0");
  std::vector<PointIndex> removed;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.alive[i] && cloud.instance_id[i] == instance_id) {
      removed.push_back(static_cast<PointIndex>(i));
    }
  }
  PS_CHECK(!removed.empty(), ErrorCode::kUnknownInstance,
           std::to_string(instance_id));
  for (PointIndex i : removed) cloud.alive[i] = 0;
  return removed;
}

void TranslateInstance(ScenePointCloud& cloud, int32_t instance_id,
                       const Eigen::Vector3d& delta) {
  PS_CHECK(delta.allFinite(), ErrorCode::kInvalidArgument,
           "delta must be finite");
  bool any = false;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.alive[i] && cloud.instance_id[i] == instance_id) {
      cloud.positions[i] += delta;
      any = true;
    }
  }
  PS_CHECK(any, ErrorCode::kUnknownInstance, std::to_string(instance_id));
}

void EditLog::Apply(ScenePointCloud& cloud, const EditOp& op) {
  op.Validate();
  if (op.kind == EditKind::kRemove) {
    removed_.push_back(RemoveInstance(cloud, op.instance_id));
  } else {
    TranslateInstance(cloud, op.instance_id, *op.delta);
    removed_.emplace_back();
  }
  ops_.push_back(op);
}

ScenePointCloud EditLog::Replay(const ScenePointCloud& original) const {
  ScenePointCloud cloud = original;
  EditLog fresh;
  for (const EditOp& op : ops_) fresh.Apply(cloud, op);
  return cloud;
}

std::optional<EditLog> EditLog::WithoutLast() const {
  if (ops_.empty()) return std::nullopt;
  EditLog out = *this;
  out.ops_.pop_back();
  out.removed_.pop_back();
  return out;
}

std::vector<PointIndex> EditLog::AllRemoved() const {
  std::vector<PointIndex> all;
  for (const auto& r : removed_) all.insert(all.end(), r.begin(), r.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

bool EditLog::HasRemovals() const {
  return std::any_of(removed_.begin(), removed_.end(),
                     [](const auto& r) { return !r.empty(); });
}

nlohmann::json EditLog::ToJson() const {
  nlohmann::json ops = nlohmann::json::array();
  for (const EditOp& op : ops_) ops.push_back(op.ToJson());
  return ops;
}

std::vector<EditOp> EditLog::OpsFromJson(const nlohmann::json& j) {
  PS_CHECK(j.is_array(), ErrorCode::kInvalidArgument,
           "edits.json must be an array");
  std::vector<EditOp> ops;
  for (const auto& item : j) ops.push_back(EditOp::FromJson(item));
  return ops;
}

EditLog ApplyEdits(ScenePointCloud& cloud, std::span<const EditOp> ops) {
  EditLog log;
  for (const EditOp& op : ops) log.Apply(cloud, op);
  return log;
}

std::vector<BoolMask> ReferenceMasks(std::span<const PointIndex> removed,
                                     const ScenePointCloud& cloud,
                                     std::span<const ViewFrame> frames,
                                     int splat_radius) {
  std::vector<Eigen::Vector3d> points;
  points.reserve(removed.size());
  for (PointIndex i : removed) {
    PS_CHECK(i < cloud.size(), ErrorCode::kInvalidArgument,
             "removed index out of range");
    points.push_back(cloud.positions[i]);
  }
  std::vector<BoolMask> masks;
  masks.reserve(frames.size());
  for (const ViewFrame& f : frames) {
    BoolMask mask =
        points.empty()
            ? MakeMask(f.width(), f.height())
            : RasterizeFootprint(points, f.intrinsics, f.pose, splat_radius);
    const int view = cloud.ViewIndex(f.view_id);
    for (PointIndex i : removed) {
      const PointSource& s = cloud.sources[i];
      if (s.view == view && mask.InBounds(s.u, s.v)) mask.at(s.u, s.v) = 1;
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

}  // namespace pointscene
