#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointscene/image.h"
#include "pointscene/scene_model.h"

namespace pointscene {

struct MaskOrigin {
  std::string view_id;
  int32_t label = 0;

  friend auto operator<=>(const MaskOrigin&, const MaskOrigin&) = default;
};

// A candidate or unified 3D instance: cloud indices (sorted, unique) and the
// per-view 2D masks that contributed to it.
struct PointGroup {
  int32_t group_id = 0;
  std::vector<PointIndex> members;
  std::vector<MaskOrigin> origin;

  friend bool operator==(const PointGroup&, const PointGroup&) = default;
};

struct UnifyConfig {
  double eta = 1.0 / 3.0;
  int min_group_points = 20;
  int closing_radius = 1;

  void Validate() const;
};

// One group per (view, label >= 1) whose alive cloud points, taken from
// valid pointmap pixels carrying the label, number at least
// min_group_points. Pointmaps are aligned with cloud.view_ids.
std::vector<PointGroup> LiftMasks(std::span<const InstanceMask2D> masks,
                                  std::span<const PointMap> pointmaps,
                                  const ScenePointCloud& cloud,
                                  int min_group_points);

// Square-element morphology. Pixels outside the image count as unset for
// dilation and as set for erosion, so closing never eats into the border.
BoolMask Dilate(const BoolMask& mask, int radius);
BoolMask Erode(const BoolMask& mask, int radius);
BoolMask Close(const BoolMask& mask, int radius);

// Footprint of the group's points in the target camera (no z-test) followed
// by a closing of the given radius.
BoolMask ProjectGroupMask(const PointGroup& group, const ScenePointCloud& cloud,
                          const CameraIntrinsics& intrinsics,
                          const CameraPose& pose, int closing_radius);

// |a & b| / |a | b|, 0 when both are empty.
double MaskIoU(const BoolMask& a, const BoolMask& b);

struct UnifyStats {
  int passes = 0;
  int unions = 0;
};

// Merges groups across views: each group is projected into every other
// masked view and unioned with any native mask whose IoU exceeds eta,
// repeating full passes until one performs no union. Output groups are
// renumbered from 0 by descending size.
std::vector<PointGroup> UnifyInstances(std::span<const PointGroup> groups,
                                       const ScenePointCloud& cloud,
                                       std::span<const ViewFrame> frames,
                                       const UnifyConfig& cfg,
                                       UnifyStats* stats = nullptr);

// Copy of the cloud with instance_id set from the groups (others -1).
// Throws kOverlappingGroups when a point belongs to two groups.
ScenePointCloud LabelCloud(const ScenePointCloud& cloud,
                           std::span<const PointGroup> groups);

nlohmann::json InstancesToJson(std::span<const PointGroup> groups);

}  // namespace pointscene
