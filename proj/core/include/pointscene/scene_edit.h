#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "pointscene/image.h"
#include "pointscene/scene_model.h"

namespace pointscene {

enum class EditKind { kRemove, kTranslate };

struct EditOp {
  EditKind kind = EditKind::kRemove;
  int32_t instance_id = 0;
  std::optional<Eigen::Vector3d> delta;  // translate only

  void Validate() const;
  nlohmann::json ToJson() const;
  static EditOp FromJson(const nlohmann::json& j);

  friend bool operator==(const EditOp& a, const EditOp& b) {
    return a.kind == b.kind && a.instance_id == b.instance_id &&
           a.delta.has_value() == b.delta.has_value() &&
           (!a.delta || *a.delta == *b.delta);
  }
};

// Soft delete: alive = false for every alive point of the instance. Returns
// the affected indices (ascending). Throws kUnknownInstance when no alive
// point carries the id.
std::vector<PointIndex> RemoveInstance(ScenePointCloud& cloud,
                                       int32_t instance_id);

// Adds delta to every alive member position. Colors and sources stay.
void TranslateInstance(ScenePointCloud& cloud, int32_t instance_id,
                       const Eigen::Vector3d& delta);

// Ordered record of applied edits; replaying it on the original cloud
// reproduces the edited cloud bit for bit.
class EditLog {
 public:
  // Applies `op` to `cloud` and records it.
  void Apply(ScenePointCloud& cloud, const EditOp& op);

  // Copy of `original` with every logged op applied in order.
  ScenePointCloud Replay(const ScenePointCloud& original) const;

  // Log without its last op, or nullopt when empty.
  std::optional<EditLog> WithoutLast() const;

  const std::vector<EditOp>& ops() const { return ops_; }
  const std::vector<std::vector<PointIndex>>& removed_points() const {
    return removed_;
  }
  // Union of all removed indices, ascending.
  std::vector<PointIndex> AllRemoved() const;
  bool HasRemovals() const;
  bool empty() const { return ops_.empty(); }
  size_t size() const { return ops_.size(); }

  nlohmann::json ToJson() const;
  // Ops only; removed sets are recomputed by replaying on a cloud.
  static std::vector<EditOp> OpsFromJson(const nlohmann::json& j);

  friend bool operator==(const EditLog&, const EditLog&) = default;

 private:
  std::vector<EditOp> ops_;
  std::vector<std::vector<PointIndex>> removed_;
};

// Replays ops onto `cloud`, returning the resulting log.
EditLog ApplyEdits(ScenePointCloud& cloud, std::span<const EditOp> ops);

// Per view: pixels where removed points land (square splat, no z-test)
// plus each removed point's own source pixel. Masks are aligned with
// `frames`, matched to cloud.view_ids by id.
std::vector<BoolMask> ReferenceMasks(std::span<const PointIndex> removed,
                                     const ScenePointCloud& cloud,
                                     std::span<const ViewFrame> frames,
                                     int splat_radius);

}  // namespace pointscene
