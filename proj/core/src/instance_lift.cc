#include "pointscene/instance_lift.h"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "pointscene/error.h"
#include "pointscene/parallel.h"
#include "pointscene/projection.h"

namespace pointscene {
namespace {

class DisjointSet {
 public:
  explicit DisjointSet(size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), size_t{0});
  }

  size_t Find(size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Smaller index becomes the root, keeping roots stable across orderings.
  bool Union(size_t a, size_t b) {
    a = Find(a);
    b = Find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<size_t> parent_;
};

// 1D running-window OR along rows or columns. `outside` is the value
// assumed beyond the image border.
BoolMask SlidingAny(const BoolMask& in, int radius, bool horizontal,
                    bool outside, bool all) {
  const int w = in.width();
  const int h = in.height();
  BoolMask out = MakeMask(w, h);
  const int len = horizontal ? w : h;
  const int lines = horizontal ? h : w;
  std::vector<int> prefix(len + 1);
  for (int line = 0; line < lines; ++line) {
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) {
      const int x = horizontal ? i : line;
      const int y = horizontal ? line : i;
      prefix[i + 1] = prefix[i] + (in.at(x, y) ? 1 : 0);
    }
    for (int i = 0; i < len; ++i) {
      const int lo = i - radius;
      const int hi = i + radius;
      const int clo = std::max(0, lo);
      const int chi = std::min(len - 1, hi);
      const int set = prefix[chi + 1] - prefix[clo];
      const int window = chi - clo + 1;
      const bool clipped = lo < 0 || hi >= len;
      bool value;
      if (all) {
        value = set == window && (!clipped || outside);
      } else {
        value = set > 0 || (clipped && outside);
      }
      const int x = horizontal ? i : line;
      const int y = horizontal ? line : i;
      out.at(x, y) = value ? 1 : 0;
    }
  }
  return out;
}

struct Candidate {
  size_t root;
  size_t other;
};

}  // namespace

void UnifyConfig::Validate() const {
  PS_CHECK(eta > 0.0 && eta <= 1.0, ErrorCode::kInvalidArgument,
           "eta must be in (0, 1]");
  PS_CHECK(min_group_points >= 1, ErrorCode::kInvalidArgument,
           "min_group_points must be >= 1");
  PS_CHECK(closing_radius >= 0, ErrorCode::kInvalidArgument,
           "closing_radius must be >= 0");
}

std::vector<PointGroup> LiftMasks(std::span<const InstanceMask2D> masks,
                                  std::span<const PointMap> pointmaps,
                                  const ScenePointCloud& cloud,
                                  int min_group_points) {
  PS_CHECK(pointmaps.size() == cloud.view_ids.size(),
           ErrorCode::kLengthMismatch, "pointmaps and cloud views differ");
  std::vector<const InstanceMask2D*> ordered;
  for (const InstanceMask2D& m : masks) {
    PS_CHECK(cloud.ViewIndex(m.view_id) >= 0, ErrorCode::kUnknownView,
             m.view_id);
    ordered.push_back(&m);
  }
  std::sort(ordered.begin(), ordered.end(),
            [&](const InstanceMask2D* a, const InstanceMask2D* b) {
              return cloud.ViewIndex(a->view_id) < cloud.ViewIndex(b->view_id);
            });

  std::vector<PointGroup> groups;
  for (const InstanceMask2D* mask : ordered) {
    const int view = cloud.ViewIndex(mask->view_id);
    const PointMap& map = pointmaps[view];
    PS_CHECK(mask->labels.SameShape(map.width, map.height),
             ErrorCode::kShapeMismatch, mask->view_id + "/masks");
    const Image<int64_t> index =
        SourceIndexImage(cloud, view, map.width, map.height);
    std::map<int32_t, std::vector<PointIndex>> by_label;
    for (int v = 0; v < map.height; ++v) {
      for (int u = 0; u < map.width; ++u) {
        const int32_t label = mask->labels.at(u, v);
        if (label < 1 || !map.valid.at(u, v)) continue;
        const int64_t idx = index.at(u, v);
        if (idx < 0 || !cloud.alive[idx]) continue;
        by_label[label].push_back(static_cast<PointIndex>(idx));
      }
    }
    for (auto& [label, members] : by_label) {
      if (static_cast<int>(members.size()) < min_group_points) continue;
      std::sort(members.begin(), members.end());
      PointGroup g;
      g.group_id = static_cast<int32_t>(groups.size());
      g.members = std::move(members);
      g.origin.push_back({mask->view_id, label});
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

BoolMask Dilate(const BoolMask& mask, int radius) {
  if (radius <= 0) return mask;
  return SlidingAny(SlidingAny(mask, radius, true, false, false), radius,
                    false, false, false);
}

BoolMask Erode(const BoolMask& mask, int radius) {
  if (radius <= 0) return mask;
  return SlidingAny(SlidingAny(mask, radius, true, true, true), radius, false,
                    true, true);
}

BoolMask Close(const BoolMask& mask, int radius) {
  return Erode(Dilate(mask, radius), radius);
}

BoolMask ProjectGroupMask(const PointGroup& group, const ScenePointCloud& cloud,
                          const CameraIntrinsics& intrinsics,
                          const CameraPose& pose, int closing_radius) {
  std::vector<Eigen::Vector3d> points;
  points.reserve(group.members.size());
  for (PointIndex i : group.members) points.push_back(cloud.positions[i]);
  return Close(RasterizeFootprint(points, intrinsics, pose, 0),
               closing_radius);
}

double MaskIoU(const BoolMask& a, const BoolMask& b) {
  PS_CHECK(a.SameShape(b), ErrorCode::kShapeMismatch,
           "mask_iou operands differ in shape");
  size_t inter = 0;
  size_t uni = 0;
  for (size_t i = 0; i < a.num_pixels(); ++i) {
    const bool x = a.raw()[i] != 0;
    const bool y = b.raw()[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<PointGroup> UnifyInstances(std::span<const PointGroup> groups,
                                       const ScenePointCloud& cloud,
                                       std::span<const ViewFrame> frames,
                                       const UnifyConfig& cfg,
                                       UnifyStats* stats) {
  cfg.Validate();
  const size_t n = groups.size();

  // Native 2D masks per view and the lifted group each one produced.
  struct NativeView {
    const ViewFrame* frame = nullptr;
    std::map<int32_t, size_t> label_area;
    std::map<int32_t, size_t> label_group;
  };
  std::vector<NativeView> views;
  std::map<std::string, size_t> view_slot;
  for (const ViewFrame& f : frames) {
    if (!f.masks) continue;
    NativeView nv;
    nv.frame = &f;
    for (int32_t l : f.masks->labels.data()) {
      if (l >= 1) ++nv.label_area[l];
    }
    view_slot[f.view_id] = views.size();
    views.push_back(std::move(nv));
  }
  for (size_t g = 0; g < n; ++g) {
    for (const MaskOrigin& o : groups[g].origin) {
      const auto it = view_slot.find(o.view_id);
      if (it != view_slot.end()) views[it->second].label_group[o.label] = g;
    }
  }

  DisjointSet dsu(n);
  UnifyStats local;
  for (size_t pass = 0; pass <= n; ++pass) {
    ++local.passes;
    // Snapshot the current partition.
    std::map<size_t, std::vector<size_t>> constituents;
    for (size_t g = 0; g < n; ++g) constituents[dsu.Find(g)].push_back(g);
    struct Task {
      size_t root;
      size_t view;
    };
    std::vector<size_t> roots;
    std::vector<PointGroup> merged;
    for (const auto& [root, parts] : constituents) {
      PointGroup m;
      for (size_t g : parts) {
        m.members.insert(m.members.end(), groups[g].members.begin(),
                         groups[g].members.end());
      }
      std::sort(m.members.begin(), m.members.end());
      roots.push_back(root);
      merged.push_back(std::move(m));
    }
    std::vector<Task> tasks;
    for (size_t r = 0; r < roots.size(); ++r) {
      std::set<std::string> origin_views;
      for (size_t g : constituents[roots[r]]) {
        for (const auto& o : groups[g].origin) origin_views.insert(o.view_id);
      }
      for (size_t v = 0; v < views.size(); ++v) {
        const std::string& id = views[v].frame->view_id;
        const bool only_self =
            origin_views.size() == 1 && *origin_views.begin() == id;
        if (!only_self) tasks.push_back({r, v});
      }
    }

    std::vector<std::vector<Candidate>> found(tasks.size());
    ParallelFor(tasks.size(), [&](size_t t) {
      const NativeView& nv = views[tasks[t].view];
      const ViewFrame& f = *nv.frame;
      const BoolMask proj = ProjectGroupMask(
          merged[tasks[t].root], cloud, f.intrinsics, f.pose,
          cfg.closing_radius);
      size_t proj_area = 0;
      std::map<int32_t, size_t> inter;
      for (size_t px = 0; px < proj.num_pixels(); ++px) {
        if (!proj.raw()[px]) continue;
        ++proj_area;
        const int32_t l = f.masks->labels.raw()[px];
        if (l >= 1) ++inter[l];
      }
      for (const auto& [label, overlap] : inter) {
        const size_t uni = proj_area + nv.label_area.at(label) - overlap;
        const double iou =
            static_cast<double>(overlap) / static_cast<double>(uni);
        const auto it = nv.label_group.find(label);
        if (iou > cfg.eta && it != nv.label_group.end()) {
          found[t].push_back({roots[tasks[t].root], it->second});
        }
      }
    });

    int unions = 0;
    for (const auto& list : found) {
      for (const Candidate& c : list) unions += dsu.Union(c.root, c.other);
    }
    local.unions += unions;
    if (unions == 0) break;
  }

  std::map<size_t, PointGroup> by_root;
  for (size_t g = 0; g < n; ++g) {
    PointGroup& m = by_root[dsu.Find(g)];
    m.members.insert(m.members.end(), groups[g].members.begin(),
                     groups[g].members.end());
    m.origin.insert(m.origin.end(), groups[g].origin.begin(),
                    groups[g].origin.end());
  }
  std::vector<PointGroup> out;
  out.reserve(by_root.size());
  for (auto& [root, m] : by_root) {
    std::sort(m.members.begin(), m.members.end());
    m.members.erase(std::unique(m.members.begin(), m.members.end()),
                    m.members.end());
    std::sort(m.origin.begin(), m.origin.end());
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), [](const PointGroup& a, const PointGroup& b) {
    if (a.members.size() != b.members.size()) {
      return a.members.size() > b.members.size();
    }
    return a.members.front() < b.members.front();
  });
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].group_id = static_cast<int32_t>(i);
  }
  if (stats) *stats = local;
  return out;
}

ScenePointCloud LabelCloud(const ScenePointCloud& cloud,
                           std::span<const PointGroup> groups) {
  ScenePointCloud out = cloud;
  std::fill(out.instance_id.begin(), out.instance_id.end(), kUnlabeled);
  std::vector<uint8_t> taken(cloud.size(), 0);
  for (const PointGroup& g : groups) {
    for (PointIndex i : g.members) {
      PS_CHECK(i < cloud.size(), ErrorCode::kInvalidArgument,
               "group member out of range");
      PS_CHECK(!taken[i], ErrorCode::kOverlappingGroups,
               "point " + std::to_string(i) + " is in two groups");
      taken[i] = 1;
      out.instance_id[i] = g.group_id;
    }
  }
  return out;
}

nlohmann::json InstancesToJson(std::span<const PointGroup> groups) {
  nlohmann::json list = nlohmann::json::array();
  for (const PointGroup& g : groups) {
    nlohmann::json origin = nlohmann::json::array();
    for (const MaskOrigin& o : g.origin) {
      origin.push_back({{"view_id", o.view_id}, {"label", o.label}});
    }
    list.push_back({{"id", g.group_id},
                    {"point_count", g.members.size()},
                    {"origin", origin}});
  }
  return {{"instances", list}};
}

}  // namespace pointscene
