#include "pointscene/anomaly_filter.h"

#include "pointscene/error.h"
#include "pointscene/parallel.h"
#include "pointscene/projection.h"

namespace pointscene {

void FilterConfig::Validate() const {
  PS_CHECK(tau > 0.0 && tau < 1.0, ErrorCode::kInvalidArgument,
           "tau must be in (0, 1)");
  PS_CHECK(min_violations >= 1, ErrorCode::kInvalidArgument,
           "min_violations must be >= 1");
  PS_CHECK(min_observations >= 1, ErrorCode::kInvalidArgument,
           "min_observations must be >= 1");
}

size_t ConsistencyReport::TotalFlagged() const {
  size_t n = 0;
  for (const auto& v : views) n += v.flagged;
  return n;
}

nlohmann::json ConsistencyReport::ToJson(const FilterConfig& cfg) const {
  nlohmann::json views_json = nlohmann::json::array();
  size_t points = 0, tested = 0, flagged = 0;
  for (const ViewConsistency& v : views) {
    views_json.push_back({{"view_id", v.view_id},
                          {"points", v.points},
                          {"tested", v.tested},
                          {"observations", v.observations},
                          {"violations", v.violations},
                          {"violated", v.violated},
                          {"flagged", v.flagged}});
    points += v.points;
    tested += v.tested;
    flagged += v.flagged;
  }
  return {{"tau", cfg.tau},
          {"min_violations", cfg.min_violations},
          {"min_observations", cfg.min_observations},
          {"pairs_evaluated", pairs_evaluated},
          {"views", views_json},
          {"totals",
           {{"points", points}, {"tested", tested}, {"flagged", flagged}}}};
}

ConsistencyReport ConsistencyMasks(std::span<const PointMap> pointmaps,
                                   std::span<const ViewFrame> frames,
                                   const FilterConfig& cfg) {
  cfg.Validate();
  PS_CHECK(frames.size() >= 2, ErrorCode::kTooFewViews,
           "consistency filtering needs at least 2 views");
  PS_CHECK(pointmaps.size() == frames.size(), ErrorCode::kLengthMismatch,
           "pointmaps and frames differ in count");
  const size_t n = frames.size();
  ConsistencyReport report;
  report.views.resize(n);
  report.pairs_evaluated = n * (n - 1);

  // One task per source view; every counter is owned by exactly one task.
  ParallelFor(n, [&](size_t i) {
    const PointMap& map = pointmaps[i];
    ViewConsistency& out = report.views[i];
    out.view_id = frames[i].view_id;
    out.valid = map.valid;
    for (int v = 0; v < map.height; ++v) {
      for (int u = 0; u < map.width; ++u) {
        if (!map.valid.at(u, v)) continue;
        ++out.points;
        const Eigen::Vector3d& p = map.at(u, v);
        int observations = 0;
        int violations = 0;
        for (size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const ViewFrame& target = frames[j];
          const auto landing =
              LandOnPixel(target.intrinsics, target.pose, p);
          if (!landing) continue;
          const double native = target.depth.at(landing->x, landing->y);
          if (!(native > 0.0)) continue;
          ++observations;
          if (landing->depth < cfg.tau * native) ++violations;
        }
        out.observations += observations;
        out.violations += violations;
        if (observations > 0) ++out.tested;
        if (violations > 0) ++out.violated;
        if (violations >= cfg.min_violations &&
            observations >= cfg.min_observations) {
          out.valid.at(u, v) = 0;
          ++out.flagged;
        }
      }
    }
  });
  return report;
}

ScenePointCloud FilterCloud(const ScenePointCloud& cloud,
                            const ConsistencyReport& report) {
  PS_CHECK(report.views.size() == cloud.view_ids.size(),
           ErrorCode::kSourceMismatch, "report and cloud view counts differ");
  for (size_t i = 0; i < report.views.size(); ++i) {
    PS_CHECK(report.views[i].view_id == cloud.view_ids[i],
             ErrorCode::kSourceMismatch,
             "report view " + report.views[i].view_id + " vs cloud view " +
                 cloud.view_ids[i]);
  }
  ScenePointCloud out;
  out.view_ids = cloud.view_ids;
  out.Reserve(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    const PointSource& s = cloud.sources[i];
    const BoolMask& mask = report.views[s.view].valid;
    PS_CHECK(mask.InBounds(s.u, s.v), ErrorCode::kSourceMismatch,
             "source pixel outside report mask");
    if (mask.at(s.u, s.v)) out.PushFrom(cloud, i);
  }
  return out;
}

std::vector<PointMap> ApplyConsistency(std::span<const PointMap> pointmaps,
                                       const ConsistencyReport& report) {
  PS_CHECK(pointmaps.size() == report.views.size(), ErrorCode::kSourceMismatch,
           "report and pointmap counts differ");
  std::vector<PointMap> out(pointmaps.begin(), pointmaps.end());
  for (size_t i = 0; i < out.size(); ++i) {
    const BoolMask& mask = report.views[i].valid;
    PS_CHECK(mask.SameShape(out[i].valid), ErrorCode::kSourceMismatch,
             "report mask shape differs from pointmap");
    for (size_t px = 0; px < mask.num_pixels(); ++px) {
      out[i].valid.raw()[px] &= mask.raw()[px];
    }
  }
  return out;
}

}  // namespace pointscene
