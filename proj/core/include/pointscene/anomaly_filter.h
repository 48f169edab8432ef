#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointscene/image.h"
#include "pointscene/scene_model.h"

namespace pointscene {

struct FilterConfig {
  double tau = 0.75;
  int min_violations = 1;
  int min_observations = 1;

  void Validate() const;
};

struct ViewConsistency {
  std::string view_id;
  BoolMask valid;           // depth-valid and not flagged
  size_t points = 0;        // depth-valid source pixels
  size_t tested = 0;        // points observed by at least one other view
  size_t observations = 0;  // (point, other view) tests performed
  size_t violations = 0;    // tests that failed
  size_t violated = 0;      // points with at least one failed test
  size_t flagged = 0;       // points removed
};

struct ConsistencyReport {
  std::vector<ViewConsistency> views;
  size_t pairs_evaluated = 0;

  size_t TotalFlagged() const;
  nlohmann::json ToJson(const FilterConfig& cfg) const;
};

// Multi-view depth consistency. A valid point of view i, projected into
// every other view j, is tested when it lands in bounds on a pixel with
// native depth Z_j > 0; the test fails when its depth in camera j is below
// tau * Z_j. A point is flagged once it has min_violations failures and at
// least min_observations tests.
ConsistencyReport ConsistencyMasks(std::span<const PointMap> pointmaps,
                                   std::span<const ViewFrame> frames,
                                   const FilterConfig& cfg);

// Keeps the points whose source pixel is valid in the report, in order.
ScenePointCloud FilterCloud(const ScenePointCloud& cloud,
                            const ConsistencyReport& report);

// Intersects each pointmap's validity with the report's masks.
std::vector<PointMap> ApplyConsistency(std::span<const PointMap> pointmaps,
                                       const ConsistencyReport& report);

}  // namespace pointscene
