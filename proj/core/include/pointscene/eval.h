#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "pointscene/camera.h"
#include "pointscene/image.h"

namespace pointscene {

// Maps ground-truth coordinates into the predicted frame: p' = s * R * p + t.
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d Apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
  // Center goes through Apply; orientation becomes R * R_gt.
  CameraPose MapPose(const CameraPose& gt) const;
  SimilarityTransform Inverse() const;

  nlohmann::json ToJson() const;
  static SimilarityTransform FromJson(const nlohmann::json& j);
};

// Least-squares similarity taking gt camera centers onto pred camera centers.
// With estimate_scale = false the scale is fixed to 1 (rigid fit). Throws
// kTooFewPoses below 3 pairs, kLengthMismatch on unequal inputs and
// kDegenerateConfiguration when the centers are coincident or collinear.
SimilarityTransform AlignPoses(std::span<const CameraPose> pred,
                               std::span<const CameraPose> gt,
                               bool estimate_scale = true);

struct DepthMetrics {
  double rmse = 0.0;
  double delta_125 = 0.0;  // fraction with max(p/g, g/p) < 1.25 (strict)
  size_t pixels_evaluated = 0;
  double scale = 1.0;      // factor applied to pred before scoring

  nlohmann::json ToJson() const;
};

// Scores pixels where both depths are > 0. With scale_align, pred is first
// multiplied by the median of gt/pred over those pixels. Throws
// kShapeMismatch or kNoValidPixels.
DepthMetrics ComputeDepthMetrics(const DepthImage& pred, const DepthImage& gt,
                                 bool scale_align = true);

struct ThresholdAP {
  double iou_threshold = 0.0;
  double ap = 0.0;
  size_t true_positives = 0;
  size_t false_positives = 0;
  size_t false_negatives = 0;
};

struct InstanceAPResult {
  double ap = 0.0;  // mean over thresholds 0.50, 0.55, ..., 0.95
  double ap50 = 0.0;
  double ap75 = 0.0;
  size_t num_pred = 0;
  size_t num_gt = 0;
  std::vector<ThresholdAP> thresholds;

  nlohmann::json ToJson() const;
};

// IoU thresholds k/20 for k = 10..19.
std::vector<double> ApThresholds();

// Per-point labels; -1 in pred means unassigned, -1 in gt excludes the point
// entirely. Predictions are ranked by size (ties: smallest member index) and
// greedily matched to the unmatched gt instance of highest IoU (ties: the gt
// instance with the smallest member index). AP per threshold is the area
// under the precision/recall step curve.
InstanceAPResult InstanceAP(std::span<const int32_t> pred_labels,
                            std::span<const int32_t> gt_labels);

// 10 * log10(255^2 / MSE) over all samples, 99 dB when identical.
double Psnr(const RgbImage& pred, const RgbImage& gt);

// Mean over channels of single-scale SSIM with an 11x11 Gaussian window
// (sigma 1.5) evaluated at every fully contained window position.
double Ssim(const RgbImage& pred, const RgbImage& gt);

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

struct ImageMetrics {
  double psnr = 0.0;
  double ssim = 0.0;
};
ImageMetrics ComputeImageMetrics(const RgbImage& pred, const RgbImage& gt);

}  // namespace pointscene
