#include "pointscene/eval.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "pointscene/error.h"

namespace pointscene {

CameraPose SimilarityTransform::MapPose(const CameraPose& gt) const {
  CameraPose out;
  out.rotation = rotation * gt.rotation;
  out.translation = Apply(gt.translation);
  return out;
}

SimilarityTransform SimilarityTransform::Inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation) / scale;
  return inv;
}

nlohmann::json SimilarityTransform::ToJson() const {
  nlohmann::json r = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r.push_back(rotation(i, j));
  }
  return {{"scale", scale},
          {"rotation", r},
          {"translation", {translation.x(), translation.y(), translation.z()}}};
}

SimilarityTransform SimilarityTransform::FromJson(const nlohmann::json& j) {
  SimilarityTransform s;
  try {
    s.scale = j.at("scale").get<double>();
    const auto& r = j.at("rotation");
    const auto& t = j.at("translation");
    PS_CHECK(r.size() == 9 && t.size() == 3, ErrorCode::kInvalidArgument,
             "similarity needs 9 rotation and 3 translation values");
    for (int i = 0; i < 9; ++i) s.rotation(i / 3, i % 3) = r[i].get<double>();
    for (int i = 0; i < 3; ++i) s.translation(i) = t[i].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("similarity: ") + e.what());
  }
  PS_CHECK(s.scale > 0, ErrorCode::kInvalidArgument, "scale must be > 0");
  return s;
}

SimilarityTransform AlignPoses(std::span<const CameraPose> pred,
                               std::span<const CameraPose> gt,
                               bool estimate_scale) {
  PS_CHECK(pred.size() == gt.size(), ErrorCode::kLengthMismatch,
           std::to_string(pred.size()) + " pred vs " +
               std::to_string(gt.size()) + " gt poses");
  PS_CHECK(gt.size() >= 3, ErrorCode::kTooFewPoses,
           "need at least 3 pose pairs, got " + std::to_string(gt.size()));
  const double n = static_cast<double>(gt.size());

  Eigen::Vector3d mu_gt = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_pred = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < gt.size(); ++i) {
    mu_gt += gt[i].center();
    mu_pred += pred[i].center();
  }
  mu_gt /= n;
  mu_pred /= n;

  Eigen::Matrix3d cov_gt = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  double var_gt = 0.0;
  for (size_t i = 0; i < gt.size(); ++i) {
    const Eigen::Vector3d x = gt[i].center() - mu_gt;
    const Eigen::Vector3d y = pred[i].center() - mu_pred;
    cov_gt += x * x.transpose();
    cross += y * x.transpose();
    var_gt += x.squaredNorm();
  }
  cov_gt /= n;
  cross /= n;
  var_gt /= n;

  const Eigen::Vector3d spread =
      Eigen::JacobiSVD<Eigen::Matrix3d>(cov_gt).singularValues();
  PS_CHECK(spread(0) > 0 && spread(1) > 1e-12 * spread(0),
           ErrorCode::kDegenerateConfiguration,
           "gt camera centers are coincident or collinear");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  PS_CHECK(d(0) > 0 && d(1) > 1e-12 * d(0),
           ErrorCode::kDegenerateConfiguration,
           "pred camera centers are coincident or collinear");

  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) {
    s(2) = -1.0;
  }
  SimilarityTransform out;
  out.rotation = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  out.scale = estimate_scale ? d.dot(s) / var_gt : 1.0;
  out.translation = mu_pred - out.scale * out.rotation * mu_gt;
  return out;
}

nlohmann::json DepthMetrics::ToJson() const {
  return {{"rmse", rmse},
          {"delta_125", delta_125},
          {"pixels_evaluated", pixels_evaluated},
          {"scale", scale}};
}

DepthMetrics ComputeDepthMetrics(const DepthImage& pred, const DepthImage& gt,
                                 bool scale_align) {
  PS_CHECK(pred.SameShape(gt), ErrorCode::kShapeMismatch,
           "pred and gt depth sizes differ");
  std::vector<size_t> pixels;
  for (size_t i = 0; i < gt.num_pixels(); ++i) {
    if (pred.raw()[i] > 0 && gt.raw()[i] > 0) pixels.push_back(i);
  }
  PS_CHECK(!pixels.empty(), ErrorCode::kNoValidPixels,
           "no pixel has both depths > 0");

  DepthMetrics m;
  m.pixels_evaluated = pixels.size();
  if (scale_align) {
    std::vector<double> ratios;
    ratios.reserve(pixels.size());
    for (size_t i : pixels) {
      ratios.push_back(static_cast<double>(gt.raw()[i]) / pred.raw()[i]);
    }
    const size_t mid = ratios.size() / 2;
    std::nth_element(ratios.begin(), ratios.begin() + mid, ratios.end());
    double median = ratios[mid];
    if (ratios.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(ratios.begin(),
                                                 ratios.begin() + mid));
    }
    m.scale = median;
  }

  double sq = 0.0;
  size_t inside = 0;
  for (size_t i : pixels) {
    const double p = m.scale * pred.raw()[i];
    const double g = gt.raw()[i];
    sq += (p - g) * (p - g);
    if (std::max(p / g, g / p) < 1.25) ++inside;
  }
  m.rmse = std::sqrt(sq / pixels.size());
  m.delta_125 = static_cast<double>(inside) / pixels.size();
  return m;
}

nlohmann::json InstanceAPResult::ToJson() const {
  nlohmann::json per = nlohmann::json::array();
  for (const ThresholdAP& t : thresholds) {
    per.push_back({{"iou", t.iou_threshold},
                   {"ap", t.ap},
                   {"tp", t.true_positives},
                   {"fp", t.false_positives},
                   {"fn", t.false_negatives}});
  }
  return {{"ap", ap},       {"ap50", ap50},     {"ap75", ap75},
          {"num_pred", num_pred}, {"num_gt", num_gt}, {"thresholds", per}};
}

std::vector<double> ApThresholds() {
  std::vector<double> t;
  for (int k = 10; k <= 19; ++k) t.push_back(k / 20.0);
  return t;
}

namespace {

struct LabelGroup {
  int32_t label = 0;
  size_t size = 0;
  size_t first = 0;  // smallest member index
};

// Groups points by label (excluding -1), ordered by descending size then
// smallest member.
std::vector<LabelGroup> RankGroups(std::span<const int32_t> labels,
                                   std::span<const uint8_t> included) {
  std::map<int32_t, LabelGroup> by_label;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (!included[i] || labels[i] < 0) continue;
    auto [it, fresh] = by_label.try_emplace(labels[i]);
    if (fresh) {
      it->second.label = labels[i];
      it->second.first = i;
    }
    ++it->second.size;
  }
  std::vector<LabelGroup> groups;
  for (auto& [label, g] : by_label) groups.push_back(g);
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    return a.size != b.size ? a.size > b.size : a.first < b.first;
  });
  return groups;
}

}  // namespace

InstanceAPResult InstanceAP(std::span<const int32_t> pred_labels,
                            std::span<const int32_t> gt_labels) {
  PS_CHECK(pred_labels.size() == gt_labels.size(), ErrorCode::kLengthMismatch,
           std::to_string(pred_labels.size()) + " pred vs " +
               std::to_string(gt_labels.size()) + " gt labels");
  std::vector<uint8_t> included(gt_labels.size());
  for (size_t i = 0; i < gt_labels.size(); ++i) included[i] = gt_labels[i] >= 0;

  const std::vector<LabelGroup> preds = RankGroups(pred_labels, included);
  const std::vector<LabelGroup> gts = RankGroups(gt_labels, included);
  std::map<int32_t, size_t> pred_rank, gt_rank;
  for (size_t i = 0; i < preds.size(); ++i) pred_rank[preds[i].label] = i;
  for (size_t i = 0; i < gts.size(); ++i) gt_rank[gts[i].label] = i;

  // Intersections as a dense pred x gt table.
  std::vector<size_t> inter(preds.size() * gts.size(), 0);
  for (size_t i = 0; i < gt_labels.size(); ++i) {
    if (!included[i] || pred_labels[i] < 0) continue;
    inter[pred_rank[pred_labels[i]] * gts.size() + gt_rank[gt_labels[i]]]++;
  }
  // Gt groups in tie-break order: smallest member index first.
  std::vector<size_t> gt_order(gts.size());
  std::iota(gt_order.begin(), gt_order.end(), 0);
  std::sort(gt_order.begin(), gt_order.end(),
            [&](size_t a, size_t b) { return gts[a].first < gts[b].first; });

  InstanceAPResult result;
  result.num_pred = preds.size();
  result.num_gt = gts.size();
  for (double threshold : ApThresholds()) {
    ThresholdAP t;
    t.iou_threshold = threshold;
    std::vector<uint8_t> matched(gts.size(), 0);
    double area = 0.0;
    for (size_t p = 0; p < preds.size(); ++p) {
      double best_iou = -1.0;
      size_t best = gts.size();
      for (size_t g : gt_order) {
        if (matched[g]) continue;
        const size_t in = inter[p * gts.size() + g];
        const double iou =
            static_cast<double>(in) / (preds[p].size + gts[g].size - in);
        if (iou > best_iou) {
          best_iou = iou;
          best = g;
        }
      }
      if (best < gts.size() && best_iou >= threshold) {
        matched[best] = 1;
        ++t.true_positives;
        area += static_cast<double>(t.true_positives) / (p + 1);
      } else {
        ++t.false_positives;
      }
    }
    t.false_negatives = gts.size() - t.true_positives;
    t.ap = gts.empty() ? 0.0 : area / gts.size();
    result.thresholds.push_back(t);
  }
  double sum = 0.0;
  for (const ThresholdAP& t : result.thresholds) sum += t.ap;
  result.ap50 = result.thresholds.front().ap;
  // Per-threshold AP never rises with the threshold, so the mean is bounded
  // by ap50; keep rounding from breaking that.
  result.ap = std::min(sum / result.thresholds.size(), result.ap50);
  result.ap75 = result.thresholds[5].ap;
  return result;
}

double Psnr(const RgbImage& pred, const RgbImage& gt) {
  PS_CHECK(pred.SameShape(gt) && pred.channels() == gt.channels(),
           ErrorCode::kShapeMismatch, "pred and gt image sizes differ");
  PS_CHECK(!gt.empty(), ErrorCode::kShapeMismatch, "empty image");
  double sq = 0.0;
  for (size_t i = 0; i < gt.raw().size(); ++i) {
    const double d = static_cast<double>(pred.raw()[i]) - gt.raw()[i];
    sq += d * d;
  }
  if (sq == 0.0) return kPsnrCap;
  const double mse = sq / gt.raw().size();
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

namespace {

std::array<double, kSsimWindow> GaussianWindow() {
  std::array<double, kSsimWindow> g{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double x = i - kSsimWindow / 2;
    g[i] = std::exp(-(x * x) / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable filtering of a w x h plane.
std::vector<double> FilterValid(const std::vector<double>& plane, int w, int h,
                                const std::array<double, kSsimWindow>& g) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        acc += g[k] * plane[static_cast<size_t>(y) * w + x + k];
      }
      rows[static_cast<size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        acc += g[k] * rows[static_cast<size_t>(y + k) * ow + x];
      }
      out[static_cast<size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double Ssim(const RgbImage& pred, const RgbImage& gt) {
  PS_CHECK(pred.SameShape(gt) && pred.channels() == gt.channels(),
           ErrorCode::kShapeMismatch, "pred and gt image sizes differ");
  const int w = gt.width();
  const int h = gt.height();
  PS_CHECK(w >= kSsimWindow && h >= kSsimWindow, ErrorCode::kShapeMismatch,
           "image smaller than the 11x11 SSIM window");
  constexpr double c1 = (0.01 * 255) * (0.01 * 255);
  constexpr double c2 = (0.03 * 255) * (0.03 * 255);
  const auto g = GaussianWindow();
  const size_t n = gt.num_pixels();

  double total = 0.0;
  for (int c = 0; c < gt.channels(); ++c) {
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = pred.raw()[i * gt.channels() + c];
      b[i] = gt.raw()[i * gt.channels() + c];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto mu_a = FilterValid(a, w, h, g);
    const auto mu_b = FilterValid(b, w, h, g);
    const auto e_aa = FilterValid(aa, w, h, g);
    const auto e_bb = FilterValid(bb, w, h, g);
    const auto e_ab = FilterValid(ab, w, h, g);
    double sum = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
      const double va = e_aa[i] - mu_a[i] * mu_a[i];
      const double vb = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      sum += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    total += sum / mu_a.size();
  }
  return total / gt.channels();
}

ImageMetrics ComputeImageMetrics(const RgbImage& pred, const RgbImage& gt) {
  return {Psnr(pred, gt), Ssim(pred, gt)};
}

}  // namespace pointscene
