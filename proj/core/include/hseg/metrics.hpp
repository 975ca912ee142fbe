#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hseg/label_map.hpp"

namespace hseg {

// Pairwise overlap used by best_dice/sbd. Dice is the usual convention for
// SBD; IoU is available for comparison.
enum class Overlap { kDice, kIoU };

// Mean over instances of `a` of the best overlap with any instance of `b`.
// Returns 0 when `a` has no instances.
double best_dice(const LabelMap& a, const LabelMap& b, Overlap overlap = Overlap::kDice);

// min(best_dice(pred, gt), best_dice(gt, pred)); 1 when both are empty.
double sbd(const LabelMap& pred, const LabelMap& gt, Overlap overlap = Overlap::kDice);

// |#instances(pred) - #instances(gt)|
std::size_t abs_dic(const LabelMap& pred, const LabelMap& gt);

// Instance mask as sorted raster indices.
using Mask = std::vector<std::uint32_t>;

struct ScoredMask {
  Mask mask;
  double score = 0.0;
};

struct ImageInstances {
  std::vector<ScoredMask> predictions;
  std::vector<Mask> ground_truth;
};

struct ApScores {
  double ap = 0.0;    // mean over IoU thresholds 0.50:0.05:0.95
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap_s = 0.0;  // ground-truth area < 32^2
  double ap_m = 0.0;  // 32^2 <= area <= 96^2
  double ap_l = 0.0;  // area > 96^2
};

struct CocoOptions {
  std::size_t max_detections = 100;
};

// COCO-protocol mask AP: greedy score-ordered matching per image and
// threshold, precision envelope, 101-point recall sampling. Buckets without
// any ground truth report -1.
ApScores coco_ap(std::span<const ImageInstances> images, const CocoOptions& options = {});

// Masks of a label map in ascending id order.
std::vector<Mask> masks_from_labels(const LabelMap& map);

// Pairs a predicted labelling (scores[k] belongs to id k + 1, missing scores
// count as 1) with its ground truth.
ImageInstances instances_from_labels(const LabelMap& pred, std::span<const double> scores,
                                     const LabelMap& gt);

struct SegScore {
  double sbd = 0.0;
  double dic = 0.0;
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  double ap_s = 0.0;
  double ap_m = 0.0;
  double ap_l = 0.0;
};

struct EvalOptions {
  Overlap overlap = Overlap::kDice;
  // Averages SBD over non-overlapping crops of this size instead of whole
  // images when both extents are positive. Crops empty in both maps are skipped.
  int crop_w = 0;
  int crop_h = 0;
};

struct ImageScore {
  double sbd = 0.0;
  std::size_t dic = 0;
  std::size_t pred_count = 0;
  std::size_t gt_count = 0;
};

ImageScore score_image(const LabelMap& pred, const LabelMap& gt, const EvalOptions& options);

// Dataset means of SBD and |DiC| plus dataset-level AP.
SegScore score_dataset(std::span<const LabelMap> preds,
                       std::span<const std::vector<double>> scores,
                       std::span<const LabelMap> gts, const EvalOptions& options = {});

}  // namespace hseg
