#include "hseg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "hseg/error.hpp"

namespace hseg {

namespace {

struct Contingency {
  std::map<InstanceId, std::size_t> size_a, size_b;
  std::map<std::pair<InstanceId, InstanceId>, std::size_t> overlap;
};

Contingency contingency(const LabelMap& a, const LabelMap& b) {
  if (a.frame() != b.frame()) throw DomainError("label maps have different frames");
  Contingency c;
  auto ia = a.ids();
  auto ib = b.ids();
  for (std::size_t i = 0; i < ia.size(); ++i) {
    if (ia[i]) ++c.size_a[ia[i]];
    if (ib[i]) ++c.size_b[ib[i]];
    if (ia[i] && ib[i]) ++c.overlap[{ia[i], ib[i]}];
  }
  return c;
}

double overlap_score(std::size_t inter, std::size_t sa, std::size_t sb, Overlap kind) {
  if (kind == Overlap::kDice) {
    return 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb);
  }
  return static_cast<double>(inter) / static_cast<double>(sa + sb - inter);
}

std::size_t intersection(const Mask& a, const Mask& b) {
  std::size_t n = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n, ++i, ++j;
    }
  }
  return n;
}

struct AreaRange {
  double lo, hi;  // inclusive
  bool contains(double a) const { return a >= lo && a <= hi; }
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<AreaRange, 4> kRanges{{
    {0.0, kInf},                 // all
    {0.0, 32.0 * 32.0 - 1.0},    // small: area < 32^2 (areas are pixel counts)
    {32.0 * 32.0, 96.0 * 96.0},  // medium
    {96.0 * 96.0 + 1.0, kInf},   // large
}};
constexpr int kThresholds = 10;
constexpr int kRecallPoints = 101;

double iou_threshold(int t) { return 0.5 + 0.05 * t; }

struct EvalEntry {
  double score;
  bool matched;
  bool ignored;
};

// Greedy COCO matching for one image, area range and threshold.
void evaluate_image(const ImageInstances& img, const std::vector<std::size_t>& det_order,
                    const std::vector<std::vector<double>>& ious, const AreaRange& range,
                    double threshold, std::vector<EvalEntry>& out, std::size_t& positives) {
  const std::size_t ng = img.ground_truth.size();
  std::vector<int> gt_ignore(ng);
  std::vector<std::size_t> gt_order(ng);
  std::iota(gt_order.begin(), gt_order.end(), 0);
  for (std::size_t g = 0; g < ng; ++g) {
    gt_ignore[g] = !range.contains(static_cast<double>(img.ground_truth[g].size()));
  }
  std::stable_sort(gt_order.begin(), gt_order.end(),
                   [&](std::size_t a, std::size_t b) { return gt_ignore[a] < gt_ignore[b]; });
  for (std::size_t g = 0; g < ng; ++g) positives += gt_ignore[g] == 0;

  std::vector<bool> gt_matched(ng, false);
  for (std::size_t d : det_order) {
    double best_iou = std::min(threshold, 1.0 - 1e-10);
    long best = -1;
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const std::size_t g = gt_order[gi];
      if (gt_matched[g]) continue;
      if (best > -1 && gt_ignore[static_cast<std::size_t>(best)] == 0 && gt_ignore[g] == 1) break;
      if (ious[d][g] < best_iou) continue;
      best_iou = ious[d][g];
      best = static_cast<long>(g);
    }
    EvalEntry e{img.predictions[d].score, false, false};
    if (best > -1) {
      gt_matched[static_cast<std::size_t>(best)] = true;
      e.matched = true;
      e.ignored = gt_ignore[static_cast<std::size_t>(best)] != 0;
    } else {
      e.ignored = !range.contains(static_cast<double>(img.predictions[d].mask.size()));
    }
    out.push_back(e);
  }
}

double average_precision(std::vector<EvalEntry> entries, std::size_t positives) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const EvalEntry& a, const EvalEntry& b) { return a.score > b.score; });
  std::vector<double> recall, precision;
  double tp = 0.0, fp = 0.0;
  for (const EvalEntry& e : entries) {
    if (e.ignored) continue;
    (e.matched ? tp : fp) += 1.0;
    recall.push_back(tp / static_cast<double>(positives));
    precision.push_back(tp / (tp + fp + std::numeric_limits<double>::epsilon()));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int r = 0; r < kRecallPoints; ++r) {
    const double target = static_cast<double>(r) / (kRecallPoints - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), target);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / kRecallPoints;
}

}  // namespace

double best_dice(const LabelMap& a, const LabelMap& b, Overlap overlap) {
  const Contingency c = contingency(a, b);
  if (c.size_a.empty()) return 0.0;
  std::map<InstanceId, double> best;
  for (const auto& [ids, inter] : c.overlap) {
    const double s = overlap_score(inter, c.size_a.at(ids.first), c.size_b.at(ids.second), overlap);
    double& v = best[ids.first];
    v = std::max(v, s);
  }
  double total = 0.0;
  for (const auto& [id, size] : c.size_a) {
    auto it = best.find(id);
    if (it != best.end()) total += it->second;
  }
  return total / static_cast<double>(c.size_a.size());
}

double sbd(const LabelMap& pred, const LabelMap& gt, Overlap overlap) {
  if (pred.instance_count() == 0 && gt.instance_count() == 0) {
    if (pred.frame() != gt.frame()) throw DomainError("label maps have different frames");
    return 1.0;
  }
  return std::min(best_dice(pred, gt, overlap), best_dice(gt, pred, overlap));
}

std::size_t abs_dic(const LabelMap& pred, const LabelMap& gt) {
  const std::size_t a = pred.instance_count(), b = gt.instance_count();
  return a > b ? a - b : b - a;
}

std::vector<Mask> masks_from_labels(const LabelMap& map) {
  std::map<InstanceId, Mask> by_id;
  auto ids = map.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i]) by_id[ids[i]].push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<Mask> out;
  for (auto& [id, m] : by_id) out.push_back(std::move(m));
  return out;
}

ImageInstances instances_from_labels(const LabelMap& pred, std::span<const double> scores,
                                     const LabelMap& gt) {
  if (pred.frame() != gt.frame()) throw DomainError("label maps have different frames");
  ImageInstances out;
  std::map<InstanceId, Mask> by_id;
  auto ids = pred.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i]) by_id[ids[i]].push_back(static_cast<std::uint32_t>(i));
  }
  for (auto& [id, m] : by_id) {
    const double s = id - 1 < scores.size() ? scores[id - 1] : 1.0;
    out.predictions.push_back({std::move(m), s});
  }
  out.ground_truth = masks_from_labels(gt);
  return out;
}

ApScores coco_ap(std::span<const ImageInstances> images, const CocoOptions& options) {
  // Per image: detection order (score desc, truncated) and IoU matrix.
  std::vector<std::vector<std::size_t>> orders(images.size());
  std::vector<std::vector<std::vector<double>>> ious(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageInstances& img = images[i];
    auto& order = orders[i];
    order.resize(img.predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return img.predictions[a].score > img.predictions[b].score;
    });
    if (order.size() > options.max_detections) order.resize(options.max_detections);
    ious[i].assign(img.predictions.size(), std::vector<double>(img.ground_truth.size(), 0.0));
    for (std::size_t d : order) {
      for (std::size_t g = 0; g < img.ground_truth.size(); ++g) {
        const auto& pm = img.predictions[d].mask;
        const auto& gm = img.ground_truth[g];
        const std::size_t inter = intersection(pm, gm);
        const std::size_t uni = pm.size() + gm.size() - inter;
        ious[i][d][g] = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
      }
    }
  }

  std::array<std::array<double, kThresholds>, kRanges.size()> table{};
  for (std::size_t r = 0; r < kRanges.size(); ++r) {
    for (int t = 0; t < kThresholds; ++t) {
      std::vector<EvalEntry> entries;
      std::size_t positives = 0;
      for (std::size_t i = 0; i < images.size(); ++i) {
        evaluate_image(images[i], orders[i], ious[i], kRanges[r], iou_threshold(t), entries,
                       positives);
      }
      table[r][t] = positives == 0 ? -1.0 : average_precision(std::move(entries), positives);
    }
  }
  auto mean_valid = [](std::span<const double> v) {
    double s = 0.0;
    int n = 0;
    for (double x : v) {
      if (x > -1.0) s += x, ++n;
    }
    return n ? s / n : -1.0;
  };
  ApScores out;
  out.ap = mean_valid(table[0]);
  out.ap50 = table[0][0];
  out.ap75 = table[0][5];
  out.ap_s = mean_valid(table[1]);
  out.ap_m = mean_valid(table[2]);
  out.ap_l = mean_valid(table[3]);
  return out;
}

ImageScore score_image(const LabelMap& pred, const LabelMap& gt, const EvalOptions& options) {
  ImageScore s;
  s.pred_count = pred.instance_count();
  s.gt_count = gt.instance_count();
  s.dic = abs_dic(pred, gt);
  if (options.crop_w > 0 && options.crop_h > 0) {
    double total = 0.0;
    int crops = 0;
    for (int y = 0; y < gt.height(); y += options.crop_h) {
      for (int x = 0; x < gt.width(); x += options.crop_w) {
        const LabelMap p = crop(pred, x, y, options.crop_w, options.crop_h);
        const LabelMap g = crop(gt, x, y, options.crop_w, options.crop_h);
        if (p.instance_count() == 0 && g.instance_count() == 0) continue;
        total += sbd(p, g, options.overlap);
        ++crops;
      }
    }
    s.sbd = crops ? total / crops : 1.0;
  } else {
    s.sbd = sbd(pred, gt, options.overlap);
  }
  return s;
}

SegScore score_dataset(std::span<const LabelMap> preds,
                       std::span<const std::vector<double>> scores,
                       std::span<const LabelMap> gts, const EvalOptions& options) {
  if (preds.size() != gts.size()) throw DomainError("prediction and ground truth counts differ");
  SegScore out;
  std::vector<ImageInstances> instances;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const ImageScore s = score_image(preds[i], gts[i], options);
    out.sbd += s.sbd;
    out.dic += static_cast<double>(s.dic);
    const std::span<const double> sc =
        i < scores.size() ? std::span<const double>(scores[i]) : std::span<const double>();
    instances.push_back(instances_from_labels(preds[i], sc, gts[i]));
  }
  if (!preds.empty()) {
    out.sbd /= static_cast<double>(preds.size());
    out.dic /= static_cast<double>(preds.size());
  }
  const ApScores ap = coco_ap(instances);
  out.ap = ap.ap;
  out.ap50 = ap.ap50;
  out.ap75 = ap.ap75;
  out.ap_s = ap.ap_s;
  out.ap_m = ap.ap_m;
  out.ap_l = ap.ap_l;
  return out;
}

}  // namespace hseg
