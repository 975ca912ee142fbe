#include <random>
#include <set>

#include "doctest.h"
#include "hseg/error.hpp"
#include "hseg/metrics.hpp"
#include "oracles/oracles.hpp"

using namespace hseg;

namespace {

LabelMap strip(int w, int h, std::initializer_list<std::pair<int, InstanceId>> runs) {
  LabelMap m(w, h);
  int x = 0;
  for (auto [len, id] : runs) {
    for (int i = 0; i < len; ++i, ++x)
      for (int y = 0; y < h; ++y) m(x, y) = id;
  }
  return m;
}

}  // namespace

TEST_CASE("best_dice and sbd examples") {
  const LabelMap a = strip(8, 2, {{4, 1}, {4, 2}});
  const LabelMap u = strip(8, 2, {{8, 1}});
  CHECK(best_dice(a, a) == 1.0);
  CHECK(best_dice(a, LabelMap(8, 2)) == 0.0);
  CHECK(best_dice(LabelMap(8, 2), a) == 0.0);
  CHECK(best_dice(a, u) == doctest::Approx(2.0 / 3.0));
  CHECK(sbd(a, u) == doctest::Approx(2.0 / 3.0));
  CHECK(sbd(u, a) == doctest::Approx(2.0 / 3.0));
  CHECK(sbd(LabelMap(3, 3), LabelMap(3, 3)) == 1.0);
  CHECK(sbd(a, u, Overlap::kIoU) == doctest::Approx(0.5));
  CHECK_THROWS_AS(sbd(a, LabelMap(4, 4)), DomainError);
}

TEST_CASE("dic examples") {
  const LabelMap five = strip(5, 1, {{1, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}});
  const LabelMap three = strip(5, 1, {{1, 1}, {1, 2}, {1, 3}});
  CHECK(abs_dic(five, three) == 2);
  CHECK(abs_dic(three, five) == 2);
  CHECK(abs_dic(five, five) == 0);

  std::vector<LabelMap> preds{three, five, strip(5, 1, {{1, 1}})};
  std::vector<LabelMap> gts{three, strip(5, 1, {{1, 1}, {1, 2}, {1, 3}, {1, 4}}), three};
  const SegScore s = score_dataset(preds, {}, gts);
  CHECK(s.dic == doctest::Approx(1.0));
}

TEST_CASE("sbd and dic agree with brute force on random maps") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 16), h = 1 + static_cast<int>(rng() % 16);
    const LabelMap p = oracle::random_map(rng, w, h, 6), g = oracle::random_map(rng, w, h, 6);
    CHECK(sbd(p, g) == oracle::sbd(p, g));
    CHECK(sbd(p, g, Overlap::kIoU) == oracle::sbd(p, g, true));
    CHECK(sbd(p, g) == sbd(g, p));
    CHECK(best_dice(p, g) == oracle::best_dice(p, g));
    const long np = static_cast<long>(p.instance_ids().size()),
               ng = static_cast<long>(g.instance_ids().size());
    CHECK(abs_dic(p, g) == static_cast<std::size_t>(std::labs(np - ng)));
    // relabeling invariance
    LabelMap q = p;
    for (InstanceId& id : q.ids()) id = id ? 100 - id : 0;
    CHECK(sbd(q, g) == doctest::Approx(sbd(p, g)).epsilon(1e-12));  // summation order may differ
  }
}

TEST_CASE("coco_ap examples") {
  const Mask gt{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  ImageInstances exact{{{gt, 0.9}}, {gt}};
  const ApScores e = coco_ap(std::span<const ImageInstances>(&exact, 1));
  CHECK(e.ap == doctest::Approx(1.0));
  CHECK(e.ap50 == doctest::Approx(1.0));
  CHECK(e.ap75 == doctest::Approx(1.0));
  CHECK(e.ap_s == doctest::Approx(1.0));
  CHECK(e.ap_m == -1.0);
  CHECK(e.ap_l == -1.0);

  // IoU 6 / 10 = 0.6
  ImageInstances partial{{{{0, 1, 2, 3, 4, 5}, 0.8}}, {gt}};
  const ApScores p = coco_ap(std::span<const ImageInstances>(&partial, 1));
  CHECK(p.ap50 == doctest::Approx(1.0).epsilon(1e-12));  // precision carries a machine-epsilon guard
  CHECK(p.ap75 == 0.0);

  // IoU 6 / 11: only the loosest threshold matches.
  ImageInstances loose{{{{0, 1, 2, 3, 4, 5, 10}, 0.8}}, {gt}};
  CHECK(coco_ap(std::span<const ImageInstances>(&loose, 1)).ap == doctest::Approx(0.1));

  ImageInstances none{{}, {gt}};
  CHECK(coco_ap(std::span<const ImageInstances>(&none, 1)).ap == 0.0);
}

TEST_CASE("coco_ap greedy rule on duplicates") {
  // Three ground truths; a duplicate of the first comes second by score.
  const Mask g1{0, 1, 2, 3}, g2{10, 11, 12, 13}, g3{20, 21, 22, 23};
  ImageInstances img{{{g1, 0.9}, {g1, 0.8}, {g2, 0.7}, {g3, 0.6}}, {g1, g2, g3}};
  const ApScores s = coco_ap(std::span<const ImageInstances>(&img, 1));
  // Precision/recall: (1, 1/3), (1/2, 1/3), (2/3, 2/3), (3/4, 1).
  // Envelope: 1 for r <= 1/3, 3/4 above. 34 recall points at 1, 67 at 0.75.
  const double want = (34 * 1.0 + 67 * 0.75) / 101.0;
  CHECK(s.ap50 == doctest::Approx(want).epsilon(1e-12));
  CHECK(s.ap == doctest::Approx(want).epsilon(1e-12));

  std::vector<oracle::ApImage> ref(1);
  for (const ScoredMask& d : img.predictions) ref[0].dets.push_back({{d.mask.begin(), d.mask.end()}, d.score});
  for (const Mask& g : img.ground_truth) ref[0].gts.push_back({g.begin(), g.end()});
  CHECK(std::abs(s.ap - oracle::ap_mean(ref)) <= 1e-12);
}

TEST_CASE("coco_ap agrees with brute force and is invariant to monotone score maps") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ImageInstances> images, rescaled;
    std::vector<oracle::ApImage> ref;
    const int n_images = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n_images; ++i) {
      const int w = 1 + static_cast<int>(rng() % 16), h = 1 + static_cast<int>(rng() % 16);
      const LabelMap p = oracle::random_map(rng, w, h, 6), g = oracle::random_map(rng, w, h, 6);
      std::vector<double> sc(6), sc2(6);
      for (std::size_t k = 0; k < 6; ++k) sc[k] = score(rng), sc2[k] = 3.0 * sc[k] * sc[k] + 1.0;
      images.push_back(instances_from_labels(p, sc, g));
      rescaled.push_back(instances_from_labels(p, sc2, g));
      oracle::ApImage r;
      for (InstanceId id : p.instance_ids()) {
        oracle::Det d{{}, sc[id - 1]};
        for (int k = 0; k < w * h; ++k)
          if (p.ids()[static_cast<std::size_t>(k)] == id) d.pixels.insert(k);
        r.dets.push_back(d);
      }
      for (InstanceId id : g.instance_ids()) {
        std::set<int> m;
        for (int k = 0; k < w * h; ++k)
          if (g.ids()[static_cast<std::size_t>(k)] == id) m.insert(k);
        r.gts.push_back(m);
      }
      ref.push_back(r);
    }
    const ApScores a = coco_ap(images), b = coco_ap(rescaled);
    const double want = oracle::ap_mean(ref);
    if (want < 0) {
      CHECK(a.ap == -1.0);
      continue;
    }
    CHECK(std::abs(a.ap - want) <= 1e-9);
    CHECK(std::abs(a.ap50 - oracle::ap_at(ref, 0.5)) <= 1e-9);
    CHECK(std::abs(a.ap75 - oracle::ap_at(ref, 0.75)) <= 1e-9);
    CHECK(std::abs(a.ap_s - want) <= 1e-9);  // every mask is below 32^2 pixels
    CHECK(a.ap == b.ap);
    CHECK(a.ap <= a.ap50);
  }
}

TEST_CASE("area buckets ignore out-of-range ground truth") {
  Mask big(40 * 40), small{0, 1, 2};
  for (std::uint32_t i = 0; i < big.size(); ++i) big[i] = 100 + i;
  ImageInstances img{{{big, 0.9}}, {big, small}};
  const ApScores s = coco_ap(std::span<const ImageInstances>(&img, 1));
  CHECK(s.ap_m == doctest::Approx(1.0));
  CHECK(s.ap_s == 0.0);
  CHECK(s.ap_l == -1.0);
}

TEST_CASE("per-crop scoring skips crops empty in both maps") {
  LabelMap gt(8, 4), pred(8, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 2; ++x) gt(x, y) = 1, pred(x, y) = 3;
  EvalOptions o;
  CHECK(score_image(pred, gt, o).sbd == 1.0);
  o.crop_w = 4;
  o.crop_h = 4;
  CHECK(score_image(pred, gt, o).sbd == 1.0);
  pred(6, 0) = 5;
  CHECK(score_image(pred, gt, o).sbd == doctest::Approx(0.5));
}
