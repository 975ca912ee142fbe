#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hseg/clustering.hpp"
#include "hseg/error.hpp"
#include "hseg/guides.hpp"
#include "hseg/network.hpp"

using namespace hseg;

TEST_CASE("mean_shift examples") {
  MeanShiftOptions o;
  o.bandwidth = 0.5;
  const std::vector<double> one{0.3, -0.2};
  const MeanShiftResult r1 = mean_shift(one, 2, o);
  REQUIRE(r1.modes.size() == 1);
  CHECK(r1.modes[0] == one);

  const std::vector<double> same(12, 0.7);
  CHECK(mean_shift(same, 3, o).modes.size() == 1);

  const std::vector<double> pts{0.00, 0.01, 1.00, 1.01};
  const MeanShiftResult r = mean_shift(pts, 1, o);
  REQUIRE(r.modes.size() == 2);
  CHECK(r.modes[0][0] == doctest::Approx(0.005));
  CHECK(r.modes[1][0] == doctest::Approx(1.005));
  CHECK(r.assignment == std::vector<std::size_t>{0, 0, 1, 1});

  CHECK_THROWS_AS(mean_shift(std::vector<double>{}, 1, o), DomainError);
  CHECK_THROWS_AS(mean_shift(pts, 3, o), DomainError);
  o.bandwidth = 0.0;
  CHECK_THROWS_AS(mean_shift(pts, 1, o), DomainError);
}

TEST_CASE("mean_shift ignores input order and keeps modes apart") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.3);
  const std::size_t dim = 3;
  std::vector<double> pts;
  for (int i = 0; i < 120; ++i)
    for (std::size_t d = 0; d < dim; ++d) pts.push_back(noise(rng) + (i % 3) * 0.8);
  MeanShiftOptions o;
  o.bandwidth = 0.5;
  const MeanShiftResult a = mean_shift(pts, dim, o);

  std::vector<std::size_t> perm(120);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> shuffled;
  for (std::size_t i : perm) shuffled.insert(shuffled.end(), pts.begin() + i * dim, pts.begin() + (i + 1) * dim);
  const MeanShiftResult b = mean_shift(shuffled, dim, o);
  CHECK(a.modes == b.modes);
  for (std::size_t k = 0; k < 120; ++k) CHECK(b.assignment[k] == a.assignment[perm[k]]);

  for (std::size_t i = 0; i < a.modes.size(); ++i)
    for (std::size_t j = i + 1; j < a.modes.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) d2 += std::pow(a.modes[i][d] - a.modes[j][d], 2);
      CHECK(std::sqrt(d2) > 0.25);
    }
}

TEST_CASE("extract_instances on an empty foreground") {
  const Tensor<float> emb({4, 6, 6});
  const Tensor<float> fg({6, 6});
  const ClusterResult r = extract_instances(emb, fg, ClusterOptions{});
  CHECK(r.labels.instance_count() == 0);
  CHECK(r.modes.empty());
  CHECK_THROWS_AS(extract_instances(emb, Tensor<float>({5, 6}), ClusterOptions{}), DomainError);
}

TEST_CASE("extract_instances recovers a perfect field") {
  LabelMap gt(24, 24);
  for (int y = 2; y < 10; ++y)
    for (int x = 2; x < 10; ++x) gt(x, y) = 4;
  for (int y = 12; y < 20; ++y)
    for (int x = 5; x < 22; ++x) gt(x, y) = 9;
  for (int y = 1; y < 6; ++y)
    for (int x = 15; x < 23; ++x) gt(x, y) = 2;
  GuideFitConfig fc;
  fc.n = 6;
  const FitResult fit = fit_guides(std::span<const LabelMap>(&gt, 1), fc, 3);
  REQUIRE(fit.converged);
  const TargetField t = build_targets(gt, fit.guides);
  for (Metric m : {Metric::kL1, Metric::kEuclidean}) {
    ClusterOptions o;
    o.shift.metric = m;
    // An L1 separation of `margin` only guarantees margin / sqrt(N) in Euclidean distance.
    o.shift.bandwidth = m == Metric::kL1 ? fc.margin : fc.margin / std::sqrt(double(fc.n));
    const ClusterResult r = extract_instances(t.embedding, t.fg, o);
    CHECK(same_partition(r.labels, gt));
    CHECK(r.labels(15, 1) == 1);  // ids follow raster order of first pixels
    CHECK(r.labels(2, 2) == 2);
    CHECK(r.labels(5, 12) == 3);
    REQUIRE(r.scores.size() == 3);
    for (double s : r.scores) CHECK(s == doctest::Approx(1.0));
  }
}

TEST_CASE("extract_instances drops small clusters and scores spread") {
  Tensor<float> emb({1, 8, 8});
  Tensor<float> fg({8, 8});
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      fg[y * 8 + x] = 1.0f;
      emb[y * 8 + x] = x < 6 ? ((x + y) % 2 ? 0.1f : -0.1f) : 5.0f;
    }
  ClusterOptions o;
  o.min_size = 17;
  const ClusterResult r = extract_instances(emb, fg, o);
  CHECK(r.labels.instance_count() == 1);
  CHECK(r.labels(7, 0) == 0);
  REQUIRE(r.scores.size() == 1);
  CHECK(r.scores[0] == doctest::Approx(1.0 / 1.1));
}
