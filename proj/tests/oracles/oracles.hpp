#pragma once

// Slow, obviously-correct reference implementations used by the unit and
// acceptance tests. None of them share code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "hseg/label_map.hpp"
#include "hseg/tensor.hpp"

namespace oracle {

// Direct cross-correlation with zero padding.
inline hseg::Tensor<double> conv2d(const hseg::Tensor<double>& x, const hseg::Tensor<double>& w,
                                   const hseg::Tensor<double>& b, int stride, int pad) {
  const int ci = static_cast<int>(x.extent(0)), h = static_cast<int>(x.extent(1)),
            wd = static_cast<int>(x.extent(2));
  const int co = static_cast<int>(w.extent(0)), k = static_cast<int>(w.extent(2));
  const int oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  hseg::Tensor<double> out({static_cast<std::size_t>(co), static_cast<std::size_t>(oh),
                            static_cast<std::size_t>(ow)});
  for (int o = 0; o < co; ++o)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        double acc = b[o];
        for (int c = 0; c < ci; ++c)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int iy = y * stride + ky - pad, ix = xx * stride + kx - pad;
              if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
              acc += w[((static_cast<std::size_t>(o) * ci + c) * k + ky) * k + kx] *
                     x.at(c, iy, ix);
            }
        out.at(o, y, xx) = acc;
      }
  return out;
}

// Central differences of a scalar function over every entry of `values`.
inline std::vector<double> numeric_gradient(std::vector<double>& values,
                                            const std::function<double()>& f, double step) {
  std::vector<double> g(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double keep = values[i];
    values[i] = keep + step;
    const double up = f();
    values[i] = keep - step;
    const double down = f();
    values[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-12) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

// Best Dice by scanning the whole raster once per instance pair.
inline double best_dice(const hseg::LabelMap& a, const hseg::LabelMap& b, bool iou = false) {
  const auto ia = a.instance_ids(), ib = b.instance_ids();
  if (ia.empty()) return 0.0;
  double total = 0.0;
  for (auto u : ia) {
    double best = 0.0;
    for (auto v : ib) {
      long inter = 0, su = 0, sv = 0;
      for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) {
          const bool in_u = a(x, y) == u, in_v = b(x, y) == v;
          su += in_u;
          sv += in_v;
          inter += in_u && in_v;
        }
      const double s = iou ? double(inter) / double(su + sv - inter)
                           : 2.0 * double(inter) / double(su + sv);
      best = std::max(best, s);
    }
    total += best;
  }
  return total / double(ia.size());
}

inline double sbd(const hseg::LabelMap& p, const hseg::LabelMap& g, bool iou = false) {
  if (p.instance_ids().empty() && g.instance_ids().empty()) return 1.0;
  return std::min(best_dice(p, g, iou), best_dice(g, p, iou));
}

struct Det {
  std::set<int> pixels;
  double score;
};

struct ApImage {
  std::vector<Det> dets;
  std::vector<std::set<int>> gts;
};

inline double set_iou(const std::set<int>& a, const std::set<int>& b) {
  std::size_t inter = 0;
  for (int p : a) inter += b.count(p);
  return double(inter) / double(a.size() + b.size() - inter);
}

// AP at one IoU threshold with every instance in range: greedy matching per
// image in descending score, then interpolated precision taken as the best
// precision at any recall >= r, averaged over r = 0, 0.01, ..., 1.
inline double ap_at(const std::vector<ApImage>& images, double threshold) {
  struct Hit {
    double score;
    int image;
    int rank;
    bool tp;
  };
  std::vector<Hit> hits;
  std::size_t positives = 0;
  for (int i = 0; i < int(images.size()); ++i) {
    const ApImage& im = images[i];
    positives += im.gts.size();
    std::vector<int> order(im.dets.size());
    for (int d = 0; d < int(order.size()); ++d) order[d] = d;
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return im.dets[x].score > im.dets[y].score; });
    std::vector<bool> used(im.gts.size(), false);
    for (int r = 0; r < int(order.size()); ++r) {
      const Det& d = im.dets[order[r]];
      int best = -1;
      double best_iou = std::min(threshold, 1.0 - 1e-10);
      for (int g = 0; g < int(im.gts.size()); ++g) {
        if (used[g]) continue;
        const double v = set_iou(d.pixels, im.gts[g]);
        if (v >= best_iou) best_iou = v, best = g;
      }
      if (best >= 0) used[best] = true;
      hits.push_back({d.score, i, r, best >= 0});
    }
  }
  if (positives == 0) return -1.0;
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) {
    if (x.score != y.score) return x.score > y.score;
    return x.image != y.image ? x.image < y.image : x.rank < y.rank;
  });
  std::vector<double> rc, pr;
  double tp = 0, fp = 0;
  for (const Hit& h : hits) {
    (h.tp ? tp : fp) += 1;
    rc.push_back(tp / double(positives));
    pr.push_back(tp / (tp + fp + 2.220446049250313e-16));
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double best = 0.0;
    for (std::size_t j = 0; j < rc.size(); ++j) {
      if (rc[j] >= r) best = std::max(best, pr[j]);
    }
    sum += best;
  }
  return sum / 101.0;
}

inline double ap_mean(const std::vector<ApImage>& images) {
  double s = 0;
  for (int t = 0; t < 10; ++t) s += ap_at(images, 0.5 + 0.05 * t);
  return s / 10.0;
}

// Random label map with up to `max_ids` ids drawn from a patchwork of rectangles.
inline hseg::LabelMap random_map(std::mt19937_64& rng, int w, int h, int max_ids) {
  hseg::LabelMap m(w, h);
  std::uniform_int_distribution<int> n_rect(0, max_ids), xs(0, w - 1), ys(0, h - 1);
  std::uniform_int_distribution<hseg::InstanceId> id(1, static_cast<hseg::InstanceId>(max_ids));
  const int rects = n_rect(rng);
  for (int r = 0; r < rects; ++r) {
    int x0 = xs(rng), x1 = xs(rng), y0 = ys(rng), y1 = ys(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    const hseg::InstanceId v = (rng() % 5 == 0) ? 0 : id(rng);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m(x, y) = v;
  }
  return m;
}

}  // namespace oracle
