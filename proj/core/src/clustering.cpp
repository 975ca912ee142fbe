#include "hseg/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hseg/error.hpp"

namespace hseg {

namespace {

double distance(const double* a, const double* b, std::size_t dim, Metric metric) {
  double d = 0.0;
  if (metric == Metric::kL1) {
    for (std::size_t i = 0; i < dim; ++i) d += std::abs(a[i] - b[i]);
    return d;
  }
  for (std::size_t i = 0; i < dim; ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return std::sqrt(d);
}

std::size_t nearest(const double* p, const std::vector<std::vector<double>>& modes,
                    std::size_t dim, Metric metric, double* best_distance = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double d = distance(p, modes[m].data(), dim, metric);
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  if (best_distance) *best_distance = best_d;
  return best;
}

// Mean shift on points already in canonical order.
std::vector<std::vector<double>> shift_modes(const std::vector<double>& pts,
                                             std::size_t count, std::size_t dim,
                                             const MeanShiftOptions& o) {
  std::vector<std::vector<double>> converged(count, std::vector<double>(dim));
  std::vector<double> x(dim), mean(dim);
  for (std::size_t s = 0; s < count; ++s) {
    std::copy_n(pts.begin() + static_cast<std::ptrdiff_t>(s * dim), dim, x.begin());
    for (int it = 0; it < o.max_iter; ++it) {
      std::fill(mean.begin(), mean.end(), 0.0);
      std::size_t n = 0;
      for (std::size_t p = 0; p < count; ++p) {
        const double* q = pts.data() + p * dim;
        if (distance(x.data(), q, dim, o.metric) < o.bandwidth) {
          for (std::size_t i = 0; i < dim; ++i) mean[i] += q[i];
          ++n;
        }
      }
      if (n == 0) break;
      double shift2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        mean[i] /= static_cast<double>(n);
        const double t = mean[i] - x[i];
        shift2 += t * t;
      }
      x.swap(mean);
      if (std::sqrt(shift2) < o.tol) break;
    }
    converged[s] = x;
  }

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return converged[a][0] < converged[b][0];
  });
  std::vector<std::vector<double>> modes;
  for (std::size_t s : order) {
    bool merged = false;
    for (const auto& m : modes) {
      if (distance(converged[s].data(), m.data(), dim, o.metric) <= 0.5 * o.bandwidth) {
        merged = true;
        break;
      }
    }
    if (!merged) modes.push_back(converged[s]);
  }
  return modes;
}

}  // namespace

MeanShiftResult mean_shift(std::span<const double> points, std::size_t dim,
                           const MeanShiftOptions& options) {
  if (dim == 0 || points.empty() || points.size() % dim != 0) {
    throw DomainError("mean_shift: needs a non-empty count x dim point array");
  }
  if (!(options.bandwidth > 0.0)) throw DomainError("mean_shift: bandwidth must be positive");
  const std::size_t count = points.size() / dim;

  // Canonical (lexicographic) order makes the result independent of input order.
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(points.begin() + a * dim, points.begin() + (a + 1) * dim,
                                        points.begin() + b * dim, points.begin() + (b + 1) * dim);
  });
  std::vector<double> sorted(points.size());
  for (std::size_t i = 0; i < count; ++i) {
    std::copy_n(points.begin() + perm[i] * dim, dim, sorted.begin() + i * dim);
  }

  MeanShiftResult result;
  result.dim = dim;
  result.modes = shift_modes(sorted, count, dim, options);
  result.assignment.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    result.assignment[i] = nearest(points.data() + i * dim, result.modes, dim, options.metric);
  }
  return result;
}

ClusterResult extract_instances(const Tensor<float>& embedding, const Tensor<float>& fg,
                                const ClusterOptions& options) {
  if (embedding.rank() != 3 || fg.rank() != 2 || fg.extent(0) != embedding.extent(1) ||
      fg.extent(1) != embedding.extent(2)) {
    throw DomainError("extract_instances: embedding must be (N,H,W) and fg (H,W)");
  }
  const std::size_t dim = embedding.extent(0);
  const std::size_t h = fg.extent(0), w = fg.extent(1), plane = h * w;
  ClusterResult result;
  result.labels = LabelMap(static_cast<int>(w), static_cast<int>(h));

  std::vector<std::size_t> pixels;
  for (std::size_t i = 0; i < plane; ++i) {
    if (fg[i] != 0.0f) pixels.push_back(i);
  }
  if (pixels.empty()) return result;

  std::vector<double> vec(pixels.size() * dim);
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    for (std::size_t c = 0; c < dim; ++c) vec[k * dim + c] = embedding[c * plane + pixels[k]];
  }
  auto point = [&](std::size_t k) { return vec.data() + k * dim; };

  const std::size_t max_seeds = std::max<std::size_t>(1, options.max_seeds);
  auto run_on = [&](const std::vector<std::size_t>& subset) {
    const std::size_t stride = (subset.size() + max_seeds - 1) / max_seeds;
    std::vector<double> seeds;
    for (std::size_t i = 0; i < subset.size(); i += stride) {
      seeds.insert(seeds.end(), point(subset[i]), point(subset[i]) + dim);
    }
    return mean_shift(seeds, dim, options.shift).modes;
  };

  std::vector<std::size_t> all(pixels.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::vector<double>> modes = run_on(all);

  // Pixels far from every mode were not represented among the seeds.
  std::vector<std::size_t> assign(pixels.size());
  for (int round = 0; round < 4; ++round) {
    std::vector<std::size_t> orphans;
    for (std::size_t k = 0; k < pixels.size(); ++k) {
      double d = 0.0;
      assign[k] = nearest(point(k), modes, dim, options.shift.metric, &d);
      if (d >= options.shift.bandwidth) orphans.push_back(k);
    }
    if (orphans.empty() || round == 3) break;
    bool added = false;
    for (auto& m : run_on(orphans)) {
      double d = 0.0;
      nearest(m.data(), modes, dim, options.shift.metric, &d);
      if (d > 0.5 * options.shift.bandwidth) {
        modes.push_back(std::move(m));
        added = true;
      }
    }
    if (!added) break;
  }

  std::vector<std::size_t> size(modes.size(), 0);
  for (std::size_t a : assign) ++size[a];

  // Ids in raster order of each cluster's first pixel.
  std::vector<InstanceId> id_of(modes.size(), 0);
  InstanceId next = 1;
  auto ids = result.labels.ids();
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    const std::size_t m = assign[k];
    if (size[m] < options.min_size) continue;
    if (id_of[m] == 0) {
      id_of[m] = next++;
      result.modes.push_back(modes[m]);
    }
    ids[pixels[k]] = id_of[m];
  }

  std::vector<double> deviation(result.modes.size(), 0.0);
  std::vector<std::size_t> members(result.modes.size(), 0);
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    const InstanceId id = ids[pixels[k]];
    if (id == 0) continue;
    deviation[id - 1] += distance(point(k), result.modes[id - 1].data(), dim, Metric::kL1);
    ++members[id - 1];
  }
  for (std::size_t i = 0; i < result.modes.size(); ++i) {
    result.scores.push_back(1.0 / (1.0 + deviation[i] / static_cast<double>(members[i])));
  }
  return result;
}

}  // namespace hseg
