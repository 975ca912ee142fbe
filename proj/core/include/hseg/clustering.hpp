#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hseg/label_map.hpp"
#include "hseg/tensor.hpp"

namespace hseg {

enum class Metric { kEuclidean, kL1 };

struct MeanShiftOptions {
  double bandwidth = 0.5;
  double tol = 1e-4;
  int max_iter = 300;
  Metric metric = Metric::kEuclidean;
};

struct MeanShiftResult {
  std::size_t dim = 0;
  std::vector<std::vector<double>> modes;
  std::vector<std::size_t> assignment;  // point index -> mode index
};

// Flat-kernel mean shift. `points` holds count x dim values row-major. Every
// point is used as a seed; converged seeds closer than bandwidth/2 are merged
// (ascending first coordinate, then seed index), and each point is assigned to
// its nearest surviving mode.
MeanShiftResult mean_shift(std::span<const double> points, std::size_t dim,
                           const MeanShiftOptions& options);

struct ClusterOptions {
  MeanShiftOptions shift;
  std::size_t min_size = 16;
  std::size_t max_seeds = 4096;
};

struct ClusterResult {
  LabelMap labels;  // ids 1..K in raster order of first pixel, 0 background
  std::vector<std::vector<double>> modes;  // modes[k] belongs to id k + 1
  std::vector<double> scores;              // 1 / (1 + mean L1 deviation from mode)
};

// embedding is (N, H, W); fg is (H, W) with non-zero entries marking foreground.
ClusterResult extract_instances(const Tensor<float>& embedding, const Tensor<float>& fg,
                                const ClusterOptions& options);

}  // namespace hseg
