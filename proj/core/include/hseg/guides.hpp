#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hseg/label_map.hpp"

namespace hseg {

// One harmonic guide: sin(freq_x * x / W + freq_y * y / H + phase).
struct GuideParams {
  double freq_x = 0.0;
  double freq_y = 0.0;
  double phase = 0.0;

  bool operator==(const GuideParams&) const = default;
};

class GuideSet {
 public:
  GuideSet() = default;
  GuideSet(std::vector<GuideParams> params, double margin, std::uint64_t seed = 0);

  std::size_t n() const { return params_.size(); }
  double margin() const { return margin_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const GuideParams> params() const { return params_; }
  std::span<GuideParams> params() { return params_; }
  const GuideParams& operator[](std::size_t i) const { return params_[i]; }

  bool operator==(const GuideSet&) const = default;

 private:
  std::vector<GuideParams> params_;
  double margin_ = 0.5;
  std::uint64_t seed_ = 0;
};

using ObjectEmbedding = std::vector<double>;

// A non-empty set of pixels inside a W x H frame.
struct PixelSet {
  std::vector<Pixel> pixels;
  Frame frame;
};

double eval_guide(const GuideParams& g, double x, double y, Frame frame);

// Mean of each guide over the pixels of `set`.
ObjectEmbedding guided_embedding(const PixelSet& set, const GuideSet& guides);

double l1_distance(std::span<const double> a, std::span<const double> b);

// max(0, margin - |a - b|_1)
double pair_hinge(std::span<const double> a, std::span<const double> b, double margin);

struct HingeGradient {
  double loss = 0.0;
  std::vector<GuideParams> d;  // d loss / d params, same layout as the guide set
};

// Gradient of pair_hinge(e(a), e(b), margin) w.r.t. all guide parameters.
// Subgradient convention: sign(0) = 0.
HingeGradient hinge_gradient(const PixelSet& a, const PixelSet& b,
                             const GuideSet& guides);

struct GuideFitConfig {
  int n = 12;
  double margin = 0.5;
  double learning_rate = 0.1;
  int batch_pairs = 64;
  int max_iters = 20000;
  int sweep_every = 100;  // iterations between exhaustive loss sweeps
  double init_freq_max = 50.0;
};

struct FitTracePoint {
  int iteration = 0;
  double batch_loss_avg = 0.0;  // exponential moving average of minibatch loss
  double sweep_loss = 0.0;      // exhaustive loss of the current parameters
  double best_sweep_loss = 0.0; // loss of the returned parameters so far
};

struct FitResult {
  GuideSet guides;  // parameters with the lowest sweep loss seen
  std::vector<FitTracePoint> trace;
  bool converged = false;  // best sweep loss is exactly zero
  int iterations = 0;
};

// Stochastic minimization of the pairwise hinge loss over intra-image
// instance pairs. Deterministic for a given seed.
FitResult fit_guides(std::span<const LabelMap> train, const GuideFitConfig& config,
                     std::uint64_t seed);

// Exhaustive loss: sum over images of the mean hinge over all instance pairs.
double sweep_loss(std::span<const LabelMap> maps, const GuideSet& guides);

struct Collision {
  std::size_t image = 0;
  InstanceId id_a = 0;
  InstanceId id_b = 0;
  double distance = 0.0;
};

// All intra-image pairs closer than the margin, ascending by distance.
std::vector<Collision> collision_report(std::span<const LabelMap> maps,
                                        const GuideSet& guides);

// Frequencies uniform in (freq_lo, freq_hi), phases uniform in [0, 2pi).
GuideSet sample_guides(int n, double margin, double freq_lo, double freq_hi,
                       std::uint64_t seed);

std::string to_json(const GuideSet& guides);
GuideSet guides_from_json(std::string_view text);
void save_guides(const GuideSet& guides, const std::filesystem::path& path);
GuideSet load_guides(const std::filesystem::path& path);

// SHA-256 of the canonical JSON serialization.
std::array<std::uint8_t, 32> guide_hash(const GuideSet& guides);

}  // namespace hseg
