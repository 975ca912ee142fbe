#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hseg/autodiff.hpp"
#include "hseg/data.hpp"
#include "hseg/guides.hpp"
#include "hseg/tensor.hpp"

namespace hseg {

// Positional maps concatenated before the first convolution of each decoder
// level.
enum class GuideInput { kNone, kSine, kCoord };

struct SinUNetConfig {
  int depth = 3;
  int base_channels = 16;
  int embedding_dim = 12;
  int input_channels = 1;
  bool sinconv = true;
  bool coordconv = false;  // replaces the guide maps with {x/W, y/H}
  int tile_w = 128;
  int tile_h = 128;

  GuideInput guide_input() const {
    if (coordconv) return GuideInput::kCoord;
    return sinconv ? GuideInput::kSine : GuideInput::kNone;
  }
  Frame tile() const { return {tile_w, tile_h}; }
  void validate() const;

  bool operator==(const SinUNetConfig&) const = default;
};

// Channel i at (x, y) holds guide i evaluated at (x * delta, y * delta) in
// the tile frame.
template <typename T>
Tensor<T> guide_maps(const GuideSet& guides, std::size_t h, std::size_t w, int delta,
                     Frame tile);

// Two channels: x * delta / W and y * delta / H.
template <typename T>
Tensor<T> coord_maps(std::size_t h, std::size_t w, int delta, Frame tile);

// Convolution over the channel concatenation of `input` and the guide maps.
template <typename T>
ad::Var sinconv(ad::Tape<T>& tape, ad::Var input, const GuideSet& guides, int delta,
                Frame tile, ad::Var weights, ad::Var bias);

struct TargetField {
  Tensor<float> embedding;  // (N, H, W); zero on background
  Tensor<float> fg;         // (H, W) with 0/1 entries
};

TargetField build_targets(const LabelMap& label, const GuideSet& guides);

template <typename T>
class SinUNet {
 public:
  SinUNet(SinUNetConfig config, GuideSet guides, std::uint64_t seed);

  const SinUNetConfig& config() const { return config_; }
  const GuideSet& guides() const { return guides_; }

  std::vector<Tensor<T>>& parameters() { return params_; }
  const std::vector<Tensor<T>>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return names_; }
  std::size_t parameter_count() const;

  struct Output {
    ad::Var embedding;  // (N, H, W)
    ad::Var fg_logits;  // (1, H, W)
    std::vector<ad::Var> params;  // tape leaves, same order as parameters()
  };

  // The input must be (input_channels, tile_h, tile_w).
  Output forward(ad::Tape<T>& tape, const Tensor<T>& input) const;

  // Network input tensor for an image: channels converted, values shifted by -0.5.
  static Tensor<T> prepare_input(const Image& image, int channels);

 private:
  std::size_t add_param(std::string name, Shape shape);
  ad::Var conv(ad::Tape<T>& tape, const Output& out, std::size_t index, ad::Var x) const;

  SinUNetConfig config_;
  GuideSet guides_;
  std::vector<std::string> names_;
  std::vector<Tensor<T>> params_;
  std::vector<Tensor<T>> level_maps_;  // positional maps per decoder level
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  double learning_rate = 1e-4;
  double fg_weight = 1.0;  // weight of the foreground logistic loss
  bool full_mask = false;  // embedding loss over all pixels instead of fg
  AugmentConfig augment;
};

struct LossRecord {
  int epoch = 0;
  double l1 = 0.0;
  double bce = 0.0;
  double total = 0.0;
};

struct Checkpoint {
  SinUNetConfig config;
  TrainConfig train;
  std::uint64_t seed = 0;
  int epoch = 0;
  std::array<std::uint8_t, 32> guide_hash{};
  std::vector<std::string> names;
  std::vector<Tensor<float>> params;
  ad::AdamState<float> adam;

  bool operator==(const Checkpoint& o) const;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossRecord> curve;
};

using EpochCallback = std::function<void(const LossRecord&)>;

TrainResult train(const std::vector<Sample>& dataset, const GuideSet& guides,
                  const SinUNetConfig& config, const TrainConfig& train_config,
                  std::uint64_t seed, const EpochCallback& on_epoch = {});

struct Prediction {
  Tensor<float> embedding;  // (N, H, W)
  Tensor<float> fg_prob;    // (H, W)
};

// Checkpoint and guides must match (hash and embedding size).
Prediction infer(const Image& image, const Checkpoint& checkpoint, const GuideSet& guides);

SinUNet<float> network_from_checkpoint(const Checkpoint& checkpoint, const GuideSet& guides);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string loss_curve_csv(const std::vector<LossRecord>& curve);

std::string to_json(const SinUNetConfig& config);
SinUNetConfig network_config_from_json(std::string_view text);

}  // namespace hseg
