#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hseg/label_map.hpp"

namespace hseg {

enum class SynthKind { kBlobs, kRods, kWorms };

std::string to_string(SynthKind kind);
SynthKind synth_kind_from_string(const std::string& name);

struct SynthConfig {
  SynthKind kind = SynthKind::kBlobs;
  int width = 128;
  int height = 128;
  int num_images = 10;
  int count_min = 5;
  int count_max = 12;
  // Characteristic object size in pixels: blob diameter, rod length, worm
  // length. Thickness of rods and worms is derived from it.
  double size_min = 14.0;
  double size_max = 26.0;
  double overlap = 0.0;    // max fraction of a new instance covering others
  int min_area = 20;       // smallest visible instance, in pixels
  int gap = 1;             // background margin kept around instances (overlap == 0)
  double background = 0.15;
  double intensity_min = 0.45;
  double intensity_max = 0.95;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Sample {
  Image image;
  LabelMap label;

  bool operator==(const Sample&) const = default;
};

// Rasterized shapes of one image before painting: each mask is the full
// footprint of one instance, in placement order.
struct ShapeLayout {
  Frame frame;
  std::vector<std::vector<Pixel>> masks;
};

ShapeLayout synth_layout(const SynthConfig& config, std::size_t index);
Sample render_sample(const SynthConfig& config, std::size_t index, const ShapeLayout& layout);

// Deterministic per seed; image i derives its own stream from (seed, i).
std::vector<Sample> synth(const SynthConfig& config);
Sample synth_one(const SynthConfig& config, std::size_t index);

// 16-bit single-channel PNG, id 0 = background. 8-bit grayscale is widened on load.
void save_labels(const LabelMap& map, const std::filesystem::path& path);
LabelMap load_labels(const std::filesystem::path& path);

// 8-bit PNG, grayscale (1 channel) or RGB (3 channels), values in [0, 1].
void save_image(const Image& image, const std::filesystem::path& path);
Image load_image(const std::filesystem::path& path);

// Converts to the requested channel count (gray <-> RGB).
Image convert_channels(const Image& image, int channels);

struct AugmentConfig {
  bool enabled = true;
  double scale_min = 0.8;
  double scale_max = 1.25;
  bool flip = true;
};

// A concrete augmentation: rescale, optional left-right flip, then crop.
struct AugmentOps {
  double scale = 1.0;
  bool flip = false;
  int crop_x = 0;
  int crop_y = 0;
  int crop_w = 0;  // 0 keeps the full (scaled) width
  int crop_h = 0;
};

// Draws ops for a sample of `frame` that yield a `tile`-sized result.
AugmentOps draw_augment_ops(Frame frame, Frame tile, const AugmentConfig& config,
                            std::mt19937_64& rng);

// Labels are resampled nearest-neighbour; ids are preserved, ids that leave
// the crop disappear. Areas outside the source are padded with zeros.
Sample augment(const Sample& sample, const AugmentOps& ops);
Sample augment(const Sample& sample, Frame tile, const AugmentConfig& config,
               std::uint64_t seed);

// Dataset directory: images/NNNN.png, labels/NNNN.png, meta.json.
void write_dataset(const std::vector<Sample>& samples, const SynthConfig& config,
                   const std::filesystem::path& dir);
std::vector<Sample> read_dataset(const std::filesystem::path& dir);
std::vector<LabelMap> read_label_dir(const std::filesystem::path& dir);

std::string index_name(std::size_t index);  // "0007.png"

}  // namespace hseg
