#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace hseg {

struct Frame {
  int width = 0;
  int height = 0;

  bool operator==(const Frame&) const = default;
};

struct Pixel {
  int x = 0;
  int y = 0;

  bool operator==(const Pixel&) const = default;
};

using InstanceId = std::uint32_t;

// Raster of instance ids, row-major; 0 is background.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, InstanceId fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  Frame frame() const { return {width_, height_}; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  InstanceId& operator()(int x, int y) { return ids_[index(x, y)]; }
  InstanceId operator()(int x, int y) const { return ids_[index(x, y)]; }

  std::span<InstanceId> ids() { return ids_; }
  std::span<const InstanceId> ids() const { return ids_; }

  // Sorted distinct non-zero ids.
  std::vector<InstanceId> instance_ids() const;
  std::size_t instance_count() const { return instance_ids().size(); }

  bool operator==(const LabelMap&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<InstanceId> ids_;
};

// Pixel lists per instance in raster order, keyed by ascending id.
std::map<InstanceId, std::vector<Pixel>> instance_pixels(const LabelMap& map);

// Renumbers instances 1..K in order of first appearance in raster scan.
LabelMap relabel_sequential(const LabelMap& map);

// True if the two maps induce the same partition (same background, same
// instances up to a bijective renaming of ids).
bool same_partition(const LabelMap& a, const LabelMap& b);

// Copies the window [x0, x0+w) x [y0, y0+h); pixels outside the source are 0.
LabelMap crop(const LabelMap& map, int x0, int y0, int w, int h);

// Planar float image, channel-major (C, H, W).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  Frame frame() const { return {width, height}; }
  float& at(int c, int x, int y) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int x, int y) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool operator==(const Image&) const = default;
};

Image crop(const Image& image, int x0, int y0, int w, int h);

}  // namespace hseg
