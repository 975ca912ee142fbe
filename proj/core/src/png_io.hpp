#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hseg::detail {

struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 gray, 3 rgb
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint8_t> bytes;  // rows packed, 16-bit samples big-endian
};

// raw == true: only 8/16-bit grayscale without alpha is accepted and samples
// are returned untouched. raw == false: any PNG is normalized to 8-bit gray
// or RGB.
PngData read_png(const std::filesystem::path& path, bool raw);
void write_png(const std::filesystem::path& path, const PngData& data);

}  // namespace hseg::detail
