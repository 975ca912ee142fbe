#include "hseg/label_map.hpp"

#include <algorithm>
#include <unordered_map>

#include "hseg/error.hpp"

namespace hseg {

LabelMap::LabelMap(int width, int height, InstanceId fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw DomainError("LabelMap: negative extent");
  }
  ids_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
              fill);
}

std::vector<InstanceId> LabelMap::instance_ids() const {
  std::vector<InstanceId> out;
  for (InstanceId id : ids_) {
    if (id != 0) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::map<InstanceId, std::vector<Pixel>> instance_pixels(const LabelMap& map) {
  std::map<InstanceId, std::vector<Pixel>> out;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const InstanceId id = map(x, y);
      if (id != 0) out[id].push_back({x, y});
    }
  }
  return out;
}

LabelMap relabel_sequential(const LabelMap& map) {
  LabelMap out(map.width(), map.height());
  std::unordered_map<InstanceId, InstanceId> remap;
  auto src = map.ids();
  auto dst = out.ids();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == 0) continue;
    auto [it, inserted] =
        remap.try_emplace(src[i], static_cast<InstanceId>(remap.size() + 1));
    dst[i] = it->second;
  }
  return out;
}

bool same_partition(const LabelMap& a, const LabelMap& b) {
  if (a.frame() != b.frame()) return false;
  std::unordered_map<InstanceId, InstanceId> forward;
  std::unordered_map<InstanceId, InstanceId> backward;
  auto ia = a.ids();
  auto ib = b.ids();
  for (std::size_t i = 0; i < ia.size(); ++i) {
    if ((ia[i] == 0) != (ib[i] == 0)) return false;
    if (ia[i] == 0) continue;
    auto [f, fnew] = forward.try_emplace(ia[i], ib[i]);
    if (!fnew && f->second != ib[i]) return false;
    auto [r, rnew] = backward.try_emplace(ib[i], ia[i]);
    if (!rnew && r->second != ia[i]) return false;
  }
  return true;
}

LabelMap crop(const LabelMap& map, int x0, int y0, int w, int h) {
  LabelMap out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = y0 + y;
    if (sy < 0 || sy >= map.height()) continue;
    for (int x = 0; x < w; ++x) {
      const int sx = x0 + x;
      if (sx < 0 || sx >= map.width()) continue;
      out(x, y) = map(sx, sy);
    }
  }
  return out;
}

Image crop(const Image& image, int x0, int y0, int w, int h) {
  Image out(w, h, image.channels);
  for (int c = 0; c < image.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = y0 + y;
      if (sy < 0 || sy >= image.height) continue;
      for (int x = 0; x < w; ++x) {
        const int sx = x0 + x;
        if (sx < 0 || sx >= image.width) continue;
        out.at(c, x, y) = image.at(c, sx, sy);
      }
    }
  }
  return out;
}

}  // namespace hseg
