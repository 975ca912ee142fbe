#include "hseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hseg/error.hpp"
#include "json.hpp"
#include "png_io.hpp"

namespace hseg {

namespace fs = std::filesystem;

namespace {

constexpr int kDatasetFormatVersion = 1;
constexpr int kPlacementAttempts = 400;
constexpr int kLayoutRetries = 64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(index * 0x9E3779B97F4A7C15ULL + stream));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

struct Point {
  double x, y;
};

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

// Pixels whose centres lie within `radius` of the polyline.
std::vector<Pixel> rasterize_polyline(const std::vector<Point>& line, double radius,
                                      Frame frame) {
  double x0 = 1e30, y0 = 1e30, x1 = -1e30, y1 = -1e30;
  for (const Point& p : line) {
    x0 = std::min(x0, p.x), y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x), y1 = std::max(y1, p.y);
  }
  const int bx0 = std::max(0, static_cast<int>(std::floor(x0 - radius)));
  const int by0 = std::max(0, static_cast<int>(std::floor(y0 - radius)));
  const int bx1 = std::min(frame.width - 1, static_cast<int>(std::ceil(x1 + radius)));
  const int by1 = std::min(frame.height - 1, static_cast<int>(std::ceil(y1 + radius)));
  std::vector<Pixel> out;
  for (int y = by0; y <= by1; ++y) {
    for (int x = bx0; x <= bx1; ++x) {
      const Point c{x + 0.5, y + 0.5};
      double best = 1e30;
      for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        best = std::min(best, segment_distance(c, line[i], line[i + 1]));
      }
      if (line.size() == 1) best = std::hypot(c.x - line[0].x, c.y - line[0].y);
      if (best <= radius) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Pixel> make_blob(const SynthConfig& cfg, std::mt19937_64& rng) {
  const double d = uniform(rng, cfg.size_min, cfg.size_max);
  const double a = 0.5 * d * uniform(rng, 0.8, 1.0);
  const double b = 0.5 * d * uniform(rng, 0.6, 1.0);
  const double theta = uniform(rng, 0.0, std::numbers::pi);
  const double cx = uniform(rng, 0.0, cfg.width);
  const double cy = uniform(rng, 0.0, cfg.height);
  const double ct = std::cos(theta), st = std::sin(theta);
  std::vector<Pixel> out;
  const int r = static_cast<int>(std::ceil(a)) + 1;
  for (int y = std::max(0, static_cast<int>(cy) - r);
       y <= std::min(cfg.height - 1, static_cast<int>(cy) + r); ++y) {
    for (int x = std::max(0, static_cast<int>(cx) - r);
         x <= std::min(cfg.width - 1, static_cast<int>(cx) + r); ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (dx * ct + dy * st) / a;
      const double v = (-dx * st + dy * ct) / b;
      if (u * u + v * v <= 1.0) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Pixel> make_rod(const SynthConfig& cfg, std::mt19937_64& rng) {
  const double length = uniform(rng, cfg.size_min, cfg.size_max);
  const double thickness = std::max(3.0, 0.25 * length) * uniform(rng, 0.85, 1.15);
  const double theta = uniform(rng, 0.0, std::numbers::pi);
  const double cx = uniform(rng, 0.0, cfg.width);
  const double cy = uniform(rng, 0.0, cfg.height);
  const double hx = 0.5 * (length - thickness) * std::cos(theta);
  const double hy = 0.5 * (length - thickness) * std::sin(theta);
  return rasterize_polyline({{cx - hx, cy - hy}, {cx + hx, cy + hy}}, 0.5 * thickness,
                            {cfg.width, cfg.height});
}

// Smooth open curve: Catmull-Rom through 3-5 control points.
std::vector<Pixel> make_worm(const SynthConfig& cfg, std::mt19937_64& rng) {
  const double length = uniform(rng, cfg.size_min, cfg.size_max);
  const double thickness = std::max(3.0, 0.12 * length);
  const int controls = std::uniform_int_distribution<int>(3, 5)(rng);
  const double step = length / (controls - 1);
  std::vector<Point> ctrl;
  Point p{uniform(rng, 0.0, cfg.width), uniform(rng, 0.0, cfg.height)};
  double heading = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  ctrl.push_back(p);
  for (int i = 1; i < controls; ++i) {
    heading += uniform(rng, -1.0, 1.0);
    p = {p.x + step * std::cos(heading), p.y + step * std::sin(heading)};
    ctrl.push_back(p);
  }
  std::vector<Point> line;
  const int samples_per_span = 8;
  for (std::size_t i = 0; i + 1 < ctrl.size(); ++i) {
    const Point p0 = i == 0 ? ctrl[0] : ctrl[i - 1];
    const Point p1 = ctrl[i];
    const Point p2 = ctrl[i + 1];
    const Point p3 = i + 2 < ctrl.size() ? ctrl[i + 2] : ctrl[i + 1];
    for (int s = 0; s < samples_per_span; ++s) {
      const double t = static_cast<double>(s) / samples_per_span;
      const double t2 = t * t, t3 = t2 * t;
      auto cr = [&](double a0, double a1, double a2, double a3) {
        return 0.5 * (2 * a1 + (-a0 + a2) * t + (2 * a0 - 5 * a1 + 4 * a2 - a3) * t2 +
                      (-a0 + 3 * a1 - 3 * a2 + a3) * t3);
      };
      line.push_back({cr(p0.x, p1.x, p2.x, p3.x), cr(p0.y, p1.y, p2.y, p3.y)});
    }
  }
  line.push_back(ctrl.back());
  return rasterize_polyline(line, 0.5 * thickness, {cfg.width, cfg.height});
}

std::vector<Pixel> make_shape(const SynthConfig& cfg, std::mt19937_64& rng) {
  switch (cfg.kind) {
    case SynthKind::kBlobs:
      return make_blob(cfg, rng);
    case SynthKind::kRods:
      return make_rod(cfg, rng);
    case SynthKind::kWorms:
      return make_worm(cfg, rng);
  }
  return {};
}

bool try_layout(const SynthConfig& cfg, std::mt19937_64& rng, ShapeLayout& layout) {
  const int target = std::uniform_int_distribution<int>(cfg.count_min, cfg.count_max)(rng);
  const Frame frame{cfg.width, cfg.height};
  LabelMap painted(cfg.width, cfg.height);
  std::vector<std::uint8_t> reserved(painted.size(), 0);
  std::vector<std::size_t> visible;  // visible pixel count per placed instance
  layout.frame = frame;
  layout.masks.clear();

  for (int attempt = 0; attempt < kPlacementAttempts &&
                        static_cast<int>(layout.masks.size()) < target;
       ++attempt) {
    std::vector<Pixel> shape = make_shape(cfg, rng);
    if (static_cast<int>(shape.size()) < cfg.min_area) continue;
    std::size_t covered = 0;
    for (const Pixel& p : shape) {
      const std::size_t i = static_cast<std::size_t>(p.y) * cfg.width + p.x;
      if (cfg.overlap == 0.0 ? reserved[i] != 0 : painted.ids()[i] != 0) ++covered;
    }
    if (cfg.overlap == 0.0 && covered > 0) continue;
    if (static_cast<double>(covered) > cfg.overlap * static_cast<double>(shape.size())) {
      continue;
    }
    // Occluded instances must stay visible.
    std::vector<std::size_t> lost(visible.size(), 0);
    for (const Pixel& p : shape) {
      const InstanceId id = painted(p.x, p.y);
      if (id != 0) ++lost[id - 1];
    }
    bool ok = true;
    for (std::size_t k = 0; k < visible.size(); ++k) {
      const std::size_t remaining = visible[k] - lost[k];
      if (static_cast<int>(remaining) < cfg.min_area || 2 * remaining < visible[k]) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    const InstanceId id = static_cast<InstanceId>(layout.masks.size() + 1);
    for (std::size_t k = 0; k < visible.size(); ++k) visible[k] -= lost[k];
    for (const Pixel& p : shape) painted(p.x, p.y) = id;
    visible.push_back(shape.size());
    for (const Pixel& p : shape) {
      for (int dy = -cfg.gap; dy <= cfg.gap; ++dy) {
        for (int dx = -cfg.gap; dx <= cfg.gap; ++dx) {
          const int x = p.x + dx, y = p.y + dy;
          if (x < 0 || y < 0 || x >= cfg.width || y >= cfg.height) continue;
          reserved[static_cast<std::size_t>(y) * cfg.width + x] = 1;
        }
      }
    }
    layout.masks.push_back(std::move(shape));
  }
  return static_cast<int>(layout.masks.size()) == target;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double bilinear(const Image& img, int c, double x, double y) {
  x = std::clamp(x, 0.0, img.width - 1.0);
  y = std::clamp(y, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(c, x0, y0) + fx * img.at(c, x1, y0)) +
         fy * ((1 - fx) * img.at(c, x0, y1) + fx * img.at(c, x1, y1));
}

}  // namespace

std::string to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::kBlobs:
      return "blobs";
    case SynthKind::kRods:
      return "rods";
    case SynthKind::kWorms:
      return "worms";
  }
  return "unknown";
}

SynthKind synth_kind_from_string(const std::string& name) {
  if (name == "blobs") return SynthKind::kBlobs;
  if (name == "rods") return SynthKind::kRods;
  if (name == "worms") return SynthKind::kWorms;
  throw ConfigError("unknown synth kind '" + name + "'");
}

void SynthConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("synth: image size must be positive");
  if (num_images < 0) throw ConfigError("synth: num_images must be >= 0");
  if (count_min < 1 || count_max < count_min) {
    throw ConfigError("synth: instance count range is empty");
  }
  if (!(size_min > 0.0) || size_max < size_min) {
    throw ConfigError("synth: size range must be positive and non-empty");
  }
  if (overlap < 0.0 || overlap > 1.0) throw ConfigError("synth: overlap must be in [0,1]");
  if (min_area < 1 || gap < 0) throw ConfigError("synth: min_area >= 1 and gap >= 0");
  if (noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be >= 0");
}

ShapeLayout synth_layout(const SynthConfig& config, std::size_t index) {
  config.validate();
  for (int retry = 0; retry < kLayoutRetries; ++retry) {
    std::mt19937_64 rng(derive_seed(config.seed, index, static_cast<std::uint64_t>(retry)));
    ShapeLayout layout;
    if (try_layout(config, rng, layout)) return layout;
  }
  throw DataError("synth: could not place the requested number of instances; "
                  "reduce count or size");
}

Sample render_sample(const SynthConfig& config, std::size_t index,
                     const ShapeLayout& layout) {
  Sample s;
  s.label = LabelMap(layout.frame.width, layout.frame.height);
  for (std::size_t k = 0; k < layout.masks.size(); ++k) {
    for (const Pixel& p : layout.masks[k]) s.label(p.x, p.y) = static_cast<InstanceId>(k + 1);
  }
  std::mt19937_64 rng(derive_seed(config.seed, index, 0xC0FFEEULL));
  std::vector<double> intensity(layout.masks.size());
  for (double& v : intensity) v = uniform(rng, config.intensity_min, config.intensity_max);

  s.image = Image(layout.frame.width, layout.frame.height, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  const LabelMap& lab = s.label;
  for (int y = 0; y < lab.height(); ++y) {
    for (int x = 0; x < lab.width(); ++x) {
      const InstanceId id = lab(x, y);
      double v = config.background;
      if (id != 0) {
        v = intensity[id - 1];
        const bool edge = (x > 0 && lab(x - 1, y) != id) ||
                          (x + 1 < lab.width() && lab(x + 1, y) != id) ||
                          (y > 0 && lab(x, y - 1) != id) ||
                          (y + 1 < lab.height() && lab(x, y + 1) != id);
        if (edge) v *= 0.6;
      }
      v += config.noise_sigma * noise(rng);
      v = std::clamp(v, 0.0, 1.0);
      s.image.at(0, x, y) = static_cast<float>(std::lround(v * 255.0)) / 255.0f;
    }
  }
  return s;
}

Sample synth_one(const SynthConfig& config, std::size_t index) {
  return render_sample(config, index, synth_layout(config, index));
}

std::vector<Sample> synth(const SynthConfig& config) {
  config.validate();
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(config.num_images));
  for (int i = 0; i < config.num_images; ++i) out.push_back(synth_one(config, i));
  return out;
}

void save_labels(const LabelMap& map, const fs::path& path) {
  detail::PngData png;
  png.width = map.width();
  png.height = map.height();
  png.channels = 1;
  png.bit_depth = 16;
  png.bytes.resize(map.size() * 2);
  auto ids = map.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] > 65535) throw DataError("label id exceeds the 16-bit PNG range");
    png.bytes[2 * i] = static_cast<std::uint8_t>(ids[i] >> 8);
    png.bytes[2 * i + 1] = static_cast<std::uint8_t>(ids[i] & 0xFF);
  }
  detail::write_png(path, png);
}

LabelMap load_labels(const fs::path& path) {
  const detail::PngData png = detail::read_png(path, /*raw=*/true);
  LabelMap map(png.width, png.height);
  auto ids = map.ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = png.bit_depth == 16
                 ? (static_cast<InstanceId>(png.bytes[2 * i]) << 8) | png.bytes[2 * i + 1]
                 : png.bytes[i];
  }
  return map;
}

void save_image(const Image& image, const fs::path& path) {
  if (image.channels != 1 && image.channels != 3) {
    throw DataError("only 1- or 3-channel images can be written");
  }
  detail::PngData png;
  png.width = image.width;
  png.height = image.height;
  png.channels = image.channels;
  png.bit_depth = 8;
  png.bytes.resize(static_cast<std::size_t>(image.width) * image.height * image.channels);
  std::size_t k = 0;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const double v = std::clamp(static_cast<double>(image.at(c, x, y)), 0.0, 1.0);
        png.bytes[k++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  detail::write_png(path, png);
}

Image load_image(const fs::path& path) {
  const detail::PngData png = detail::read_png(path, /*raw=*/false);
  Image image(png.width, png.height, png.channels);
  std::size_t k = 0;
  for (int y = 0; y < png.height; ++y) {
    for (int x = 0; x < png.width; ++x) {
      for (int c = 0; c < png.channels; ++c) {
        image.at(c, x, y) = static_cast<float>(png.bytes[k++]) / 255.0f;
      }
    }
  }
  return image;
}

Image convert_channels(const Image& image, int channels) {
  if (image.channels == channels) return image;
  Image out(image.width, image.height, channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      // Double accumulation keeps gray replicas exact.
      double gray = 0.0;
      for (int c = 0; c < image.channels; ++c) gray += image.at(c, x, y);
      gray /= image.channels;
      for (int c = 0; c < channels; ++c) {
        out.at(c, x, y) = image.channels == 1 ? image.at(0, x, y) : static_cast<float>(gray);
      }
    }
  }
  return out;
}

AugmentOps draw_augment_ops(Frame frame, Frame tile, const AugmentConfig& config,
                            std::mt19937_64& rng) {
  AugmentOps ops;
  ops.crop_w = tile.width;
  ops.crop_h = tile.height;
  if (config.enabled) {
    const double ls = uniform(rng, std::log(config.scale_min), std::log(config.scale_max));
    ops.scale = std::exp(ls);
    ops.flip = config.flip && std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  }
  const int sw = static_cast<int>(std::lround(frame.width * ops.scale));
  const int sh = static_cast<int>(std::lround(frame.height * ops.scale));
  ops.crop_x = sw > tile.width ? std::uniform_int_distribution<int>(0, sw - tile.width)(rng) : 0;
  ops.crop_y = sh > tile.height ? std::uniform_int_distribution<int>(0, sh - tile.height)(rng) : 0;
  return ops;
}

Sample augment(const Sample& sample, const AugmentOps& ops) {
  if (sample.image.frame() != sample.label.frame()) {
    throw DomainError("augment: image and label frames differ");
  }
  if (!(ops.scale > 0.0)) throw DomainError("augment: scale must be positive");
  const Frame src = sample.label.frame();
  Sample out;
  if (ops.scale == 1.0) {
    out = sample;
  } else {
    const int sw = std::max(1, static_cast<int>(std::lround(src.width * ops.scale)));
    const int sh = std::max(1, static_cast<int>(std::lround(src.height * ops.scale)));
    out.label = LabelMap(sw, sh);
    out.image = Image(sw, sh, sample.image.channels);
    for (int y = 0; y < sh; ++y) {
      const double fy = (y + 0.5) / ops.scale;
      const int ny = std::min(src.height - 1, static_cast<int>(fy));
      for (int x = 0; x < sw; ++x) {
        const double fx = (x + 0.5) / ops.scale;
        const int nx = std::min(src.width - 1, static_cast<int>(fx));
        out.label(x, y) = sample.label(nx, ny);
        for (int c = 0; c < sample.image.channels; ++c) {
          out.image.at(c, x, y) =
              static_cast<float>(bilinear(sample.image, c, fx - 0.5, fy - 0.5));
        }
      }
    }
  }
  if (ops.flip) {
    const int w = out.label.width();
    for (int y = 0; y < out.label.height(); ++y) {
      for (int x = 0; x < w / 2; ++x) {
        std::swap(out.label(x, y), out.label(w - 1 - x, y));
        for (int c = 0; c < out.image.channels; ++c) {
          std::swap(out.image.at(c, x, y), out.image.at(c, w - 1 - x, y));
        }
      }
    }
  }
  const int cw = ops.crop_w > 0 ? ops.crop_w : out.label.width();
  const int ch = ops.crop_h > 0 ? ops.crop_h : out.label.height();
  if (ops.crop_x != 0 || ops.crop_y != 0 || cw != out.label.width() ||
      ch != out.label.height()) {
    out.label = crop(out.label, ops.crop_x, ops.crop_y, cw, ch);
    out.image = crop(out.image, ops.crop_x, ops.crop_y, cw, ch);
  }
  return out;
}

Sample augment(const Sample& sample, Frame tile, const AugmentConfig& config,
               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return augment(sample, draw_augment_ops(sample.label.frame(), tile, config, rng));
}

std::string index_name(std::size_t index) {
  std::ostringstream os;
  os.width(4);
  os.fill('0');
  os << index;
  return os.str() + ".png";
}

void write_dataset(const std::vector<Sample>& samples, const SynthConfig& config,
                   const fs::path& dir) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "labels");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    save_image(samples[i].image, dir / "images" / index_name(i));
    save_labels(samples[i].label, dir / "labels" / index_name(i));
  }
  nlohmann::ordered_json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["count"] = samples.size();
  meta["config"] = {{"kind", to_string(config.kind)},
                    {"width", config.width},
                    {"height", config.height},
                    {"num_images", config.num_images},
                    {"count_min", config.count_min},
                    {"count_max", config.count_max},
                    {"size_min", config.size_min},
                    {"size_max", config.size_max},
                    {"overlap", config.overlap},
                    {"min_area", config.min_area},
                    {"gap", config.gap},
                    {"background", config.background},
                    {"intensity_min", config.intensity_min},
                    {"intensity_max", config.intensity_max},
                    {"noise_sigma", config.noise_sigma},
                    {"seed", config.seed}};
  std::ofstream out(dir / "meta.json", std::ios::binary);
  out << meta.dump(2) << "\n";
}

std::vector<Sample> read_dataset(const fs::path& dir) {
  std::vector<Sample> out;
  for (const fs::path& img : sorted_pngs(dir / "images")) {
    const fs::path lab = dir / "labels" / img.filename();
    if (!fs::exists(lab)) throw DataError("missing label map " + lab.string());
    Sample s{load_image(img), load_labels(lab)};
    if (s.image.frame() != s.label.frame()) {
      throw DataError("image and label sizes differ for " + img.filename().string());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LabelMap> read_label_dir(const fs::path& dir) {
  const fs::path root = fs::is_directory(dir / "labels") ? dir / "labels" : dir;
  std::vector<LabelMap> out;
  for (const fs::path& p : sorted_pngs(root)) out.push_back(load_labels(p));
  return out;
}

}  // namespace hseg
