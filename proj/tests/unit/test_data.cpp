#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <png.h>

#include "doctest.h"
#include "hseg/data.hpp"
#include "hseg/error.hpp"

using namespace hseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::map<InstanceId, std::size_t> areas(const LabelMap& m) {
  std::map<InstanceId, std::size_t> a;
  for (InstanceId id : m.ids())
    if (id) ++a[id];
  return a;
}

}  // namespace

TEST_CASE("synth is deterministic and respects the count range") {
  SynthConfig c;
  c.num_images = 5;
  c.seed = 12;
  const auto a = synth(c), b = synth(c);
  CHECK(a == b);
  c.seed = 13;
  CHECK_FALSE(synth(c) == a);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(synth_one(c, i) == synth(c)[i]);

  c.count_min = c.count_max = 20;
  c.kind = SynthKind::kRods;
  for (const Sample& s : synth(c)) CHECK(s.label.instance_count() == 20);
}

TEST_CASE("synth honours config bounds on random configs") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    SynthConfig c;
    c.kind = static_cast<SynthKind>(rng() % 3);
    c.width = 48 + static_cast<int>(rng() % 48);
    c.height = 48 + static_cast<int>(rng() % 48);
    c.num_images = 1;
    c.count_min = 1 + static_cast<int>(rng() % 4);
    c.count_max = c.count_min + static_cast<int>(rng() % 4);
    c.size_min = 8.0 + static_cast<double>(rng() % 6);
    c.size_max = c.size_min + static_cast<double>(rng() % 8);
    c.overlap = (rng() % 2) ? 0.0 : 0.3;
    c.seed = rng();
    const Sample s = synth(c).at(0);
    CHECK(s.image.frame() == s.label.frame());
    CHECK(s.label.width() == c.width);
    const std::size_t n = s.label.instance_count();
    CHECK(n >= static_cast<std::size_t>(c.count_min));
    CHECK(n <= static_cast<std::size_t>(c.count_max));
    for (auto [id, area] : areas(s.label)) CHECK(area >= static_cast<std::size_t>(c.min_area));
    for (float v : s.image.data) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("zero overlap keeps instances disjoint in their full footprints") {
  SynthConfig c;
  c.kind = SynthKind::kWorms;
  c.overlap = 0.0;
  c.seed = 5;
  for (std::size_t i = 0; i < 5; ++i) {
    const ShapeLayout layout = synth_layout(c, i);
    std::set<std::pair<int, int>> seen;
    for (const auto& mask : layout.masks) {
      for (const Pixel& p : mask) CHECK(seen.insert({p.x, p.y}).second);
    }
    const Sample s = render_sample(c, i, layout);
    CHECK(s.label.instance_count() == layout.masks.size());
  }
}

TEST_CASE("label PNG round trips") {
  TempDir dir("hseg_test_labels");
  std::mt19937_64 rng(8);
  LabelMap m(13, 7);
  for (InstanceId& id : m.ids()) id = static_cast<InstanceId>(rng() % 65536);
  save_labels(m, dir.path / "a.png");
  CHECK(load_labels(dir.path / "a.png") == m);

  save_labels(LabelMap(5, 4), dir.path / "zero.png");
  CHECK(load_labels(dir.path / "zero.png") == LabelMap(5, 4));

  LabelMap big(2, 2);
  big(0, 0) = 70000;
  CHECK_THROWS_AS(save_labels(big, dir.path / "big.png"), DataError);

  std::ofstream(dir.path / "junk.png") << "not a png";
  CHECK_THROWS_AS(load_labels(dir.path / "junk.png"), DataError);
  CHECK_THROWS_AS(load_labels(dir.path / "missing.png"), DataError);

  // 8-bit grayscale written directly with libpng widens on load.
  const fs::path legacy = dir.path / "legacy.png";
  FILE* f = std::fopen(legacy.c_str(), "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, 3, 2, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_byte rows[2][3] = {{0, 1, 255}, {7, 7, 0}};
  for (auto& row : rows) png_write_row(png, row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
  const LabelMap widened = load_labels(legacy);
  CHECK(widened(2, 0) == 255);
  CHECK(widened(0, 1) == 7);
  CHECK(widened(1, 0) == 1);
}

TEST_CASE("images round trip at 8-bit precision") {
  TempDir dir("hseg_test_images");
  SynthConfig c;
  c.num_images = 1;
  const Sample s = synth(c)[0];
  save_image(s.image, dir.path / "i.png");
  CHECK(load_image(dir.path / "i.png") == s.image);  // synth quantizes to 1/255
  const Image rgb = convert_channels(s.image, 3);
  CHECK(rgb.channels == 3);
  CHECK(convert_channels(rgb, 1) == s.image);
}

TEST_CASE("dataset directory round trip") {
  TempDir dir("hseg_test_dataset");
  SynthConfig c;
  c.num_images = 3;
  c.seed = 2;
  const auto samples = synth(c);
  write_dataset(samples, c, dir.path);
  CHECK(fs::exists(dir.path / "images" / "0002.png"));
  CHECK(fs::exists(dir.path / "meta.json"));
  CHECK(read_dataset(dir.path) == samples);
  CHECK(read_label_dir(dir.path).size() == 3);
  CHECK(index_name(7) == "0007.png");
}

TEST_CASE("augment examples") {
  SynthConfig c;
  c.num_images = 1;
  c.seed = 4;
  const Sample s = synth(c)[0];
  CHECK(augment(s, AugmentOps{}) == s);

  AugmentOps flip;
  flip.flip = true;
  CHECK(augment(augment(s, flip), flip) == s);
  CHECK_FALSE(augment(s, flip) == s);

  // Crop around one instance.
  const auto px = instance_pixels(s.label);
  const auto& [id, pixels] = *px.begin();
  const Pixel p = pixels[pixels.size() / 2];
  AugmentOps one;
  one.crop_x = p.x;
  one.crop_y = p.y;
  one.crop_w = 1;
  one.crop_h = 1;
  CHECK(augment(s, one).label.instance_ids() == std::vector<InstanceId>{id});

  // Rescaling never invents ids.
  std::mt19937_64 rng(1);
  const auto before = s.label.instance_ids();
  for (int i = 0; i < 20; ++i) {
    const AugmentOps ops = draw_augment_ops(s.label.frame(), {96, 96}, AugmentConfig{}, rng);
    CHECK(ops.scale >= 0.8);
    CHECK(ops.scale <= 1.25);
    const Sample a = augment(s, ops);
    CHECK(a.label.frame() == Frame{96, 96});
    for (InstanceId v : a.label.instance_ids())
      CHECK(std::binary_search(before.begin(), before.end(), v));
  }
}

TEST_CASE("config validation") {
  SynthConfig c;
  c.count_min = 5;
  c.count_max = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SynthConfig{};
  c.size_min = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(synth_kind_from_string("worms") == SynthKind::kWorms);
  CHECK_THROWS_AS(synth_kind_from_string("cats"), ConfigError);
}
