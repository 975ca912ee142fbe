#include "hseg/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "hseg/error.hpp"
#include "json.hpp"

namespace hseg {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'H', 'S', 'E', 'G'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t guide_channel_count(const SinUNetConfig& c) {
  switch (c.guide_input()) {
    case GuideInput::kSine:
      return static_cast<std::size_t>(c.embedding_dim);
    case GuideInput::kCoord:
      return 2;
    case GuideInput::kNone:
      return 0;
  }
  return 0;
}

nlohmann::ordered_json network_json(const SinUNetConfig& c) {
  return {{"depth", c.depth},
          {"base_channels", c.base_channels},
          {"embedding_dim", c.embedding_dim},
          {"input_channels", c.input_channels},
          {"sinconv", c.sinconv},
          {"coordconv", c.coordconv},
          {"tile_w", c.tile_w},
          {"tile_h", c.tile_h}};
}

SinUNetConfig network_from_json(const nlohmann::json& j) {
  SinUNetConfig c;
  c.depth = j.at("depth").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.input_channels = j.at("input_channels").get<int>();
  c.sinconv = j.at("sinconv").get<bool>();
  c.coordconv = j.at("coordconv").get<bool>();
  c.tile_w = j.at("tile_w").get<int>();
  c.tile_h = j.at("tile_h").get<int>();
  return c;
}

nlohmann::ordered_json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"fg_weight", t.fg_weight},
          {"full_mask", t.full_mask},
          {"augment",
           {{"enabled", t.augment.enabled},
            {"scale_min", t.augment.scale_min},
            {"scale_max", t.augment.scale_max},
            {"flip", t.augment.flip}}}};
}

TrainConfig train_from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.learning_rate = j.at("learning_rate").get<double>();
  t.fg_weight = j.at("fg_weight").get<double>();
  t.full_mask = j.at("full_mask").get<bool>();
  const auto& a = j.at("augment");
  t.augment.enabled = a.at("enabled").get<bool>();
  t.augment.scale_min = a.at("scale_min").get<double>();
  t.augment.scale_max = a.at("scale_max").get<double>();
  t.augment.flip = a.at("flip").get<bool>();
  return t;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

template <typename V>
void write_pod(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw DataError("checkpoint truncated");
  return v;
}

void write_tensor(std::ostream& os, const std::string& name, const Tensor<float>& t) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod<std::uint8_t>(os, 0);  // dtype tag: 0 = float32
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) write_pod<std::uint64_t>(os, e);
  os.write(reinterpret_cast<const char*>(t.raw()),
           static_cast<std::streamsize>(t.size() * sizeof(float)));
}

std::pair<std::string, Tensor<float>> read_tensor(std::istream& is) {
  const auto len = read_pod<std::uint32_t>(is);
  if (len > (1u << 16)) throw DataError("checkpoint: tensor name too long");
  std::string name(len, '\0');
  is.read(name.data(), len);
  const auto dtype = read_pod<std::uint8_t>(is);
  const auto rank = read_pod<std::uint32_t>(is);
  if (rank > 8) throw DataError("checkpoint: tensor rank too large");
  Shape shape(rank);
  for (auto& e : shape) e = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
  const std::size_t n = numel(shape);
  if (n > (std::size_t{1} << 31)) throw DataError("checkpoint: tensor too large");
  std::vector<float> data(n);
  if (dtype == 0) {
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(float)));
  } else if (dtype == 1) {
    std::vector<double> wide(n);
    is.read(reinterpret_cast<char*>(wide.data()), static_cast<std::streamsize>(n * sizeof(double)));
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(wide[i]);
  } else {
    throw DataError("checkpoint: unknown dtype tag");
  }
  if (!is) throw DataError("checkpoint truncated");
  return {std::move(name), Tensor<float>(std::move(shape), std::move(data))};
}

}  // namespace

void SinUNetConfig::validate() const {
  if (depth < 1) throw ConfigError("network depth must be >= 1");
  if (base_channels < 1 || embedding_dim < 1 || input_channels < 1) {
    throw ConfigError("network channel counts must be positive");
  }
  const int unit = 1 << depth;
  if (tile_w <= 0 || tile_h <= 0 || tile_w % unit != 0 || tile_h % unit != 0) {
    throw ConfigError("tile size must be a positive multiple of 2^depth");
  }
}

template <typename T>
Tensor<T> guide_maps(const GuideSet& guides, std::size_t h, std::size_t w, int delta,
                     Frame tile) {
  Tensor<T> out(Shape{guides.n(), h, w});
  for (std::size_t i = 0; i < guides.n(); ++i) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out.at(i, y, x) = static_cast<T>(eval_guide(guides[i], static_cast<double>(x) * delta,
                                                    static_cast<double>(y) * delta, tile));
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> coord_maps(std::size_t h, std::size_t w, int delta, Frame tile) {
  if (tile.width <= 0 || tile.height <= 0) throw DomainError("coord_maps: empty tile");
  Tensor<T> out(Shape{2, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out.at(0, y, x) = static_cast<T>(static_cast<double>(x) * delta / tile.width);
      out.at(1, y, x) = static_cast<T>(static_cast<double>(y) * delta / tile.height);
    }
  }
  return out;
}

template <typename T>
ad::Var sinconv(ad::Tape<T>& tape, ad::Var input, const GuideSet& guides, int delta,
                Frame tile, ad::Var weights, ad::Var bias) {
  const Shape& s = tape.value(input).shape();
  if (s.size() != 3) throw DomainError("sinconv: input must be (C,H,W)");
  if (tape.value(weights).rank() != 4 ||
      tape.value(weights).extent(1) != s[0] + guides.n()) {
    throw DomainError("sinconv: weights must take C + N input channels");
  }
  const ad::Var maps = tape.constant(guide_maps<T>(guides, s[1], s[2], delta, tile));
  const std::array<ad::Var, 2> parts{input, maps};
  return ad::conv2d(tape, ad::concat<T>(tape, parts), weights, bias);
}

TargetField build_targets(const LabelMap& label, const GuideSet& guides) {
  const std::size_t h = static_cast<std::size_t>(label.height());
  const std::size_t w = static_cast<std::size_t>(label.width());
  TargetField out{Tensor<float>(Shape{guides.n(), h, w}), Tensor<float>(Shape{h, w})};
  for (const auto& [id, pixels] : instance_pixels(label)) {
    const ObjectEmbedding e = guided_embedding(PixelSet{pixels, label.frame()}, guides);
    for (const Pixel& p : pixels) {
      for (std::size_t i = 0; i < guides.n(); ++i) {
        out.embedding.at(i, static_cast<std::size_t>(p.y), static_cast<std::size_t>(p.x)) =
            static_cast<float>(e[i]);
      }
      out.fg[static_cast<std::size_t>(p.y) * w + static_cast<std::size_t>(p.x)] = 1.0f;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SinUNet

template <typename T>
SinUNet<T>::SinUNet(SinUNetConfig config, GuideSet guides, std::uint64_t seed)
    : config_(config), guides_(std::move(guides)) {
  config_.validate();
  if (config_.guide_input() == GuideInput::kSine &&
      guides_.n() != static_cast<std::size_t>(config_.embedding_dim)) {
    throw ConfigError("guide set size does not match the embedding dimension");
  }
  const std::size_t extra = guide_channel_count(config_);
  const int depth = config_.depth;
  std::vector<std::size_t> ch(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) ch[l] = static_cast<std::size_t>(config_.base_channels) << l;

  std::size_t in = static_cast<std::size_t>(config_.input_channels);
  for (int l = 0; l < depth; ++l) {
    const std::string p = "enc" + std::to_string(l);
    add_param(p + ".conv1", {ch[l], in, 3, 3});
    add_param(p + ".conv2", {ch[l], ch[l], 3, 3});
    in = ch[l];
  }
  const std::size_t mid = ch[depth - 1];
  add_param("mid.conv1", {mid, in, 3, 3});
  add_param("mid.conv2", {mid, mid, 3, 3});
  std::size_t prev = mid;
  for (int l = depth - 1; l >= 0; --l) {
    const std::string p = "dec" + std::to_string(l);
    add_param(p + ".up", {ch[l], prev + extra, 3, 3});
    add_param(p + ".conv", {ch[l], 2 * ch[l], 3, 3});
    prev = ch[l];
  }
  add_param("head", {static_cast<std::size_t>(config_.embedding_dim) + 1, ch[0], 1, 1});

  // He-uniform weights, zero biases, zero head.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < params_.size(); i += 2) {
    Tensor<T>& w = params_[i];
    const bool head = names_[i] == "head.w";
    const double fan_in = static_cast<double>(w.extent(1) * w.extent(2) * w.extent(3));
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& v : w.data()) {
      const double draw = dist(rng);
      v = head ? T{0} : static_cast<T>(draw);
    }
  }

  for (int l = 0; l < depth; ++l) {
    const std::size_t h = static_cast<std::size_t>(config_.tile_h >> l);
    const std::size_t w = static_cast<std::size_t>(config_.tile_w >> l);
    switch (config_.guide_input()) {
      case GuideInput::kSine:
        level_maps_.push_back(guide_maps<T>(guides_, h, w, 1 << l, config_.tile()));
        break;
      case GuideInput::kCoord:
        level_maps_.push_back(coord_maps<T>(h, w, 1 << l, config_.tile()));
        break;
      case GuideInput::kNone:
        level_maps_.emplace_back(Shape{0, h, w});
        break;
    }
  }
}

template <typename T>
std::size_t SinUNet<T>::add_param(std::string name, Shape shape) {
  const std::size_t out_channels = shape[0];
  names_.push_back(name + ".w");
  params_.emplace_back(std::move(shape), T{0});
  names_.push_back(name + ".b");
  params_.emplace_back(Shape{out_channels}, T{0});
  return params_.size() - 2;
}

template <typename T>
std::size_t SinUNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
ad::Var SinUNet<T>::conv(ad::Tape<T>& tape, const Output& out, std::size_t index,
                         ad::Var x) const {
  return ad::conv2d(tape, x, out.params[index], out.params[index + 1]);
}

template <typename T>
typename SinUNet<T>::Output SinUNet<T>::forward(ad::Tape<T>& tape,
                                                const Tensor<T>& input) const {
  const Shape expected{static_cast<std::size_t>(config_.input_channels),
                       static_cast<std::size_t>(config_.tile_h),
                       static_cast<std::size_t>(config_.tile_w)};
  if (input.shape() != expected) {
    throw DomainError("network input " + shape_string(input.shape()) +
                      " does not match the configured tile " + shape_string(expected));
  }
  Output out;
  for (const Tensor<T>& p : params_) out.params.push_back(tape.leaf(p));

  std::size_t k = 0;
  ad::Var x = tape.constant(input);
  std::vector<ad::Var> skips;
  for (int l = 0; l < config_.depth; ++l) {
    x = ad::relu(tape, conv(tape, out, k, x));
    x = ad::relu(tape, conv(tape, out, k + 2, x));
    k += 4;
    skips.push_back(x);
    x = ad::maxpool2x2(tape, x);
  }
  x = ad::relu(tape, conv(tape, out, k, x));
  x = ad::relu(tape, conv(tape, out, k + 2, x));
  k += 4;
  for (int l = config_.depth - 1; l >= 0; --l) {
    x = ad::upsample2x(tape, x);
    if (level_maps_[l].extent(0) > 0) {
      const std::array<ad::Var, 2> parts{x, tape.constant(level_maps_[l])};
      x = ad::concat<T>(tape, parts);
    }
    x = ad::relu(tape, conv(tape, out, k, x));
    const std::array<ad::Var, 2> merged{x, skips[l]};
    x = ad::relu(tape, conv(tape, out, k + 2, ad::concat<T>(tape, merged)));
    k += 4;
  }
  const ad::Var head = conv(tape, out, k, x);
  const auto n = static_cast<std::size_t>(config_.embedding_dim);
  out.embedding = ad::slice_channels(tape, head, 0, n);
  out.fg_logits = ad::slice_channels(tape, head, n, n + 1);
  return out;
}

template <typename T>
Tensor<T> SinUNet<T>::prepare_input(const Image& image, int channels) {
  const Image img = convert_channels(image, channels);
  Tensor<T> out(Shape{static_cast<std::size_t>(channels), static_cast<std::size_t>(img.height),
                      static_cast<std::size_t>(img.width)});
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out[i] = static_cast<T>(img.data[i]) - static_cast<T>(0.5);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training and inference

bool Checkpoint::operator==(const Checkpoint& o) const {
  return config == o.config && seed == o.seed && epoch == o.epoch &&
         guide_hash == o.guide_hash && names == o.names && params == o.params &&
         adam.m == o.adam.m && adam.v == o.adam.v && adam.step == o.adam.step &&
         nlohmann::json(train_json(train)) == nlohmann::json(train_json(o.train));
}

TrainResult train(const std::vector<Sample>& dataset, const GuideSet& guides,
                  const SinUNetConfig& config, const TrainConfig& tc, std::uint64_t seed,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (guides.n() != static_cast<std::size_t>(config.embedding_dim)) {
    throw ConfigError("guide set has " + std::to_string(guides.n()) +
                      " guides but the network regresses " +
                      std::to_string(config.embedding_dim) + " channels");
  }
  if (dataset.empty()) throw ConfigError("training dataset is empty");
  if (tc.epochs < 0 || tc.batch_size < 1 || !(tc.learning_rate > 0.0)) {
    throw ConfigError("invalid training schedule");
  }

  SinUNet<float> net(config, guides, seed);
  std::mt19937_64 rng(mix(seed ^ 0x5EEDF00DULL));
  ad::AdamState<float> adam;
  const ad::AdamOptions opts{tc.learning_rate};
  const Frame tile = config.tile();
  const float lambda = static_cast<float>(tc.fg_weight);

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  std::vector<Tensor<float>> accum;
  for (const auto& p : net.parameters()) accum.emplace_back(p.shape(), 0.0f);

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double l1_sum = 0.0, bce_sum = 0.0, total_sum = 0.0;
    std::size_t l1_count = 0, seen = 0;

    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      for (auto& a : accum) a.fill(0.0f);
      std::size_t used = 0;
      for (std::size_t b = start; b < end; ++b) {
        const std::uint64_t aug_seed = rng();
        const Sample s = augment(dataset[order[b]], tile, tc.augment, aug_seed);
        const TargetField target = build_targets(s.label, guides);

        ad::Tape<float> tape;
        const auto out =
            net.forward(tape, SinUNet<float>::prepare_input(s.image, config.input_channels));
        Tensor<float> fg3(Shape{1, target.fg.extent(0), target.fg.extent(1)},
                          std::vector<float>(target.fg.data().begin(), target.fg.data().end()));
        const ad::Var bce = ad::bce_loss(tape, out.fg_logits, fg3);
        ad::Var total = ad::scale(tape, bce, lambda);

        const Tensor<float> mask =
            tc.full_mask ? Tensor<float>(target.fg.shape(), 1.0f) : target.fg;
        bool has_l1 = false;
        for (float m : mask.data()) has_l1 |= m != 0.0f;
        if (has_l1) {
          const ad::Var tgt = tape.constant(target.embedding);
          const ad::Var l1 = ad::l1_loss(tape, out.embedding, tgt, mask);
          total = ad::add(tape, l1, total);
          l1_sum += tape.value(l1).item();
          ++l1_count;
        }
        bce_sum += tape.value(bce).item();
        total_sum += tape.value(total).item();
        ++seen;
        if (!has_l1 && lambda == 0.0f) continue;

        tape.backward(total);
        for (std::size_t i = 0; i < accum.size(); ++i) {
          const Tensor<float> g = tape.grad(out.params[i]);
          for (std::size_t k = 0; k < g.size(); ++k) accum[i][k] += g[k];
        }
        ++used;
      }
      if (used == 0) continue;
      const float inv = 1.0f / static_cast<float>(used);
      for (auto& a : accum) {
        for (float& v : a.data()) v *= inv;
      }
      ad::adam_step<float>(net.parameters(), accum, adam, opts);
    }

    LossRecord rec;
    rec.epoch = epoch;
    rec.l1 = l1_count ? l1_sum / static_cast<double>(l1_count) : 0.0;
    rec.bce = seen ? bce_sum / static_cast<double>(seen) : 0.0;
    rec.total = seen ? total_sum / static_cast<double>(seen) : 0.0;
    result.curve.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  Checkpoint& ck = result.checkpoint;
  ck.config = config;
  ck.train = tc;
  ck.seed = seed;
  ck.epoch = tc.epochs;
  ck.guide_hash = guide_hash(guides);
  ck.names = net.parameter_names();
  ck.params = net.parameters();
  ck.adam = std::move(adam);
  return result;
}

SinUNet<float> network_from_checkpoint(const Checkpoint& checkpoint, const GuideSet& guides) {
  if (checkpoint.guide_hash != guide_hash(guides)) {
    throw ConfigError("checkpoint was trained with a different guide set");
  }
  if (guides.n() != static_cast<std::size_t>(checkpoint.config.embedding_dim)) {
    throw ConfigError("guide set size does not match the checkpoint embedding size");
  }
  SinUNet<float> net(checkpoint.config, guides, checkpoint.seed);
  if (net.parameter_names() != checkpoint.names ||
      net.parameters().size() != checkpoint.params.size()) {
    throw ConfigError("checkpoint parameters do not match its network configuration");
  }
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    if (checkpoint.params[i].shape() != net.parameters()[i].shape()) {
      throw ConfigError("checkpoint tensor " + checkpoint.names[i] + " has the wrong shape");
    }
    net.parameters()[i] = checkpoint.params[i];
  }
  return net;
}

Prediction infer(const Image& image, const Checkpoint& checkpoint, const GuideSet& guides) {
  const SinUNet<float> net = network_from_checkpoint(checkpoint, guides);
  if (image.frame() != checkpoint.config.tile()) {
    throw DomainError("infer: image must match the network tile size");
  }
  ad::Tape<float> tape;
  const auto out = net.forward(
      tape, SinUNet<float>::prepare_input(image, checkpoint.config.input_channels));
  Prediction p;
  p.embedding = tape.value(out.embedding);
  const Tensor<float>& logits = tape.value(out.fg_logits);
  p.fg_prob = Tensor<float>(Shape{logits.extent(1), logits.extent(2)});
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p.fg_prob[i] = 1.0f / (1.0f + std::exp(-logits[i]));
  }
  return p;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ostringstream os(std::ios::binary);
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kCheckpointVersion);
  nlohmann::ordered_json meta;
  meta["network"] = network_json(ck.config);
  meta["train"] = train_json(ck.train);
  meta["seed"] = ck.seed;
  meta["epoch"] = ck.epoch;
  meta["adam_step"] = ck.adam.step;
  const std::string text = meta.dump();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  os.write(reinterpret_cast<const char*>(ck.guide_hash.data()), 32);

  const bool with_adam = !ck.adam.m.empty();
  const std::size_t count = ck.params.size() * (with_adam ? 3 : 1);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(count));
  for (std::size_t i = 0; i < ck.params.size(); ++i) write_tensor(os, ck.names[i], ck.params[i]);
  if (with_adam) {
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      write_tensor(os, "adam.m/" + ck.names[i], ck.adam.m[i]);
    }
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
      write_tensor(os, "adam.v/" + ck.names[i], ck.adam.v[i]);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  const std::string bytes = os.str();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError(path.string() + " is not a checkpoint file");
  }
  if (read_pod<std::uint32_t>(is) != kCheckpointVersion) {
    throw DataError("unsupported checkpoint format_version");
  }
  const auto len = read_pod<std::uint32_t>(is);
  std::string text(len, '\0');
  is.read(text.data(), len);
  Checkpoint ck;
  try {
    const auto meta = nlohmann::json::parse(text);
    ck.config = network_from_json(meta.at("network"));
    ck.train = train_from_json(meta.at("train"));
    ck.seed = meta.at("seed").get<std::uint64_t>();
    ck.epoch = meta.at("epoch").get<int>();
    ck.adam.step = meta.at("adam_step").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header is malformed: ") + e.what());
  }
  is.read(reinterpret_cast<char*>(ck.guide_hash.data()), 32);
  const auto count = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, tensor] = read_tensor(is);
    if (name.rfind("adam.m/", 0) == 0) {
      ck.adam.m.push_back(std::move(tensor));
    } else if (name.rfind("adam.v/", 0) == 0) {
      ck.adam.v.push_back(std::move(tensor));
    } else {
      ck.names.push_back(std::move(name));
      ck.params.push_back(std::move(tensor));
    }
  }
  if ((!ck.adam.m.empty() && ck.adam.m.size() != ck.params.size()) ||
      ck.adam.m.size() != ck.adam.v.size()) {
    throw DataError("checkpoint optimizer state is incomplete");
  }
  return ck;
}

std::string loss_curve_csv(const std::vector<LossRecord>& curve) {
  std::ostringstream os;
  os.precision(9);
  os << "epoch,l1,bce,total\n";
  for (const LossRecord& r : curve) {
    os << r.epoch << ',' << r.l1 << ',' << r.bce << ',' << r.total << '\n';
  }
  return os.str();
}

std::string to_json(const SinUNetConfig& config) { return network_json(config).dump(2); }

SinUNetConfig network_config_from_json(std::string_view text) {
  try {
    return network_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("network config is malformed: ") + e.what());
  }
}

template Tensor<float> guide_maps<float>(const GuideSet&, std::size_t, std::size_t, int, Frame);
template Tensor<double> guide_maps<double>(const GuideSet&, std::size_t, std::size_t, int, Frame);
template Tensor<float> coord_maps<float>(std::size_t, std::size_t, int, Frame);
template Tensor<double> coord_maps<double>(std::size_t, std::size_t, int, Frame);
template ad::Var sinconv<float>(ad::Tape<float>&, ad::Var, const GuideSet&, int, Frame,
                                ad::Var, ad::Var);
template ad::Var sinconv<double>(ad::Tape<double>&, ad::Var, const GuideSet&, int, Frame,
                                 ad::Var, ad::Var);
template class SinUNet<float>;
template class SinUNet<double>;

}  // namespace hseg
