#include "hseg/guides.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "hseg/error.hpp"
#include "json.hpp"

namespace hseg {

namespace {

constexpr int kFormatVersion = 1;

double sign(double v) { return (v > 0.0) - (v < 0.0); }

void check_frame(Frame frame) {
  if (frame.width <= 0 || frame.height <= 0) {
    throw DomainError("guide frame must have positive width and height");
  }
}

// Pixel coordinates pre-divided by the frame extents.
struct NormalizedObject {
  std::vector<double> u;
  std::vector<double> v;
};

NormalizedObject normalize(const PixelSet& set) {
  check_frame(set.frame);
  if (set.pixels.empty()) throw DomainError("pixel set is empty");
  NormalizedObject out;
  out.u.reserve(set.pixels.size());
  out.v.reserve(set.pixels.size());
  const double inv_w = 1.0 / set.frame.width;
  const double inv_h = 1.0 / set.frame.height;
  for (const Pixel& p : set.pixels) {
    out.u.push_back(p.x * inv_w);
    out.v.push_back(p.y * inv_h);
  }
  return out;
}

// Embedding plus its derivative w.r.t. each guide's (freq_x, freq_y, phase).
struct EmbeddingJet {
  std::vector<double> value;
  std::vector<GuideParams> d;
};

EmbeddingJet embed_with_derivatives(const NormalizedObject& obj,
                                    std::span<const GuideParams> params) {
  EmbeddingJet jet;
  jet.value.assign(params.size(), 0.0);
  jet.d.assign(params.size(), GuideParams{});
  const std::size_t count = obj.u.size();
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const GuideParams& g = params[i];
    double s_sum = 0.0, cu = 0.0, cv = 0.0, c_sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double a = g.freq_x * obj.u[k] + g.freq_y * obj.v[k] + g.phase;
      const double s = std::sin(a);
      const double c = std::cos(a);
      s_sum += s;
      cu += c * obj.u[k];
      cv += c * obj.v[k];
      c_sum += c;
    }
    jet.value[i] = s_sum * inv;
    jet.d[i] = {cu * inv, cv * inv, c_sum * inv};
  }
  return jet;
}

std::vector<double> embed(const NormalizedObject& obj,
                          std::span<const GuideParams> params) {
  std::vector<double> out(params.size(), 0.0);
  const double inv = 1.0 / static_cast<double>(obj.u.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const GuideParams& g = params[i];
    double s_sum = 0.0;
    for (std::size_t k = 0; k < obj.u.size(); ++k) {
      s_sum += std::sin(g.freq_x * obj.u[k] + g.freq_y * obj.v[k] + g.phase);
    }
    out[i] = s_sum * inv;
  }
  return out;
}

// Accumulates d hinge / d params into `grad` (scaled by `weight`); returns
// the hinge value.
double accumulate_pair_gradient(const EmbeddingJet& a, const EmbeddingJet& b,
                                double margin, double weight,
                                std::span<GuideParams> grad) {
  const double loss = pair_hinge(a.value, b.value, margin);
  if (loss <= 0.0) return 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double s = sign(a.value[i] - b.value[i]);
    if (s == 0.0) continue;
    grad[i].freq_x -= weight * s * (a.d[i].freq_x - b.d[i].freq_x);
    grad[i].freq_y -= weight * s * (a.d[i].freq_y - b.d[i].freq_y);
    grad[i].phase -= weight * s * (a.d[i].phase - b.d[i].phase);
  }
  return loss;
}

struct ImageObjects {
  std::size_t image = 0;
  std::vector<InstanceId> ids;
  std::vector<NormalizedObject> objects;
};

std::vector<ImageObjects> collect_objects(std::span<const LabelMap> maps) {
  std::vector<ImageObjects> out;
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const LabelMap& map = maps[m];
    ImageObjects io;
    io.image = m;
    for (auto& [id, pixels] : instance_pixels(map)) {
      io.ids.push_back(id);
      io.objects.push_back(normalize(PixelSet{std::move(pixels), map.frame()}));
    }
    out.push_back(std::move(io));
  }
  return out;
}

double sweep(const std::vector<ImageObjects>& images,
             std::span<const GuideParams> params, double margin) {
  double total = 0.0;
  for (const ImageObjects& io : images) {
    const std::size_t k = io.objects.size();
    if (k < 2) continue;
    std::vector<std::vector<double>> emb;
    emb.reserve(k);
    for (const auto& obj : io.objects) emb.push_back(embed(obj, params));
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        sum += pair_hinge(emb[i], emb[j], margin);
      }
    }
    total += sum / static_cast<double>(k * (k - 1) / 2);
  }
  return total;
}

double uniform_open(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  double v = dist(rng);
  while (v <= lo) v = dist(rng);
  return v;
}

std::vector<GuideParams> random_params(int n, double freq_lo, double freq_hi,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<GuideParams> out(static_cast<std::size_t>(n));
  for (GuideParams& g : out) {
    g.freq_x = uniform_open(rng, freq_lo, freq_hi);
    g.freq_y = uniform_open(rng, freq_lo, freq_hi);
    g.phase = phase(rng);
  }
  return out;
}

}  // namespace

GuideSet::GuideSet(std::vector<GuideParams> params, double margin, std::uint64_t seed)
    : params_(std::move(params)), margin_(margin), seed_(seed) {
  if (params_.empty()) throw DomainError("guide set needs at least one guide");
  if (!(margin_ > 0.0) || !std::isfinite(margin_)) {
    throw DomainError("guide margin must be positive");
  }
  for (const GuideParams& g : params_) {
    if (!std::isfinite(g.freq_x) || !std::isfinite(g.freq_y) ||
        !std::isfinite(g.phase)) {
      throw DomainError("guide parameters must be finite");
    }
  }
}

double eval_guide(const GuideParams& g, double x, double y, Frame frame) {
  check_frame(frame);
  return std::sin(g.freq_x * x / frame.width + g.freq_y * y / frame.height + g.phase);
}

ObjectEmbedding guided_embedding(const PixelSet& set, const GuideSet& guides) {
  return embed(normalize(set), guides.params());
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("embedding length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

double pair_hinge(std::span<const double> a, std::span<const double> b,
                  double margin) {
  return std::max(0.0, margin - l1_distance(a, b));
}

HingeGradient hinge_gradient(const PixelSet& a, const PixelSet& b,
                             const GuideSet& guides) {
  const EmbeddingJet ja = embed_with_derivatives(normalize(a), guides.params());
  const EmbeddingJet jb = embed_with_derivatives(normalize(b), guides.params());
  HingeGradient out;
  out.d.assign(guides.n(), GuideParams{});
  out.loss = accumulate_pair_gradient(ja, jb, guides.margin(), 1.0, out.d);
  return out;
}

double sweep_loss(std::span<const LabelMap> maps, const GuideSet& guides) {
  return sweep(collect_objects(maps), guides.params(), guides.margin());
}

FitResult fit_guides(std::span<const LabelMap> train, const GuideFitConfig& config,
                     std::uint64_t seed) {
  if (config.n < 1) throw ConfigError("guide count must be >= 1");
  if (!(config.margin > 0.0)) throw ConfigError("margin must be positive");
  if (config.batch_pairs < 1 || config.sweep_every < 1 || config.max_iters < 0) {
    throw ConfigError("invalid guide fit schedule");
  }

  const std::vector<ImageObjects> all = collect_objects(train);
  std::vector<const ImageObjects*> eligible;
  for (const ImageObjects& io : all) {
    if (io.objects.size() >= 2) eligible.push_back(&io);
  }
  if (eligible.empty()) {
    throw UnsatisfiableInputError(
        "guide fitting needs at least one image with two or more instances");
  }

  std::mt19937_64 rng(seed);
  std::vector<GuideParams> params =
      random_params(config.n, 0.0, config.init_freq_max, rng);
  std::vector<GuideParams> best = params;

  FitResult result;
  double best_loss = sweep(all, params, config.margin);
  double batch_avg = best_loss;
  result.trace.push_back({0, batch_avg, best_loss, best_loss});

  std::uniform_int_distribution<std::size_t> pick_image(0, eligible.size() - 1);
  std::vector<GuideParams> grad(params.size());
  const double weight = 1.0 / config.batch_pairs;

  int iter = 0;
  while (best_loss > 0.0 && iter < config.max_iters) {
    std::fill(grad.begin(), grad.end(), GuideParams{});
    double batch_loss = 0.0;
    for (int b = 0; b < config.batch_pairs; ++b) {
      const ImageObjects& io = *eligible[pick_image(rng)];
      const std::size_t k = io.objects.size();
      std::size_t i = std::uniform_int_distribution<std::size_t>(0, k - 1)(rng);
      std::size_t j = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
      if (j >= i) ++j;
      const EmbeddingJet ja = embed_with_derivatives(io.objects[i], params);
      const EmbeddingJet jb = embed_with_derivatives(io.objects[j], params);
      batch_loss += accumulate_pair_gradient(ja, jb, config.margin, weight, grad);
    }
    batch_loss *= weight;
    for (std::size_t g = 0; g < params.size(); ++g) {
      params[g].freq_x -= config.learning_rate * grad[g].freq_x;
      params[g].freq_y -= config.learning_rate * grad[g].freq_y;
      params[g].phase -= config.learning_rate * grad[g].phase;
    }
    batch_avg = 0.98 * batch_avg + 0.02 * batch_loss;
    ++iter;

    if (iter % config.sweep_every == 0 || iter == config.max_iters) {
      const double loss = sweep(all, params, config.margin);
      if (loss < best_loss) {
        best_loss = loss;
        best = params;
      }
      result.trace.push_back({iter, batch_avg, loss, best_loss});
    }
  }

  result.guides = GuideSet(std::move(best), config.margin, seed);
  result.converged = best_loss == 0.0;
  result.iterations = iter;
  return result;
}

std::vector<Collision> collision_report(std::span<const LabelMap> maps,
                                        const GuideSet& guides) {
  std::vector<Collision> out;
  const std::vector<ImageObjects> all = collect_objects(maps);
  for (const ImageObjects& io : all) {
    std::vector<std::vector<double>> emb;
    for (const auto& obj : io.objects) emb.push_back(embed(obj, guides.params()));
    for (std::size_t i = 0; i < emb.size(); ++i) {
      for (std::size_t j = i + 1; j < emb.size(); ++j) {
        const double d = l1_distance(emb[i], emb[j]);
        if (d < guides.margin()) out.push_back({io.image, io.ids[i], io.ids[j], d});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Collision& a, const Collision& b) {
    return a.distance < b.distance;
  });
  return out;
}

GuideSet sample_guides(int n, double margin, double freq_lo, double freq_hi,
                       std::uint64_t seed) {
  if (n < 1) throw ConfigError("guide count must be >= 1");
  if (!(freq_hi > freq_lo)) throw ConfigError("empty frequency range");
  std::mt19937_64 rng(seed);
  return GuideSet(random_params(n, freq_lo, freq_hi, rng), margin, seed);
}

std::string to_json(const GuideSet& guides) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["n"] = guides.n();
  j["margin"] = guides.margin();
  j["seed"] = guides.seed();
  nlohmann::json params = nlohmann::json::array();
  for (const GuideParams& g : guides.params()) {
    params.push_back({{"freq_x", g.freq_x}, {"freq_y", g.freq_y}, {"phase", g.phase}});
  }
  j["params"] = std::move(params);
  return j.dump(2) + "\n";
}

GuideSet guides_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("guide file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw DataError("unsupported guide file format_version");
    }
    std::vector<GuideParams> params;
    for (const auto& p : j.at("params")) {
      params.push_back({p.at("freq_x").get<double>(), p.at("freq_y").get<double>(),
                        p.at("phase").get<double>()});
    }
    if (params.size() != j.at("n").get<std::size_t>()) {
      throw DataError("guide file: n does not match params length");
    }
    return GuideSet(std::move(params), j.at("margin").get<double>(),
                    j.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("guide file is missing fields: ") + e.what());
  } catch (const DomainError& e) {
    throw DataError(std::string("guide file holds an invalid guide set: ") + e.what());
  }
}

void save_guides(const GuideSet& guides, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << to_json(guides);
}

GuideSet load_guides(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return guides_from_json(ss.str());
}

std::array<std::uint8_t, 32> guide_hash(const GuideSet& guides) {
  const std::string text = to_json(guides);
  std::array<std::uint8_t, 32> out{};
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), out.data());
  return out;
}

}  // namespace hseg
