#include "run_config.hpp"

#include <fstream>
#include <sstream>

#include "hseg/error.hpp"
#include "json.hpp"

namespace hseg::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string metric_name(Metric m) { return m == Metric::kL1 ? "l1" : "euclidean"; }

Metric metric_from_name(const std::string& s) {
  if (s == "l1") return Metric::kL1;
  if (s == "euclidean") return Metric::kEuclidean;
  throw ConfigError("unknown metric '" + s + "' (expected l1 or euclidean)");
}

Json to_tree(const RunConfig& c) {
  const SynthConfig& s = c.synth;
  const GuideFitConfig& g = c.guides;
  const SinUNetConfig& n = c.network;
  const TrainConfig& t = c.train;
  const InferConfig& i = c.infer;
  Json j;
  j["synth"] = {{"kind", to_string(s.kind)},
                {"width", s.width},
                {"height", s.height},
                {"num_images", s.num_images},
                {"count_min", s.count_min},
                {"count_max", s.count_max},
                {"size_min", s.size_min},
                {"size_max", s.size_max},
                {"overlap", s.overlap},
                {"min_area", s.min_area},
                {"gap", s.gap},
                {"background", s.background},
                {"intensity_min", s.intensity_min},
                {"intensity_max", s.intensity_max},
                {"noise_sigma", s.noise_sigma}};
  j["guides"] = {{"n", g.n},
                 {"margin", g.margin},
                 {"learning_rate", g.learning_rate},
                 {"batch_pairs", g.batch_pairs},
                 {"max_iters", g.max_iters},
                 {"sweep_every", g.sweep_every},
                 {"init_freq_max", g.init_freq_max}};
  j["network"] = {{"depth", n.depth},
                  {"base_channels", n.base_channels},
                  {"embedding_dim", n.embedding_dim},
                  {"input_channels", n.input_channels},
                  {"sinconv", n.sinconv},
                  {"coordconv", n.coordconv},
                  {"tile_w", n.tile_w},
                  {"tile_h", n.tile_h}};
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"fg_weight", t.fg_weight},
                {"full_mask", t.full_mask},
                {"augment",
                 {{"enabled", t.augment.enabled},
                  {"scale_min", t.augment.scale_min},
                  {"scale_max", t.augment.scale_max},
                  {"flip", t.augment.flip}}}};
  j["infer"] = {{"fg_threshold", i.fg_threshold},
                {"bandwidth", i.bandwidth},
                {"metric", metric_name(i.metric)},
                {"min_size", i.min_size},
                {"max_seeds", i.max_seeds}};
  return j;
}

RunConfig from_tree(const Json& j) {
  RunConfig c;
  const Json& s = j.at("synth");
  c.synth.kind = synth_kind_from_string(s.at("kind").get<std::string>());
  c.synth.width = s.at("width").get<int>();
  c.synth.height = s.at("height").get<int>();
  c.synth.num_images = s.at("num_images").get<int>();
  c.synth.count_min = s.at("count_min").get<int>();
  c.synth.count_max = s.at("count_max").get<int>();
  c.synth.size_min = s.at("size_min").get<double>();
  c.synth.size_max = s.at("size_max").get<double>();
  c.synth.overlap = s.at("overlap").get<double>();
  c.synth.min_area = s.at("min_area").get<int>();
  c.synth.gap = s.at("gap").get<int>();
  c.synth.background = s.at("background").get<double>();
  c.synth.intensity_min = s.at("intensity_min").get<double>();
  c.synth.intensity_max = s.at("intensity_max").get<double>();
  c.synth.noise_sigma = s.at("noise_sigma").get<double>();

  const Json& g = j.at("guides");
  c.guides.n = g.at("n").get<int>();
  c.guides.margin = g.at("margin").get<double>();
  c.guides.learning_rate = g.at("learning_rate").get<double>();
  c.guides.batch_pairs = g.at("batch_pairs").get<int>();
  c.guides.max_iters = g.at("max_iters").get<int>();
  c.guides.sweep_every = g.at("sweep_every").get<int>();
  c.guides.init_freq_max = g.at("init_freq_max").get<double>();

  const Json& n = j.at("network");
  c.network.depth = n.at("depth").get<int>();
  c.network.base_channels = n.at("base_channels").get<int>();
  c.network.embedding_dim = n.at("embedding_dim").get<int>();
  c.network.input_channels = n.at("input_channels").get<int>();
  c.network.sinconv = n.at("sinconv").get<bool>();
  c.network.coordconv = n.at("coordconv").get<bool>();
  c.network.tile_w = n.at("tile_w").get<int>();
  c.network.tile_h = n.at("tile_h").get<int>();

  const Json& t = j.at("train");
  c.train.epochs = t.at("epochs").get<int>();
  c.train.batch_size = t.at("batch_size").get<int>();
  c.train.learning_rate = t.at("learning_rate").get<double>();
  c.train.fg_weight = t.at("fg_weight").get<double>();
  c.train.full_mask = t.at("full_mask").get<bool>();
  const Json& a = t.at("augment");
  c.train.augment.enabled = a.at("enabled").get<bool>();
  c.train.augment.scale_min = a.at("scale_min").get<double>();
  c.train.augment.scale_max = a.at("scale_max").get<double>();
  c.train.augment.flip = a.at("flip").get<bool>();

  const Json& i = j.at("infer");
  c.infer.fg_threshold = i.at("fg_threshold").get<double>();
  c.infer.bandwidth = i.at("bandwidth").get<double>();
  c.infer.metric = metric_from_name(i.at("metric").get<std::string>());
  c.infer.min_size = i.at("min_size").get<std::size_t>();
  c.infer.max_seeds = i.at("max_seeds").get<std::size_t>();
  return c;
}

// Overlays `patch` onto `base`, rejecting keys that `base` does not have.
void overlay(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (base[key].is_object()) {
      overlay(base[key], value, path);
    } else {
      base[key] = value;
    }
  }
}

Json parse_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded()) return Json(text);
  return v;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides) {
  Json tree = to_tree(RunConfig{});
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    Json patch = Json::parse(in, nullptr, false);
    if (patch.is_discarded()) throw ConfigError(file.string() + " is not valid JSON");
    overlay(tree, patch, "");
  }
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + item + "' is not key=value");
    }
    Json patch = parse_value(item.substr(eq + 1));
    const std::string key = item.substr(0, eq);
    std::string::size_type start = 0, dot;
    std::vector<std::string> parts;
    while ((dot = key.find('.', start)) != std::string::npos) {
      parts.push_back(key.substr(start, dot - start));
      start = dot + 1;
    }
    parts.push_back(key.substr(start));
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = Json{{*it, patch}};
    overlay(tree, patch, "");
  }
  try {
    RunConfig config = from_tree(tree);
    config.synth.validate();
    config.network.validate();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

std::string to_json(const RunConfig& config) {
  Json j = to_tree(config);
  j["seed"] = config.seed;
  return j.dump(2) + "\n";
}

}  // namespace hseg::cli
