#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hseg/clustering.hpp"
#include "hseg/data.hpp"
#include "hseg/guides.hpp"
#include "hseg/network.hpp"

namespace hseg::cli {

struct InferConfig {
  double fg_threshold = 0.5;
  double bandwidth = 0.0;  // 0 uses the guide margin
  Metric metric = Metric::kEuclidean;
  std::size_t min_size = 16;
  std::size_t max_seeds = 4096;
};

struct RunConfig {
  std::uint64_t seed = 0;
  SynthConfig synth;
  GuideFitConfig guides;
  SinUNetConfig network;
  TrainConfig train;
  InferConfig infer;
};

// Defaults, overlaid by the optional JSON file, overlaid by `key=value`
// overrides with dotted keys ("train.epochs=20"). Values parse as JSON and
// fall back to plain strings. Unknown keys are a ConfigError.
RunConfig load_run_config(const std::filesystem::path& file,
                          const std::vector<std::string>& overrides);

std::string to_json(const RunConfig& config);

}  // namespace hseg::cli
