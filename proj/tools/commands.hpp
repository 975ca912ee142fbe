#pragma once

#include <filesystem>
#include <string>

#include "run_config.hpp"

namespace hseg::cli {

namespace fs = std::filesystem;

// Exit codes shared by all commands.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNotConverged = 3 };

int cmd_synth(const RunConfig& config, const fs::path& out_dir);

struct FitGuidesArgs {
  fs::path dataset;
  fs::path out;
  fs::path trace_csv;  // optional
  bool strict = false;
};
int cmd_fit_guides(const RunConfig& config, const FitGuidesArgs& args);

struct TrainArgs {
  fs::path dataset;
  fs::path guides;  // written instead of read for the sampled-guide ablations
  fs::path out;
  fs::path loss_csv;  // defaults to <out stem>.loss.csv next to the checkpoint
  std::string ablation;  // "", no-guide, coordconv, random, low, high
};
int cmd_train(const RunConfig& config, const TrainArgs& args);

struct InferArgs {
  fs::path input;  // PNG file, directory of PNGs, or dataset directory
  fs::path checkpoint;
  fs::path guides;
  fs::path out_dir;
  int tile_w = 0;  // 0 takes the checkpoint tile
  int tile_h = 0;
  fs::path fg_mask;  // optional label PNG or directory; non-zero marks foreground
};
int cmd_infer(const RunConfig& config, const InferArgs& args);

struct EvalArgs {
  fs::path pred_dir;
  fs::path gt_dir;
  fs::path report;  // JSON; a per-image CSV is written next to it
  std::string metric = "all";  // sbd, dic, ap, all
  bool per_crop = false;
  int crop_w = 128;
  int crop_h = 128;
};
int cmd_eval(const EvalArgs& args);

struct RenderArgs {
  fs::path image;
  fs::path labels;
  fs::path out;
  double alpha = 0.5;
};
int cmd_render(const RenderArgs& args);

// Worker count from HSEG_THREADS (default: hardware concurrency).
unsigned worker_count();

}  // namespace hseg::cli
