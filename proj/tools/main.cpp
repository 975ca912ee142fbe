#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "hseg/error.hpp"

using namespace hseg;
using namespace hseg::cli;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c, bool needs_seed) {
  app->add_option("--config", c.config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a config value, e.g. train.epochs=20");
  auto* seed = app->add_option("--seed", c.seed, "Random seed");
  if (needs_seed) seed->required();
}

RunConfig resolve(const Common& c) {
  RunConfig config = load_run_config(c.config_file, c.overrides);
  if (c.seed) config.seed = *c.seed;
  return config;
}

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ConfigError("expected WxH, got '" + s + "'");
  try {
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("expected WxH, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic-embedding instance segmentation"};
  app.require_subcommand(1);

  Common common;
  std::string out, dataset, guides, checkpoint, input, tile, fg_mask, trace, loss_csv, ablation;
  bool strict = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, common, true);
  synth->add_option("--out", out, "Output dataset directory")->required();

  auto* fit = app.add_subcommand("fit-guides", "Fit guide functions to a dataset");
  add_common(fit, common, true);
  fit->add_option("--data", dataset, "Dataset directory")->required();
  fit->add_option("--out", out, "Output guides JSON")->required();
  fit->add_option("--trace", trace, "Optional convergence trace CSV");
  fit->add_flag("--strict", strict, "Exit with code 3 unless the sweep loss reaches zero");

  auto* train = app.add_subcommand("train", "Train the embedding network");
  add_common(train, common, true);
  train->add_option("--data", dataset, "Dataset directory")->required();
  train->add_option("--guides", guides,
                    "Guides JSON (written, not read, for random/low/high ablations)")
      ->required();
  train->add_option("--out", out, "Output checkpoint")->required();
  train->add_option("--loss-csv", loss_csv, "Loss curve CSV (default: next to the checkpoint)");
  train->add_option("--ablation", ablation, "Ablation variant")
      ->check(CLI::IsMember({"no-guide", "coordconv", "random", "low", "high"}));

  auto* inf = app.add_subcommand("infer", "Predict instance label maps");
  add_common(inf, common, false);
  inf->add_option("--input", input, "Image, image directory or dataset directory")->required();
  inf->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  inf->add_option("--guides", guides, "Guides JSON used for training")->required();
  inf->add_option("--out", out, "Output directory")->required();
  inf->add_option("--tile", tile, "Tile size WxH (default: checkpoint tile)");
  inf->add_option("--fg-mask", fg_mask, "Foreground labels replacing the predicted mask");

  EvalArgs eval_args;
  std::string crop;
  auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  ev->add_option("--pred", eval_args.pred_dir, "Prediction directory")->required();
  ev->add_option("--gt", eval_args.gt_dir, "Ground-truth directory")->required();
  ev->add_option("--out", eval_args.report, "Report JSON")->required();
  ev->add_option("--metric", eval_args.metric, "sbd, dic, ap or all")
      ->check(CLI::IsMember({"sbd", "dic", "ap", "all"}));
  ev->add_flag("--per-crop", eval_args.per_crop, "Average SBD over non-overlapping crops");
  ev->add_option("--crop", crop, "Crop size WxH for --per-crop (default 128x128)");

  RenderArgs render_args;
  auto* render = app.add_subcommand("render", "Overlay a label map on an image");
  render->add_option("--image", render_args.image, "Input image")->required();
  render->add_option("--labels", render_args.labels, "Label map")->required();
  render->add_option("--out", render_args.out, "Output PNG")->required();
  render->add_option("--alpha", render_args.alpha, "Overlay opacity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(resolve(common), out);
    if (fit->parsed()) return cmd_fit_guides(resolve(common), {dataset, out, trace, strict});
    if (train->parsed()) {
      return cmd_train(resolve(common), {dataset, guides, out, loss_csv, ablation});
    }
    if (inf->parsed()) {
      InferArgs a{input, checkpoint, guides, out, 0, 0, fg_mask};
      if (!tile.empty()) std::tie(a.tile_w, a.tile_h) = parse_size(tile);
      return cmd_infer(resolve(common), a);
    }
    if (ev->parsed()) {
      if (!crop.empty()) std::tie(eval_args.crop_w, eval_args.crop_h) = parse_size(crop);
      return cmd_eval(eval_args);
    }
    if (render->parsed()) return cmd_render(render_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
