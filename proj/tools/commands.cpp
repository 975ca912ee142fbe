#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "hseg/clustering.hpp"
#include "hseg/error.hpp"
#include "hseg/metrics.hpp"
#include "json.hpp"

namespace hseg::cli {

namespace {

// Runs fn(i) for i in [0, count) on the worker pool. Callers write results
// into slot i, so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::vector<fs::path> png_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// A PNG file, a directory of PNGs, or a directory with a `sub` folder.
std::vector<fs::path> resolve_pngs(const fs::path& input, const char* sub) {
  if (fs::is_regular_file(input)) return {input};
  const fs::path root = fs::is_directory(input / sub) ? input / sub : input;
  std::vector<fs::path> files = png_files(root);
  if (files.empty()) throw DataError("no PNG files in " + root.string());
  return files;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.stem().string() + suffix);
}

// Maps a (W, H) frame onto whole tiles; pixels outside the image are zero.
struct TileGrid {
  int cols = 0;
  int rows = 0;
};

TileGrid grid_for(Frame frame, int tw, int th) {
  return {(frame.width + tw - 1) / tw, (frame.height + th - 1) / th};
}

struct ImagePrediction {
  LabelMap labels;
  std::vector<double> scores;  // scores[k] belongs to id k + 1
};

ImagePrediction predict_image(const Image& image, const LabelMap* fg_mask,
                              const Checkpoint& checkpoint, const GuideSet& guides,
                              const InferConfig& infer_config, int tw, int th) {
  ClusterOptions options;
  options.shift.bandwidth = infer_config.bandwidth > 0.0 ? infer_config.bandwidth : guides.margin();
  options.shift.metric = infer_config.metric;
  options.min_size = infer_config.min_size;
  options.max_seeds = infer_config.max_seeds;

  ImagePrediction out;
  out.labels = LabelMap(image.width, image.height);
  std::vector<double> tile_scores;
  const TileGrid grid = grid_for(image.frame(), tw, th);
  InstanceId offset = 0;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const int x0 = c * tw, y0 = r * th;
      const Prediction p = infer(crop(image, x0, y0, tw, th), checkpoint, guides);
      Tensor<float> fg({static_cast<std::size_t>(th), static_cast<std::size_t>(tw)});
      for (int y = 0; y < th; ++y) {
        for (int x = 0; x < tw; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * tw + x;
          bool on;
          if (fg_mask) {
            on = x0 + x < image.width && y0 + y < image.height && (*fg_mask)(x0 + x, y0 + y) != 0;
          } else {
            on = p.fg_prob.data()[i] > infer_config.fg_threshold;
          }
          fg.data()[i] = on ? 1.0f : 0.0f;
        }
      }
      const ClusterResult cluster = extract_instances(p.embedding, fg, options);
      for (int y = 0; y < th && y0 + y < image.height; ++y) {
        for (int x = 0; x < tw && x0 + x < image.width; ++x) {
          const InstanceId id = cluster.labels(x, y);
          if (id) out.labels(x0 + x, y0 + y) = id + offset;
        }
      }
      tile_scores.insert(tile_scores.end(), cluster.scores.begin(), cluster.scores.end());
      offset += static_cast<InstanceId>(cluster.scores.size());
    }
  }

  // Instances that only covered padding leave gaps; close them, keeping order.
  std::vector<InstanceId> remap(tile_scores.size() + 1, 0);
  for (InstanceId id : out.labels.ids()) {
    if (id) remap[id] = 1;
  }
  InstanceId next = 1;
  for (std::size_t id = 1; id < remap.size(); ++id) {
    if (remap[id]) {
      remap[id] = next++;
      out.scores.push_back(tile_scores[id - 1]);
    }
  }
  for (InstanceId& id : out.labels.ids()) id = remap[id];
  return out;
}

// scores.csv rows: image,id,score,area
std::map<std::string, std::vector<double>> read_scores(const fs::path& path) {
  std::map<std::string, std::vector<double>> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string name, id, score;
    if (!std::getline(row, name, ',') || !std::getline(row, id, ',') ||
        !std::getline(row, score, ',')) {
      throw DataError("malformed row in " + path.string() + ": " + line);
    }
    auto& v = out[name];
    const std::size_t k = std::stoul(id);
    if (k == 0) throw DataError("instance id 0 in " + path.string());
    if (v.size() < k) v.resize(k, 1.0);
    v[k - 1] = std::stod(score);
  }
  return out;
}

std::array<std::uint8_t, 3> palette(InstanceId id) {
  // Golden-angle hue steps keep neighbouring ids apart.
  const double hue = std::fmod(static_cast<double>(id) * 137.50776405, 360.0) / 60.0;
  const double s = 0.75, v = 0.95;
  const double f = hue - std::floor(hue);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  double rgb[3];
  switch (static_cast<int>(hue) % 6) {
    case 0: rgb[0] = v, rgb[1] = t, rgb[2] = p; break;
    case 1: rgb[0] = q, rgb[1] = v, rgb[2] = p; break;
    case 2: rgb[0] = p, rgb[1] = v, rgb[2] = t; break;
    case 3: rgb[0] = p, rgb[1] = q, rgb[2] = v; break;
    case 4: rgb[0] = t, rgb[1] = p, rgb[2] = v; break;
    default: rgb[0] = v, rgb[1] = p, rgb[2] = q; break;
  }
  return {static_cast<std::uint8_t>(std::lround(rgb[0] * 255)),
          static_cast<std::uint8_t>(std::lround(rgb[1] * 255)),
          static_cast<std::uint8_t>(std::lround(rgb[2] * 255))};
}

}  // namespace

unsigned worker_count() {
  if (const char* env = std::getenv("HSEG_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
    throw ConfigError("HSEG_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_synth(const RunConfig& config, const fs::path& out_dir) {
  SynthConfig sc = config.synth;
  sc.seed = config.seed;
  sc.validate();
  std::vector<Sample> samples(static_cast<std::size_t>(sc.num_images));
  parallel_for(samples.size(), [&](std::size_t i) { samples[i] = synth_one(sc, i); });
  write_dataset(samples, sc, out_dir);
  std::cerr << "wrote " << samples.size() << " images to " << out_dir.string() << "\n";
  return kOk;
}

int cmd_fit_guides(const RunConfig& config, const FitGuidesArgs& args) {
  require_exists(args.dataset, "dataset");
  const std::vector<LabelMap> maps = read_label_dir(args.dataset);
  if (maps.empty()) throw DataError("no label maps in " + args.dataset.string());
  const FitResult fit = fit_guides(maps, config.guides, config.seed);
  save_guides(fit.guides, args.out);
  if (!args.trace_csv.empty()) {
    std::ostringstream os;
    os << "iteration,batch_loss_avg,sweep_loss,best_sweep_loss\n";
    for (const FitTracePoint& t : fit.trace) {
      os << t.iteration << ',' << fmt(t.batch_loss_avg) << ',' << fmt(t.sweep_loss) << ','
         << fmt(t.best_sweep_loss) << '\n';
    }
    write_text(args.trace_csv, os.str());
  }
  const double loss = fit.trace.empty() ? 0.0 : fit.trace.back().best_sweep_loss;
  std::cerr << "fit-guides: " << fit.iterations << " iterations, sweep loss " << loss << ", "
            << collision_report(maps, fit.guides).size() << " colliding pairs\n";
  if (!fit.converged && args.strict) return kNotConverged;
  return kOk;
}

int cmd_train(const RunConfig& config, const TrainArgs& args) {
  require_exists(args.dataset, "dataset");
  SinUNetConfig net = config.network;
  GuideSet guides;
  const std::string& a = args.ablation;
  if (a == "random" || a == "low" || a == "high") {
    const double lo = a == "high" ? 45.0 : 0.0;
    const double hi = a == "low" ? 5.0 : 50.0;
    guides = sample_guides(config.guides.n, config.guides.margin, lo, hi, config.seed);
    save_guides(guides, args.guides);
  } else {
    require_exists(args.guides, "guides file");
    guides = load_guides(args.guides);
    if (a == "no-guide") {
      net.sinconv = false;
      net.coordconv = false;
    } else if (a == "coordconv") {
      net.coordconv = true;
    } else if (!a.empty()) {
      throw ConfigError("unknown ablation '" + a + "'");
    }
  }
  net.embedding_dim = static_cast<int>(guides.n());

  const std::vector<Sample> dataset = read_dataset(args.dataset);
  if (dataset.empty()) throw DataError("no samples in " + args.dataset.string());
  const TrainResult result =
      train(dataset, guides, net, config.train, config.seed, [](const LossRecord& r) {
        std::cerr << "epoch " << r.epoch << " l1 " << r.l1 << " bce " << r.bce << "\n";
      });
  if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
  save_checkpoint(result.checkpoint, args.out);
  write_text(args.loss_csv.empty() ? sibling(args.out, ".loss.csv") : args.loss_csv,
             loss_curve_csv(result.curve));
  return kOk;
}

int cmd_infer(const RunConfig& config, const InferArgs& args) {
  require_exists(args.input, "input");
  require_exists(args.checkpoint, "checkpoint");
  require_exists(args.guides, "guides file");
  if (!args.fg_mask.empty()) require_exists(args.fg_mask, "foreground mask");
  const Checkpoint checkpoint = load_checkpoint(args.checkpoint);
  const GuideSet guides = load_guides(args.guides);
  const int tw = args.tile_w > 0 ? args.tile_w : checkpoint.config.tile_w;
  const int th = args.tile_h > 0 ? args.tile_h : checkpoint.config.tile_h;
  if (tw != checkpoint.config.tile_w || th != checkpoint.config.tile_h) {
    throw ConfigError("tile must match the checkpoint tile (guide maps are tile-local)");
  }

  const std::vector<fs::path> images = resolve_pngs(args.input, "images");
  std::vector<fs::path> masks;
  if (!args.fg_mask.empty()) {
    masks = resolve_pngs(args.fg_mask, "labels");
    if (masks.size() != images.size()) {
      throw DataError("foreground mask count does not match image count");
    }
  }
  std::vector<ImagePrediction> preds(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    const Image image = load_image(images[i]);
    LabelMap mask;
    if (!masks.empty()) {
      mask = load_labels(masks[i]);
      if (mask.frame() != image.frame()) {
        throw DataError("foreground mask size differs for " + images[i].filename().string());
      }
    }
    preds[i] = predict_image(image, masks.empty() ? nullptr : &mask, checkpoint, guides,
                             config.infer, tw, th);
  });

  fs::create_directories(args.out_dir);
  std::ostringstream csv;
  csv << "image,id,score,area\n";
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string name = images[i].filename().string();
    save_labels(preds[i].labels, args.out_dir / name);
    std::vector<std::size_t> area(preds[i].scores.size() + 1, 0);
    for (InstanceId id : preds[i].labels.ids()) ++area[id];
    for (std::size_t k = 0; k < preds[i].scores.size(); ++k) {
      csv << name << ',' << k + 1 << ',' << fmt(preds[i].scores[k]) << ',' << area[k + 1] << '\n';
    }
  }
  write_text(args.out_dir / "scores.csv", csv.str());
  std::cerr << "infer: " << images.size() << " images\n";
  return kOk;
}

int cmd_eval(const EvalArgs& args) {
  require_exists(args.pred_dir, "prediction directory");
  require_exists(args.gt_dir, "ground-truth directory");
  const std::string& m = args.metric;
  if (m != "sbd" && m != "dic" && m != "ap" && m != "all") {
    throw ConfigError("unknown metric '" + m + "' (expected sbd, dic, ap or all)");
  }
  const std::vector<fs::path> gt_files = resolve_pngs(args.gt_dir, "labels");
  const fs::path pred_root =
      fs::is_directory(args.pred_dir / "labels") ? args.pred_dir / "labels" : args.pred_dir;
  const auto scores = read_scores(args.pred_dir / "scores.csv");

  const std::size_t n = gt_files.size();
  std::vector<LabelMap> preds(n), gts(n);
  std::vector<std::vector<double>> pred_scores(n);
  std::vector<ImageScore> per_image(n);
  EvalOptions options;
  if (args.per_crop) {
    options.crop_w = args.crop_w;
    options.crop_h = args.crop_h;
  }
  parallel_for(n, [&](std::size_t i) {
    const std::string name = gt_files[i].filename().string();
    const fs::path pred = pred_root / name;
    if (!fs::exists(pred)) throw DataError("missing prediction " + pred.string());
    preds[i] = load_labels(pred);
    gts[i] = load_labels(gt_files[i]);
    if (preds[i].frame() != gts[i].frame()) throw DataError("size mismatch for " + name);
    if (auto it = scores.find(name); it != scores.end()) pred_scores[i] = it->second;
    per_image[i] = score_image(preds[i], gts[i], options);
  });

  nlohmann::ordered_json report;
  report["images"] = n;
  report["per_crop"] = args.per_crop;
  double sbd_sum = 0.0, dic_sum = 0.0;
  for (const ImageScore& s : per_image) {
    sbd_sum += s.sbd;
    dic_sum += static_cast<double>(s.dic);
  }
  const double denom = n ? static_cast<double>(n) : 1.0;
  if (m == "sbd" || m == "all") report["sbd"] = sbd_sum / denom;
  if (m == "dic" || m == "all") report["dic"] = dic_sum / denom;
  if (m == "ap" || m == "all") {
    std::vector<ImageInstances> instances(n);
    for (std::size_t i = 0; i < n; ++i) {
      instances[i] = instances_from_labels(preds[i], pred_scores[i], gts[i]);
    }
    const ApScores ap = coco_ap(instances);
    report["ap"] = ap.ap;
    report["ap50"] = ap.ap50;
    report["ap75"] = ap.ap75;
    report["ap_s"] = ap.ap_s;
    report["ap_m"] = ap.ap_m;
    report["ap_l"] = ap.ap_l;
  }
  write_text(args.report, report.dump(2) + "\n");

  std::ostringstream csv;
  csv << "image,sbd,dic,pred_count,gt_count\n";
  for (std::size_t i = 0; i < n; ++i) {
    const ImageScore& s = per_image[i];
    csv << gt_files[i].filename().string() << ',' << fmt(s.sbd) << ',' << s.dic << ','
        << s.pred_count << ',' << s.gt_count << '\n';
  }
  write_text(sibling(args.report, ".csv"), csv.str());
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_render(const RenderArgs& args) {
  require_exists(args.image, "image");
  require_exists(args.labels, "label map");
  if (!(args.alpha >= 0.0 && args.alpha <= 1.0)) throw ConfigError("alpha must be in [0, 1]");
  const Image image = convert_channels(load_image(args.image), 3);
  const LabelMap labels = load_labels(args.labels);
  if (labels.frame() != image.frame()) throw DataError("image and label sizes differ");
  Image out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const InstanceId id = labels(x, y);
      if (!id) continue;
      const auto color = palette(id);
      for (int c = 0; c < 3; ++c) {
        const double v = (1.0 - args.alpha) * image.at(c, x, y) + args.alpha * color[c] / 255.0;
        out.at(c, x, y) = static_cast<float>(v);
      }
    }
  }
  if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
  save_image(out, args.out);
  return kOk;
}

}  // namespace hseg::cli
