#include "sts/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sts/bev.hpp"
#include "sts/error.hpp"
#include "sts/io.hpp"

namespace sts {

namespace {

using Json = nlohmann::ordered_json;

// Re-raises with the pipeline stage prefixed so diagnostics say where things failed.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(name) + ": " + e.what());
  }
}

int feature_stride_of(const RunConfig& config, const SceneSpec& scene) {
  const int n = config.feature_stride.value_or(scene.feature_stride);
  if (n <= 0 || config.output_stride % n != 0) {
    throw Error(ErrorKind::kConfig, "output.stride " + std::to_string(config.output_stride) +
                                        " is not a multiple of feature stride " + std::to_string(n));
  }
  return n;
}

/// Writes files under `dir` and records them for the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::kInput, "cannot create output directory '" + dir_.string() + "'");
  }

  void tensor(const std::string& name, const Tensor& t) {
    const auto bytes = encode_tensor(t);
    write(name, bytes);
    files_.back()["shape"] = t.shape();
  }
  void pgm(const std::string& name, const Tensor& t, double lo, double hi) {
    write_pgm(dir_ / name, t, lo, hi);
    record(name, std::filesystem::file_size(dir_ / name));
  }
  void text(const std::string& name, const std::string& body) {
    write_text_file(dir_ / name, body);
    record(name, body.size());
  }
  void manifest(Json doc) {
    doc["files"] = files_;
    write_text_file(dir_ / "manifest.json", doc.dump(2) + "\n");
  }

 private:
  void write(const std::string& name, const std::vector<std::uint8_t>& bytes) {
    std::filesystem::create_directories((dir_ / name).parent_path());
    write_file_bytes(dir_ / name, bytes);
    record(name, bytes.size());
  }
  void record(const std::string& name, std::uintmax_t size) {
    files_.push_back(Json{{"path", name}, {"bytes", size}});
  }

  std::filesystem::path dir_;
  Json files_ = Json::array();
};

Tensor masked_depth(const Tensor& depth, const DepthHypothesisSet& bins) {
  Tensor out = depth;
  for (auto& v : out.values()) {
    if (bins.nearest_bin(v) < 0) v = 0.0;
  }
  return out;
}

Json run_header(const RunConfig& config, const SceneSpec& scene, const char* command) {
  Json doc;
  doc["command"] = command;
  doc["scene"] = config.scene.filename().string();
  doc["seed"] = scene.seed;
  std::istringstream lines(format_config(config));
  Json cfg = Json::object();
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 3);
  }
  cfg.erase("out");  // keeps manifests comparable across output locations
  doc["config"] = cfg;
  return doc;
}

}  // namespace

SceneSpec scene_for(const RunConfig& config) {
  SceneSpec scene = stage("scene", [&] { return load_scene(config.scene); });
  if (config.seed) scene.seed = *config.seed;
  return scene;
}

SweepRun run_sweep(const SceneSpec& scene, const RunConfig& config) {
  stage("config", [&] { config.validate(); });
  scene.validate();
  if (config.reference_frame >= scene.trajectory.size()) {
    throw Error(ErrorKind::kConfig, "sweep.frame " + std::to_string(config.reference_frame) +
                                        " needs a trajectory of at least " +
                                        std::to_string(config.reference_frame + 1) + " poses");
  }
  const int stride = feature_stride_of(config, scene);
  const std::size_t ref_frame = config.reference_frame;
  const std::size_t src_frame = ref_frame - 1;

  StereoConfig stereo_cfg;
  stereo_cfg.stereo_bins = config.stereo_hypotheses();
  stereo_cfg.final_bins = config.final_hypotheses();
  stereo_cfg.mode = config.sweep_mode;
  stereo_cfg.groups = config.groups;
  stereo_cfg.output_stride = config.output_stride;
  if (config.head) stereo_cfg.head = stage("regularizer", [&] { return RegularizerWeights::load(*config.head); });

  SweepRun run;
  std::vector<RenderedFrame> previous;
  stage("render", [&] {
    for (std::size_t c = 0; c < scene.rig.size(); ++c) {
      run.reference.push_back(render_camera(scene, ref_frame, c, stride));
      previous.push_back(render_camera(scene, src_frame, c, stride));
    }
  });

  std::vector<SourceView> sources;
  for (std::size_t c = 0; c < scene.rig.size(); ++c) {
    sources.push_back({std::cref(previous[c].features), std::cref(scene.rig[c]),
                       std::cref(scene.trajectory[src_frame])});
  }

  const DepthHypothesisSet& bins = stereo_cfg.final_bins;
  for (std::size_t c = 0; c < scene.rig.size(); ++c) {
    CameraSweep cam;
    cam.camera_id = scene.rig[c].id;
    const ReferenceView ref{run.reference[c].features, scene.rig[c], scene.trajectory[ref_frame]};
    cam.stereo = stage("stereo", [&] { return stereo_pipeline(ref, sources, stereo_cfg); });
    cam.truth = stage("render", [&] { return render_camera(scene, ref_frame, c, config.output_stride); });
    cam.mono = stage("mono", [&] {
      return mono_oracle(cam.truth.gt_depth, bins, config.mono, scene.seed, c, config.output_stride);
    });
    stage("fusion", [&] {
      cam.fused = fuse(cam.stereo.logits, cam.mono, bins);
      cam.stereo_only = to_distribution(cam.stereo.logits, bins);
      cam.mono_only = to_distribution(cam.mono, bins);
      cam.depth_fused = decode_depth(cam.fused, config.decode);
      cam.depth_stereo = decode_depth(cam.stereo_only, config.decode);
      cam.depth_mono = decode_depth(cam.mono_only, config.decode);
    });
    run.cameras.push_back(std::move(cam));
  }
  return run;
}

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  stage("config", [&] { config.validate(); });
  const SceneSpec scene = scene_for(config);
  const int stride = config.feature_stride.value_or(scene.feature_stride);
  OutputDir out(config.out);
  for (std::size_t f = 0; f < scene.trajectory.size(); ++f) {
    const std::string prefix = "frame_" + std::to_string(f) + "/";
    for (std::size_t c = 0; c < scene.rig.size(); ++c) {
      const RenderedFrame frame = stage("render", [&] { return render_camera(scene, f, c, stride); });
      const std::string base = prefix + scene.rig[c].id;
      out.tensor(base + "_features.stst", frame.features.data);
      out.tensor(base + "_depth.stst", frame.gt_depth);
      out.tensor(base + "_moving.stst", to_tensor(frame.moving_mask));
      out.tensor(base + "_textureless.stst", to_tensor(frame.textureless_mask));
      out.pgm(base + "_depth.pgm", frame.gt_depth, 0.0, config.depth_max);
    }
  }
  Json doc = run_header(config, scene, "simulate");
  doc["frames"] = scene.trajectory.size();
  doc["cameras"] = scene.rig.size();
  doc["feature_stride"] = stride;
  out.manifest(std::move(doc));
  log << "simulate: " << scene.trajectory.size() << " frames x " << scene.rig.size() << " cameras -> "
      << config.out.string() << "\n";
}

void cmd_sweep(const RunConfig& config, std::ostream& log) {
  const SceneSpec scene = scene_for(config);
  const SweepRun run = run_sweep(scene, config);
  const DepthHypothesisSet bins = config.final_hypotheses();
  const RangeBins ranges;
  OutputDir out(config.out);

  std::ostringstream csv;
  csv.precision(9);
  csv << "scene,camera,depth_mode,sweep_mode,stereo_bins,source,range,count,metric,value\n";
  const std::string row_prefix = config.scene.stem().string();
  const auto emit = [&](const std::string& camera, const char* source, const Tensor& pred, const Tensor& gt) {
    const Tensor truth = masked_depth(gt, bins);
    const Mask mask = valid_depth_mask(pred, truth);
    const struct {
      const char* name;
      DepthMetric fn;
    } metrics[] = {{"silog", silog}, {"abs_err", mean_abs_error}};
    for (const auto& m : metrics) {
      for (const auto& r : range_binned(m.fn, pred, truth, ranges, &mask)) {
        if (!r.value) continue;
        std::ostringstream label;
        label << r.lo << "-" << r.hi;
        csv << row_prefix << ',' << camera << ',' << to_string(config.depth_mode) << ','
            << to_string(config.sweep_mode) << ',' << config.stereo_bins << ',' << source << ','
            << label.str() << ',' << r.count << ',' << m.name << ',' << *r.value << "\n";
      }
    }
  };

  FrustumPoints all_points;
  std::vector<double> feature_rows;
  std::size_t channels = 0;
  for (std::size_t c = 0; c < run.cameras.size(); ++c) {
    const CameraSweep& cam = run.cameras[c];
    const std::string& id = cam.camera_id;
    out.tensor(id + "_stereo_logits.stst", cam.stereo.stereo_logits.data);
    out.tensor(id + "_fused.stst", cam.fused.probs);
    out.tensor(id + "_depth.stst", cam.depth_fused);
    out.tensor(id + "_depth_stereo.stst", cam.depth_stereo);
    out.tensor(id + "_depth_mono.stst", cam.depth_mono);
    out.tensor(id + "_gt_depth.stst", cam.truth.gt_depth);
    out.tensor(id + "_valid_count.stst", to_tensor(cam.stereo.valid_count));
    out.pgm(id + "_depth.pgm", cam.depth_fused, 0.0, config.depth_max);
    emit(id, "fused", cam.depth_fused, cam.truth.gt_depth);
    emit(id, "stereo", cam.depth_stereo, cam.truth.gt_depth);
    emit(id, "mono", cam.depth_mono, cam.truth.gt_depth);

    stage("bev", [&] {
      const FeatureMap pooled = pool_features(run.reference[c].features, config.output_stride);
      FrustumPoints pts = lift(pooled, cam.fused, scene.rig[c]);
      channels = pooled.channels();
      all_points.positions.insert(all_points.positions.end(), pts.positions.begin(), pts.positions.end());
      all_points.pixel.insert(all_points.pixel.end(), pts.pixel.begin(), pts.pixel.end());
      feature_rows.insert(feature_rows.end(), pts.features.values().begin(), pts.features.values().end());
    });
  }
  stage("bev", [&] {
    all_points.features = Tensor({all_points.positions.size(), channels});
    std::copy(feature_rows.begin(), feature_rows.end(), all_points.features.values().begin());
    const BevGrid grid = splat(all_points, config.bev_grid());
    const Tensor norm = grid.l2_norm();
    out.tensor("bev_norm.stst", norm);
    const double peak = norm.size() ? *std::max_element(norm.values().begin(), norm.values().end()) : 0.0;
    out.pgm("bev_norm.pgm", norm, 0.0, peak > 0.0 ? peak : 1.0);
  });

  out.text("metrics.csv", csv.str());
  Json doc = run_header(config, scene, "sweep");
  doc["reference_frame"] = config.reference_frame;
  Json cams = Json::array();
  for (const auto& cam : run.cameras) {
    std::int64_t valid = 0;
    for (auto v : cam.stereo.valid_count.values()) valid += v;
    cams.push_back(Json{{"id", cam.camera_id}, {"valid_count_total", valid}});
  }
  doc["cameras"] = cams;
  out.manifest(std::move(doc));
  log << "sweep: " << run.cameras.size() << " cameras, " << to_string(config.sweep_mode) << ", "
      << to_string(config.depth_mode) << " with " << config.stereo_bins << " stereo bins -> "
      << config.out.string() << "\n";
}

std::vector<double> default_scale_candidates() {
  std::vector<double> out;
  for (int k = 0; k <= 16; ++k) out.push_back(std::exp2(0.5 * k));
  return out;
}

Calibration calibrate_stereo_scale(const SceneSpec& scene, const RunConfig& config,
                                   std::span<const double> candidates) {
  if (candidates.empty()) throw Error(ErrorKind::kConfig, "calibration needs at least one candidate scale");
  RunConfig plain = config;
  plain.head.reset();
  const SweepRun run = run_sweep(scene, plain);
  const DepthHypothesisSet bins = plain.final_hypotheses();
  Calibration best;
  best.loss = std::numeric_limits<double>::infinity();
  for (double s : candidates) {
    double total = 0.0;
    std::size_t used = 0;
    for (const auto& cam : run.cameras) {
      DepthLogits scaled = cam.stereo.logits;
      for (auto& v : scaled.data.values()) v *= s;
      try {
        total += bce_depth_loss(to_distribution(scaled, bins), cam.truth.gt_depth);
        ++used;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kUndefinedMetric) throw;
      }
    }
    if (used == 0) throw Error(ErrorKind::kUndefinedMetric, "no camera has ground truth inside the depth range");
    const double loss = total / static_cast<double>(used);
    best.curve.emplace_back(s, loss);
    if (loss < best.loss) {
      best.loss = loss;
      best.scale = s;
    }
  }
  return best;
}

void cmd_calibrate(const RunConfig& config, std::ostream& log) {
  const SceneSpec scene = scene_for(config);
  const auto candidates = default_scale_candidates();
  const Calibration cal = calibrate_stereo_scale(scene, config, candidates);
  OutputDir out(config.out);
  RegularizerWeights::scaled_mean(static_cast<std::size_t>(config.groups), cal.scale)
      .save(config.out / "stereo_head.bin");
  std::ostringstream csv;
  csv.precision(9);
  csv << "scale,bce\n";
  for (const auto& [s, loss] : cal.curve) csv << s << ',' << loss << "\n";
  out.text("calibration.csv", csv.str());
  log << "calibrate: stereo scale " << cal.scale << " (bce " << cal.loss << ") -> "
      << (config.out / "stereo_head.bin").string() << "\n";
}

std::string cmd_eval(const EvalOptions& options, std::ostream& log) {
  if (options.predictions.empty() || options.predictions.size() != options.ground_truth.size()) {
    throw Error(ErrorKind::kInput, "eval needs matching numbers of prediction and ground-truth files");
  }
  try {
    options.bins.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kInput, e.what());
  }
  std::ostringstream csv;
  csv.precision(9);
  csv << "pair,prediction,range,count,metric,value\n";
  std::ostringstream summary;
  for (std::size_t i = 0; i < options.predictions.size(); ++i) {
    const Tensor pred = read_tensor(options.predictions[i]);
    const Tensor gt = read_tensor(options.ground_truth[i]);
    if (pred.shape() != gt.shape()) {
      throw Error(ErrorKind::kShape, "prediction '" + options.predictions[i].string() + "' has shape " +
                                         shape_string(pred.shape()) + " but ground truth '" +
                                         options.ground_truth[i].string() + "' has shape " +
                                         shape_string(gt.shape()));
    }
    const Mask mask = valid_depth_mask(pred, gt);
    const auto sil = range_binned(silog, pred, gt, options.bins, &mask);
    const auto mae = range_binned(mean_abs_error, pred, gt, options.bins, &mask);
    std::vector<std::string> empty;
    for (std::size_t b = 0; b < sil.size(); ++b) {
      std::ostringstream label;
      label << sil[b].lo << "-" << sil[b].hi;
      if (!sil[b].value) {
        empty.push_back(label.str());
        continue;
      }
      const std::string head = std::to_string(i) + "," + options.predictions[i].filename().string() + "," +
                               label.str() + "," + std::to_string(sil[b].count) + ",";
      csv << head << "silog," << *sil[b].value << "\n";
      csv << head << "abs_err," << *mae[b].value << "\n";
    }
    summary << "pair " << i << " (" << options.predictions[i].filename().string() << "): " << pred.size()
            << " cells";
    if (empty.empty()) {
      summary << ", all ranges populated\n";
    } else {
      summary << ", empty ranges:";
      for (const auto& e : empty) summary << ' ' << e;
      summary << "\n";
    }
  }
  if (!options.out.empty()) {
    OutputDir out(options.out);
    out.text("eval.csv", csv.str());
    out.text("summary.txt", summary.str());
  }
  log << summary.str();
  return csv.str();
}

}  // namespace sts
