// Cross-module invariants on rendered scenes and randomized rigs.
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sts/bev.hpp"
#include "sts/commands.hpp"
#include "sts/costvol.hpp"
#include "sts/fusion.hpp"
#include "sts/io.hpp"
#include "sts/parallel.hpp"
#include "sts/scenes.hpp"
#include "sts/sweep.hpp"
#include "sts/synthworld.hpp"

using namespace sts;

namespace {

std::vector<SourceView> views_of(const std::vector<RenderedFrame>& frames, const SceneSpec& scene, std::size_t frame) {
  std::vector<SourceView> out;
  for (std::size_t c = 0; c < frames.size(); ++c) {
    out.push_back({std::cref(frames[c].features), std::cref(scene.rig[c]), std::cref(scene.trajectory[frame])});
  }
  return out;
}

RunConfig quick_config(std::string_view preset) {
  RunConfig cfg;
  cfg.scene = std::string(preset) + ".scene";
  cfg.stereo_bins = 14;
  cfg.depth_bins = 112;
  return cfg;
}

// Camera ring with random yaw offsets and mount radii, all looking horizontally.
SceneSpec random_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SceneSpec scene = *preset_scene("static", seed);
  RigOptions opt;
  opt.ring_radius = 0.5 + 0.5 * (u(rng) + 1.0);
  opt.horizontal_fov_deg = 60.0 + 15.0 * (u(rng) + 1.0);
  scene.rig = default_rig(opt);
  const double spin = u(rng) * std::numbers::pi;
  for (auto& cam : scene.rig) {
    const Eigen::Matrix3d r = yaw_rotation(spin);
    cam.cam_to_ego_rotation = r * cam.cam_to_ego_rotation;
    cam.cam_to_ego_translation = r * cam.cam_to_ego_translation;
  }
  scene.trajectory = turning_trajectory(2, 0.5 + u(rng) + 1.0, 0.1 * u(rng));
  return scene;
}

}  // namespace

TEST_CASE("surround dominance holds elementwise on every preset and camera") {
  for (const auto& name : preset_names()) {
    const SceneSpec scene = *preset_scene(name, 7);
    const auto bins = make_sid(2.0, 58.0, 14);
    std::vector<RenderedFrame> prev, cur;
    for (std::size_t c = 0; c < scene.rig.size(); ++c) {
      prev.push_back(render_camera(scene, 0, c, 4));
      cur.push_back(render_camera(scene, 1, c, 4));
    }
    const auto sources = views_of(prev, scene, 0);
    std::size_t violations = 0, strict = 0;
    for (std::size_t c = 0; c < scene.rig.size(); ++c) {
      const ReferenceView ref{cur[c].features, scene.rig[c], scene.trajectory[1]};
      const WarpedVolume s = build_warped_volume(ref, sources, bins, SweepMode::kSurround);
      const WarpedVolume m = build_warped_volume(ref, sources, bins, SweepMode::kSameCamera);
      for (std::size_t i = 0; i < s.valid_count.size(); ++i) {
        violations += s.valid_count[i] < m.valid_count[i];
        strict += s.valid_count[i] > m.valid_count[i];
        if (m.valid_count[i] > 1) ++violations;  // one same-camera source at most
      }
    }
    INFO("scene " << name);
    CHECK(violations == 0);
    CHECK(strict > 0);
  }
}

TEST_CASE("the full sweep is bitwise identical across thread counts") {
  const SceneSpec scene = *preset_scene("moving_object", 7);
  const RunConfig cfg = quick_config("moving_object");
  set_thread_count(1);
  const SweepRun a = run_sweep(scene, cfg);
  set_thread_count(5);
  const SweepRun b = run_sweep(scene, cfg);
  set_thread_count(0);
  REQUIRE(a.cameras.size() == b.cameras.size());
  for (std::size_t c = 0; c < a.cameras.size(); ++c) {
    CHECK(encode_tensor(a.cameras[c].stereo.logits.data) == encode_tensor(b.cameras[c].stereo.logits.data));
    CHECK(encode_tensor(a.cameras[c].fused.probs) == encode_tensor(b.cameras[c].fused.probs));
    CHECK(a.cameras[c].stereo.valid_count.values().size() == b.cameras[c].stereo.valid_count.values().size());
    CHECK(std::equal(a.cameras[c].stereo.valid_count.values().begin(), a.cameras[c].stereo.valid_count.values().end(),
                     b.cameras[c].stereo.valid_count.values().begin()));
  }
}

TEST_CASE("randomized rigs: pipeline outputs are finite, normalized and inside the depth range") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const SceneSpec scene = random_scene(seed);
    const RunConfig cfg = quick_config("random");
    const SweepRun run = run_sweep(scene, cfg);
    const auto bins = cfg.final_hypotheses();
    for (const auto& cam : run.cameras) {
      for (double v : cam.stereo.logits.data.values()) CHECK(std::isfinite(v));
      const std::size_t plane = cam.fused.height() * cam.fused.width();
      std::size_t bad_columns = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        double sum = 0.0;
        for (std::size_t k = 0; k < bins.size(); ++k) {
          const double p = cam.fused.probs[k * plane + i];
          if (!(p >= 0.0)) ++bad_columns;
          sum += p;
        }
        bad_columns += std::abs(sum - 1.0) > 1e-6;
      }
      CHECK(bad_columns == 0);
      for (double d : cam.depth_fused.values()) {
        CHECK(d > bins.d_min());
        CHECK(d < bins.d_max());
      }
    }
  }
}

TEST_CASE("with a flat mono prior the fused argmax sits in the duplicated stereo block") {
  const SceneSpec scene = *preset_scene("static", 7);
  RunConfig cfg = quick_config("static");
  cfg.mono.sigma_bins = std::numeric_limits<double>::infinity();
  const SweepRun run = run_sweep(scene, cfg);
  const std::size_t factor = static_cast<std::size_t>(cfg.depth_bins / cfg.stereo_bins);
  for (const auto& cam : run.cameras) {
    const auto fused = argmax_bins(cam.fused);
    const DepthHypothesisSet coarse = cfg.stereo_hypotheses();
    const auto coarse_best = argmax_bins(to_distribution(cam.stereo.stereo_logits, coarse));
    for (std::size_t i = 0; i < fused.size(); ++i) {
      CHECK(static_cast<std::size_t>(fused[i]) / factor == static_cast<std::size_t>(coarse_best[i]));
    }
  }
}

TEST_CASE("lift then splat keeps the feature mass of the whole rig") {
  const SceneSpec scene = *preset_scene("static", 7);
  const RunConfig cfg = quick_config("static");
  const SweepRun run = run_sweep(scene, cfg);
  // 58 m plus the mount stays inside +-64 m.
  const BevGridConfig grid_cfg = BevGridConfig::centered(64.0, 0.8);
  double expected = 0.0, scale = 0.0;
  FrustumPoints all;
  std::vector<double> rows;
  for (std::size_t c = 0; c < run.cameras.size(); ++c) {
    const FeatureMap pooled = pool_features(run.reference[c].features, cfg.output_stride);
    const FrustumPoints pts = lift(pooled, run.cameras[c].fused, scene.rig[c]);
    all.positions.insert(all.positions.end(), pts.positions.begin(), pts.positions.end());
    all.pixel.insert(all.pixel.end(), pts.pixel.begin(), pts.pixel.end());
    rows.insert(rows.end(), pts.features.values().begin(), pts.features.values().end());
    // Channel 0 of every cell, times a unit of probability mass.
    const std::size_t plane = pooled.height() * pooled.width();
    for (std::size_t i = 0; i < plane; ++i) {
      expected += pooled.data[i];
      scale += std::abs(pooled.data[i]);
    }
  }
  const std::size_t channels = run.reference[0].features.channels();
  all.features = Tensor({all.positions.size(), channels});
  std::copy(rows.begin(), rows.end(), all.features.values().begin());
  const BevGrid grid = splat(all, grid_cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < grid_cfg.cells_x * grid_cfg.cells_y; ++i) total += grid.data[i];
  CHECK(std::abs(total - expected) <= 1e-6 * scale);
}

TEST_CASE("rendering is identical across thread counts") {
  const SceneSpec scene = *preset_scene("billboard_turn", 3);
  set_thread_count(1);
  const RenderedFrame a = render_camera(scene, 1, 2, 4);
  set_thread_count(7);
  const RenderedFrame b = render_camera(scene, 1, 2, 4);
  set_thread_count(0);
  CHECK(encode_tensor(a.features.data) == encode_tensor(b.features.data));
  CHECK(encode_tensor(a.gt_depth) == encode_tensor(b.gt_depth));
}
