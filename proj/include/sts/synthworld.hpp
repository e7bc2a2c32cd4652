#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sts/geometry.hpp"
#include "sts/hypotheses.hpp"
#include "sts/sweep.hpp"
#include "sts/tensor.hpp"

namespace sts {

/// Textured rectangle: centre + half_u * axis_u + half_v * axis_v spans the surface.
/// Moves by `velocity` (world frame, metres per frame).
struct Surface {
  int id = 0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d axis_v = Eigen::Vector3d::UnitZ();
  double half_u = 1.0;
  double half_v = 1.0;
  int texture_id = 0;
  double texture_scale = 1.0;  // base wavelength in metres
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  bool textureless = false;

  bool moving() const { return !velocity.isZero(0.0); }
};

/// Constant-colour rectangle in a surface's (u, v) coordinates.
struct TexturelessPatch {
  int surface_id = 0;
  double u0 = 0.0, v0 = 0.0, u1 = 0.0, v1 = 0.0;
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int channels = 32;
  int feature_stride = 4;
  std::vector<CameraModel> rig;
  std::vector<EgoPose> trajectory;
  std::vector<Surface> surfaces;
  std::vector<TexturelessPatch> textureless_regions;

  /// Throws kInput for an empty rig/trajectory or inconsistent parameters.
  void validate() const;
};

struct RenderedFrame {
  FeatureMap features;
  Tensor gt_depth;          // metres along the principal axis, 0 where nothing is hit
  Mask moving_mask;
  Mask textureless_mask;
  BasicTensor<std::int32_t> surface_id;  // -1 where nothing is hit
};

/// One RenderedFrame per rig camera at the scene's feature stride.
std::vector<RenderedFrame> render(const SceneSpec& spec, std::size_t frame);

/// Renders a single camera on an arbitrary stride grid.
RenderedFrame render_camera(const SceneSpec& spec, std::size_t frame, std::size_t camera, int stride);

/// Writes the C_F-channel texture of `texture_id` at surface coordinates (u, v).
/// Channels come in (cos, sin) pairs of smooth phase fields, so every pair has unit norm.
void sample_texture(std::uint64_t seed, int texture_id, double scale, double u, double v,
                    std::span<double> out);

struct MonoQuality {
  double sigma_bins = 3.0;        // Gaussian width over bins
  double noise = 0.0;             // std of per-bin logit noise
  double center_jitter_bins = 0.0;  // std of a per-cell offset of the Gaussian centre
  double reference_depth = 0.0;   // > 0: all three scale with gt / reference_depth
};

/// Logits of a discretised Gaussian around each cell's GT bin plus seeded noise. Cells
/// without usable GT get flat logits. `stream` decorrelates noise between cameras.
DepthLogits mono_oracle(const Tensor& gt_depth, const DepthHypothesisSet& bins, const MonoQuality& quality,
                        std::uint64_t seed, std::uint64_t stream, int stride);

/// z-buffered projection of ego-frame points into `cam` on a stride grid; 0 = no data.
Tensor project_points_to_depth(std::span<const Eigen::Vector3d> points, const CameraModel& cam, int stride);

// Scene files extend the rig grammar (see geometry.hpp) with
//   seed <u64>
//   channels <int>
//   stride <int>
//   surface <id> C <x y z> U <x y z> V <x y z> size <half_u half_v> texture <id> scale <m>
//           velocity <x y z> [textureless]
//   patch <surface id> <u0 v0 u1 v1>
SceneSpec parse_scene(std::string_view text);
SceneSpec load_scene(const std::filesystem::path& path);
std::string format_scene(const SceneSpec& spec);

/// Counter-based hashing: a pure function of its inputs.
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
double hash_uniform(std::uint64_t key);  // [0, 1)
double hash_normal(std::uint64_t key);

}  // namespace sts
