#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sts/geometry.hpp"
#include "sts/synthworld.hpp"

namespace sts {

struct RigOptions {
  int width = 704;
  int height = 256;
  double horizontal_fov_deg = 70.0;
  double ring_radius = 1.0;   // camera mount distance from the ego origin
  double mount_height = 1.6;
};

/// Six cameras at 60 degree yaw spacing: FRONT, FRONT_LEFT, BACK_LEFT, BACK, BACK_RIGHT,
/// FRONT_RIGHT. Ego axes are x forward, y left, z up.
std::vector<CameraModel> default_rig(const RigOptions& options = {});

/// Constant heading along +x, `step` metres per frame. Timestamps advance 0.5 s per frame.
std::vector<EgoPose> straight_trajectory(std::size_t frames, double step);

/// Heading changes by `yaw_step` radians per frame (positive turns left); each step moves
/// `step` metres along the current heading before turning.
std::vector<EgoPose> turning_trajectory(std::size_t frames, double step, double yaw_step);

/// Upright rectangle facing the ego origin at ground distance `distance` and bearing
/// `bearing` (radians, 0 = ego forward). Texture wavelength grows with distance so the
/// feature grid always resolves it.
Surface facing_panel(int id, double distance, double bearing, double half_width, double half_height,
                     double center_height = 1.6);

/// Names accepted by preset_scene.
std::vector<std::string> preset_names();

/// plane:          one textured wall 20 m ahead of the front camera, straight 1 m steps
/// static:         panels from 4 m to 56 m around the rig, straight 1 m steps
/// billboard_turn: ring of panels with a left-turning ego
/// moving_object:  static panels plus a lead billboard moving with the ego and a
///                 constant-colour patch
std::optional<SceneSpec> preset_scene(std::string_view name, std::uint64_t seed);

}  // namespace sts
