#include "sts/scenes.hpp"

#include <cmath>
#include <numbers>

namespace sts {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
// Texture wavelength per metre of viewing distance. A stride-4 texel covers about
// 0.008 m per metre of depth, so this keeps several texels per wavelength.
constexpr double kWavelengthPerMetre = 0.04;
constexpr std::int64_t kFramePeriodUs = 500000;

struct CameraSlot {
  const char* id;
  double yaw_deg;
};

constexpr CameraSlot kSlots[] = {
    {"CAM_FRONT", 0.0},        {"CAM_FRONT_LEFT", 60.0},   {"CAM_BACK_LEFT", 120.0},
    {"CAM_BACK", 180.0},       {"CAM_BACK_RIGHT", 240.0},  {"CAM_FRONT_RIGHT", 300.0},
};

void add_backdrop(SceneSpec& spec, int first_id, double distance, double half_height) {
  const double half_width = distance * std::tan(15.0 * kDeg) * 1.01;
  for (int k = 0; k < 12; ++k) {
    spec.surfaces.push_back(facing_panel(first_id + k, distance, (15.0 + 30.0 * k) * kDeg, half_width, half_height));
  }
}

SceneSpec base_scene(std::uint64_t seed) {
  SceneSpec spec;
  spec.seed = seed;
  spec.rig = default_rig();
  spec.trajectory = straight_trajectory(2, 1.0);
  return spec;
}

void add_static_panels(SceneSpec& spec) {
  struct P {
    double distance, bearing_deg, half_w, half_h;
  };
  constexpr P kPanels[] = {
      {4.0, 40.0, 1.5, 1.5},    {6.0, -35.0, 2.0, 2.0},    {9.0, 100.0, 3.0, 2.5},
      {12.0, 185.0, 3.0, 3.0},  {7.0, -120.0, 2.5, 2.0},   {16.0, -80.0, 5.0, 4.0},
      {22.0, 15.0, 6.0, 4.0},   {28.0, 140.0, 7.0, 5.0},   {35.0, -160.0, 8.0, 6.0},
      {40.0, -12.0, 8.0, 6.0},  {32.0, 70.0, 8.0, 6.0},    {25.0, -45.0, 6.0, 4.0},
  };
  int id = 1;
  for (const auto& p : kPanels) {
    spec.surfaces.push_back(facing_panel(id++, p.distance, p.bearing_deg * kDeg, p.half_w, p.half_h));
  }
  add_backdrop(spec, 100, 50.0, 20.0);
}

}  // namespace

std::vector<CameraModel> default_rig(const RigOptions& options) {
  const double fx = 0.5 * options.width / std::tan(0.5 * options.horizontal_fov_deg * kDeg);
  Eigen::Matrix3d k;
  k << fx, 0.0, 0.5 * options.width, 0.0, fx, 0.5 * options.height, 0.0, 0.0, 1.0;
  std::vector<CameraModel> rig;
  for (const auto& slot : kSlots) {
    const double yaw = slot.yaw_deg * kDeg;
    const Eigen::Vector3d forward(std::cos(yaw), std::sin(yaw), 0.0);
    const Eigen::Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
    const Eigen::Vector3d down(0.0, 0.0, -1.0);
    CameraModel cam;
    cam.id = slot.id;
    cam.intrinsics = k;
    cam.width = options.width;
    cam.height = options.height;
    cam.cam_to_ego_rotation.col(0) = right;
    cam.cam_to_ego_rotation.col(1) = down;
    cam.cam_to_ego_rotation.col(2) = forward;
    cam.cam_to_ego_translation = options.ring_radius * forward + Eigen::Vector3d(0.0, 0.0, options.mount_height);
    rig.push_back(cam);
  }
  return rig;
}

std::vector<EgoPose> straight_trajectory(std::size_t frames, double step) {
  return turning_trajectory(frames, step, 0.0);
}

std::vector<EgoPose> turning_trajectory(std::size_t frames, double step, double yaw_step) {
  std::vector<EgoPose> poses;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double heading = 0.0;
  for (std::size_t i = 0; i < frames; ++i) {
    EgoPose pose;
    pose.timestamp = static_cast<std::int64_t>(i) * kFramePeriodUs;
    pose.rotation = yaw_rotation(heading);
    pose.translation = position;
    poses.push_back(pose);
    position += step * Eigen::Vector3d(std::cos(heading), std::sin(heading), 0.0);
    heading += yaw_step;
  }
  return poses;
}

Surface facing_panel(int id, double distance, double bearing, double half_width, double half_height,
                     double center_height) {
  Surface s;
  s.id = id;
  s.center = Eigen::Vector3d(distance * std::cos(bearing), distance * std::sin(bearing), center_height);
  s.axis_u = Eigen::Vector3d(-std::sin(bearing), std::cos(bearing), 0.0);
  s.axis_v = Eigen::Vector3d::UnitZ();
  s.half_u = half_width;
  s.half_v = half_height;
  s.texture_id = id;
  s.texture_scale = kWavelengthPerMetre * distance;
  return s;
}

std::vector<std::string> preset_names() { return {"plane", "static", "billboard_turn", "moving_object"}; }

std::optional<SceneSpec> preset_scene(std::string_view name, std::uint64_t seed) {
  SceneSpec spec = base_scene(seed);
  if (name == "plane") {
    // Front camera sits 1 m ahead of the ego origin.
    spec.surfaces.push_back(facing_panel(1, 21.0, 0.0, 60.0, 30.0));
  } else if (name == "static") {
    add_static_panels(spec);
  } else if (name == "billboard_turn") {
    spec.trajectory = turning_trajectory(2, 1.0, 20.0 * kDeg);
    add_backdrop(spec, 1, 15.0, 8.0);
  } else if (name == "moving_object") {
    add_static_panels(spec);
    // Lead vehicle keeping pace with the ego: zero parallax between frames.
    Surface lead = facing_panel(50, 12.0, 0.0, 2.0, 1.5, 1.2);
    lead.velocity = Eigen::Vector3d(1.0, 0.0, 0.0);
    spec.surfaces.push_back(lead);
    spec.textureless_regions.push_back({7, -2.0, -1.5, 2.0, 1.5});
  } else {
    return std::nullopt;
  }
  return spec;
}

}  // namespace sts
