#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sts/hypotheses.hpp"

namespace sts {

/// Pinhole camera with its mount on the ego vehicle.
///
/// Image coordinates are continuous: pixel (0, 0) covers [0, 1) x [0, 1), so the
/// centre of pixel (i, j) is (j + 0.5, i + 0.5). The camera frame is x right,
/// y down, z forward along the principal axis.
struct CameraModel {
  std::string id;
  Eigen::Matrix3d intrinsics = Eigen::Matrix3d::Identity();
  int width = 0;
  int height = 0;
  Eigen::Matrix3d cam_to_ego_rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d cam_to_ego_translation = Eigen::Vector3d::Zero();

  /// Throws kDomain / kInvalidPose when an invariant does not hold.
  void validate() const;

  /// Intrinsics of the grid obtained by down-sampling the image by `stride`.
  Eigen::Matrix3d intrinsics_at_stride(int stride) const;
};

/// Ego-to-world transform at one timestamp.
struct EgoPose {
  std::int64_t timestamp = 0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;
};

/// Rigid transform taking reference-camera coordinates to source-camera coordinates:
/// X_src = rotation * X_ref + translation.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  RelativePose inverse() const;
};

struct Homography {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  double depth = 0.0;
  std::string ref_camera;
  std::string src_camera;

  /// Maps a reference pixel; `w` receives the homogeneous scale (z_src / depth).
  Eigen::Vector2d apply(const Eigen::Vector2d& pixel, double* w = nullptr) const;
};

struct OracleProjection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double z_src = 0.0;
  bool behind_camera = true;
};

/// Threshold below which a source-frame depth counts as behind the camera.
inline constexpr double kMinSourceDepth = 1e-9;

bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

Eigen::Matrix3d yaw_rotation(double radians);

RelativePose compose_relative_pose(const CameraModel& src_cam, const EgoPose& src_ego,
                                   const CameraModel& ref_cam, const EgoPose& ref_ego);

/// Homography induced by the plane Z = depth in the reference camera frame.
Homography plane_homography(const RelativePose& rel, const CameraModel& ref_cam,
                            const CameraModel& src_cam, double depth);

/// Back-project, transform, project. Independent of plane_homography.
OracleProjection project_point_oracle(const Eigen::Vector2d& pixel, double depth,
                                      const RelativePose& rel, const CameraModel& ref_cam,
                                      const CameraModel& src_cam);

struct SourceCamera {
  CameraModel camera;
  EgoPose ego;
};

/// Projected source coordinates (full-resolution source pixels) for every
/// (source, depth bin, reference grid cell).
struct SampleGrid {
  std::size_t num_sources = 0;
  std::size_t num_depths = 0;
  std::size_t height = 0;  // reference grid rows
  std::size_t width = 0;   // reference grid columns
  int stride = 1;
  std::vector<Eigen::Vector2d> coords;
  std::vector<std::uint8_t> valid;

  std::size_t index(std::size_t source, std::size_t depth, std::size_t row, std::size_t col) const {
    return ((source * num_depths + depth) * height + row) * width + col;
  }
};

/// Reference grid cells are the centres of a stride-`stride` down-sampling of the
/// reference image; stride 1 is the full-resolution pixel grid.
SampleGrid sample_positions(const CameraModel& ref_cam, std::span<const SourceCamera> sources,
                            const EgoPose& ref_ego, const DepthHypothesisSet& hypotheses,
                            int stride = 1);

/// 0 <= u < width and 0 <= v < height, in full-resolution pixels of `cam`.
bool in_image(const CameraModel& cam, const Eigen::Vector2d& pixel);

// Rig description files.
//
//   # comment
//   camera <id> <width> <height> K <9 floats> R <9 floats> T <3 floats>
//   pose <timestamp> R <9 floats> T <3 floats>
//
// K is row-major, R is the row-major camera-to-ego rotation (ego-to-world for
// poses) and T the matching translation in metres.
struct Rig {
  std::vector<CameraModel> cameras;
  std::vector<EgoPose> poses;
};

/// Parses one `camera` or `pose` line (already split into tokens). Returns false
/// when the keyword is neither, so scene parsers can layer extra keywords on top.
bool parse_rig_line(std::span<const std::string> tokens, Rig& rig, int line_number);
Rig parse_rig(std::string_view text);
std::string format_rig_line(const CameraModel& cam);
std::string format_rig_line(const EgoPose& pose);

}  // namespace sts
