#include "sts/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "sts/error.hpp"

namespace sts {

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d yaw_rotation(double radians) {
  Eigen::Matrix3d r;
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

void CameraModel::validate() const {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kDomain, "camera '" + id + "': width and height must be positive");
  }
  const auto& k = intrinsics;
  if (!k.allFinite() || k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0 ||
      k(0, 0) <= 0.0 || k(1, 1) <= 0.0) {
    throw Error(ErrorKind::kDomain,
                "camera '" + id + "': intrinsics must be upper-triangular with positive focal lengths "
                                  "and K[2][2] = 1");
  }
  if (!is_rotation(cam_to_ego_rotation)) {
    throw Error(ErrorKind::kInvalidPose, "camera '" + id + "': mount rotation is not orthonormal");
  }
  if (!cam_to_ego_translation.allFinite()) {
    throw Error(ErrorKind::kInvalidPose, "camera '" + id + "': mount translation is not finite");
  }
}

Eigen::Matrix3d CameraModel::intrinsics_at_stride(int stride) const {
  if (stride <= 0) throw Error(ErrorKind::kDomain, "stride must be positive");
  Eigen::Matrix3d scaled = intrinsics;
  scaled.topRows<2>() /= static_cast<double>(stride);
  return scaled;
}

void EgoPose::validate() const {
  if (!is_rotation(rotation) || !translation.allFinite()) {
    throw Error(ErrorKind::kInvalidPose,
                "ego pose " + std::to_string(timestamp) + ": rotation is not orthonormal");
  }
}

RelativePose RelativePose::inverse() const {
  RelativePose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& pixel, double* w) const {
  const Eigen::Vector3d h = matrix * pixel.homogeneous();
  if (w != nullptr) *w = h.z();
  return h.hnormalized();
}

RelativePose compose_relative_pose(const CameraModel& src_cam, const EgoPose& src_ego,
                                   const CameraModel& ref_cam, const EgoPose& ref_ego) {
  if (!is_rotation(src_cam.cam_to_ego_rotation) || !is_rotation(ref_cam.cam_to_ego_rotation)) {
    throw Error(ErrorKind::kInvalidPose, "camera mount rotation is not orthonormal");
  }
  if (!is_rotation(src_ego.rotation) || !is_rotation(ref_ego.rotation)) {
    throw Error(ErrorKind::kInvalidPose, "ego rotation is not orthonormal");
  }
  // cam_ref -> ego_t -> world
  const Eigen::Matrix3d r_world_ref = ref_ego.rotation * ref_cam.cam_to_ego_rotation;
  const Eigen::Vector3d t_world_ref =
      ref_ego.rotation * ref_cam.cam_to_ego_translation + ref_ego.translation;
  // cam_src -> ego_{t-1} -> world
  const Eigen::Matrix3d r_world_src = src_ego.rotation * src_cam.cam_to_ego_rotation;
  const Eigen::Vector3d t_world_src =
      src_ego.rotation * src_cam.cam_to_ego_translation + src_ego.translation;

  RelativePose rel;
  rel.rotation = r_world_src.transpose() * r_world_ref;
  rel.translation = r_world_src.transpose() * (t_world_ref - t_world_src);
  return rel;
}

Homography plane_homography(const RelativePose& rel, const CameraModel& ref_cam,
                            const CameraModel& src_cam, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw Error(ErrorKind::kDomain, "plane depth must be positive and finite");
  }
  const Eigen::RowVector3d normal(0.0, 0.0, 1.0);
  Homography h;
  h.matrix = src_cam.intrinsics * (rel.rotation + rel.translation * normal / depth) *
             ref_cam.intrinsics.inverse();
  h.depth = depth;
  h.ref_camera = ref_cam.id;
  h.src_camera = src_cam.id;
  return h;
}

OracleProjection project_point_oracle(const Eigen::Vector2d& pixel, double depth,
                                      const RelativePose& rel, const CameraModel& ref_cam,
                                      const CameraModel& src_cam) {
  if (!(depth > 0.0)) throw Error(ErrorKind::kDomain, "oracle depth must be positive");
  // Solve K_ref * ray = (u, v, 1) by hand for the upper-triangular K.
  const auto& k = ref_cam.intrinsics;
  const double y = (pixel.y() - k(1, 2)) / k(1, 1);
  const double x = (pixel.x() - k(0, 2) - k(0, 1) * y) / k(0, 0);
  const Eigen::Vector3d x_ref(depth * x, depth * y, depth);
  const Eigen::Vector3d x_src = rel.rotation * x_ref + rel.translation;

  OracleProjection out;
  out.z_src = x_src.z();
  out.behind_camera = !(x_src.z() > kMinSourceDepth);
  if (!out.behind_camera) {
    const auto& ks = src_cam.intrinsics;
    const double xn = x_src.x() / x_src.z();
    const double yn = x_src.y() / x_src.z();
    out.pixel = {ks(0, 0) * xn + ks(0, 1) * yn + ks(0, 2), ks(1, 1) * yn + ks(1, 2)};
  }
  return out;
}

bool in_image(const CameraModel& cam, const Eigen::Vector2d& pixel) {
  return pixel.x() >= 0.0 && pixel.x() < cam.width && pixel.y() >= 0.0 && pixel.y() < cam.height;
}

SampleGrid sample_positions(const CameraModel& ref_cam, std::span<const SourceCamera> sources,
                            const EgoPose& ref_ego, const DepthHypothesisSet& hypotheses,
                            int stride) {
  if (sources.empty()) throw Error(ErrorKind::kContract, "sample_positions needs at least one source");
  if (hypotheses.size() == 0) throw Error(ErrorKind::kContract, "sample_positions needs depth bins");
  if (stride <= 0) throw Error(ErrorKind::kDomain, "stride must be positive");

  SampleGrid grid;
  grid.num_sources = sources.size();
  grid.num_depths = hypotheses.size();
  grid.height = static_cast<std::size_t>(ref_cam.height / stride);
  grid.width = static_cast<std::size_t>(ref_cam.width / stride);
  grid.stride = stride;
  const std::size_t total = grid.num_sources * grid.num_depths * grid.height * grid.width;
  grid.coords.assign(total, Eigen::Vector2d::Zero());
  grid.valid.assign(total, 0);

  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& src = sources[s];
    const RelativePose rel = compose_relative_pose(src.camera, src.ego, ref_cam, ref_ego);
    for (std::size_t d = 0; d < grid.num_depths; ++d) {
      const Homography h = plane_homography(rel, ref_cam, src.camera, hypotheses.center(d));
      for (std::size_t r = 0; r < grid.height; ++r) {
        for (std::size_t c = 0; c < grid.width; ++c) {
          const Eigen::Vector2d ref_px((c + 0.5) * stride, (r + 0.5) * stride);
          double w = 0.0;
          const Eigen::Vector2d p = h.apply(ref_px, &w);
          const std::size_t i = grid.index(s, d, r, c);
          // w * depth is the source-frame depth of the swept point.
          if (w * h.depth > kMinSourceDepth && p.allFinite() && in_image(src.camera, p)) {
            grid.coords[i] = p;
            grid.valid[i] = 1;
          }
        }
      }
    }
  }
  return grid;
}

namespace {

double parse_number(const std::string& token, int line_number) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(value)) {
    throw Error(ErrorKind::kInput,
                "line " + std::to_string(line_number) + ": expected a number, got '" + token + "'");
  }
  return value;
}

class TokenCursor {
 public:
  TokenCursor(std::span<const std::string> tokens, int line_number)
      : tokens_(tokens), line_(line_number) {}

  const std::string& next(const char* what) {
    if (pos_ >= tokens_.size()) {
      throw Error(ErrorKind::kInput, "line " + std::to_string(line_) + ": missing " + what);
    }
    return tokens_[pos_++];
  }
  double number(const char* what) { return parse_number(next(what), line_); }
  void expect(const char* keyword) {
    const auto& tok = next(keyword);
    if (tok != keyword) {
      throw Error(ErrorKind::kInput, "line " + std::to_string(line_) + ": expected '" + keyword +
                                         "', got '" + tok + "'");
    }
  }
  Eigen::Matrix3d matrix(const char* what) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = number(what);
    return m;
  }
  Eigen::Vector3d vector(const char* what) {
    return {number(what), number(what), number(what)};
  }
  void finish() const {
    if (pos_ != tokens_.size()) {
      throw Error(ErrorKind::kInput, "line " + std::to_string(line_) + ": unexpected token '" +
                                         tokens_[pos_] + "'");
    }
  }

 private:
  std::span<const std::string> tokens_;
  int line_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_tokens(std::string_view line) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

bool parse_rig_line(std::span<const std::string> tokens, Rig& rig, int line_number) {
  if (tokens.empty()) return true;
  TokenCursor cur(tokens, line_number);
  const std::string& keyword = cur.next("keyword");
  if (keyword == "camera") {
    CameraModel cam;
    cam.id = cur.next("camera id");
    cam.width = static_cast<int>(cur.number("width"));
    cam.height = static_cast<int>(cur.number("height"));
    cur.expect("K");
    cam.intrinsics = cur.matrix("intrinsics");
    cur.expect("R");
    cam.cam_to_ego_rotation = cur.matrix("rotation");
    cur.expect("T");
    cam.cam_to_ego_translation = cur.vector("translation");
    cur.finish();
    try {
      cam.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::kInput, "line " + std::to_string(line_number) + ": " + e.what());
    }
    rig.cameras.push_back(std::move(cam));
    return true;
  }
  if (keyword == "pose") {
    EgoPose pose;
    pose.timestamp = static_cast<std::int64_t>(cur.number("timestamp"));
    cur.expect("R");
    pose.rotation = cur.matrix("rotation");
    cur.expect("T");
    pose.translation = cur.vector("translation");
    cur.finish();
    try {
      pose.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::kInput, "line " + std::to_string(line_number) + ": " + e.what());
    }
    rig.poses.push_back(pose);
    return true;
  }
  return false;
}

Rig parse_rig(std::string_view text) {
  Rig rig;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tokens = split_tokens(line);
    if (!parse_rig_line(tokens, rig, line_number)) {
      throw Error(ErrorKind::kInput, "line " + std::to_string(line_number) + ": unknown keyword '" +
                                         tokens.front() + "'");
    }
  }
  return rig;
}

namespace {

void append_matrix(std::ostringstream& out, const Eigen::Matrix3d& m) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out << ' ' << m(r, c);
}

}  // namespace

std::string format_rig_line(const CameraModel& cam) {
  std::ostringstream out;
  out.precision(17);
  out << "camera " << cam.id << ' ' << cam.width << ' ' << cam.height << " K";
  append_matrix(out, cam.intrinsics);
  out << " R";
  append_matrix(out, cam.cam_to_ego_rotation);
  out << " T " << cam.cam_to_ego_translation.x() << ' ' << cam.cam_to_ego_translation.y() << ' '
      << cam.cam_to_ego_translation.z();
  return out.str();
}

std::string format_rig_line(const EgoPose& pose) {
  std::ostringstream out;
  out.precision(17);
  out << "pose " << pose.timestamp << " R";
  append_matrix(out, pose.rotation);
  out << " T " << pose.translation.x() << ' ' << pose.translation.y() << ' ' << pose.translation.z();
  return out.str();
}

}  // namespace sts
