#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "sts/error.hpp"
#include "sts/geometry.hpp"
#include "sts/hypotheses.hpp"
#include "sts/scenes.hpp"

using namespace sts;

namespace {

CameraModel forward_camera_at_origin() {
  CameraModel cam;
  cam.id = "FWD";
  cam.width = 704;
  cam.height = 256;
  cam.intrinsics << 500.0, 0.0, 352.0, 0.0, 500.0, 128.0, 0.0, 0.0, 1.0;
  // camera x right = -ego y, camera y down = -ego z, camera z forward = ego x
  cam.cam_to_ego_rotation << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  return cam;
}

// 4x4 homogeneous transform, used as an independent composition oracle.
Eigen::Matrix4d rigid(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

}  // namespace

TEST_CASE("compose_relative_pose: identical camera and pose gives identity") {
  const auto rig = default_rig();
  EgoPose ego;
  ego.rotation = yaw_rotation(0.3);
  ego.translation = {4.0, -2.0, 0.5};
  const RelativePose rel = compose_relative_pose(rig[1], ego, rig[1], ego);
  CHECK((rel.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rel.translation.norm() < 1e-12);
}

TEST_CASE("compose_relative_pose: 1 m forward ego motion, camera at the ego origin") {
  const CameraModel cam = forward_camera_at_origin();
  EgoPose prev;  // t-1
  EgoPose cur;   // t
  cur.translation = {1.0, 0.0, 0.0};
  const RelativePose rel = compose_relative_pose(cam, prev, cam, cur);
  CHECK((rel.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  // The previous camera sat 1 m behind, so reference points are 1 m deeper in it.
  CHECK(rel.translation.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rel.translation.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rel.translation.z() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("compose_relative_pose: cameras yawed 60 degrees apart on a static ego") {
  const auto rig = default_rig();
  EgoPose ego;
  const RelativePose rel = compose_relative_pose(rig[1], ego, rig[0], ego);
  const Eigen::Matrix4d oracle = rigid(rig[1].cam_to_ego_rotation, rig[1].cam_to_ego_translation).inverse() *
                                 rigid(rig[0].cam_to_ego_rotation, rig[0].cam_to_ego_translation);
  CHECK((rel.rotation - oracle.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((rel.translation - oracle.topRightCorner<3, 1>()).cwiseAbs().maxCoeff() < 1e-12);
  // Relative mount rotation is a 60 degree turn about the camera y axis.
  const double angle = std::acos(std::clamp((rel.rotation.trace() - 1.0) / 2.0, -1.0, 1.0));
  CHECK(angle == doctest::Approx(std::numbers::pi / 3.0).epsilon(1e-12));
}

TEST_CASE("compose_relative_pose: random chains match the 4x4 oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    CameraModel a = forward_camera_at_origin();
    CameraModel b = forward_camera_at_origin();
    a.cam_to_ego_rotation = random_rotation(rng);
    b.cam_to_ego_rotation = random_rotation(rng);
    a.cam_to_ego_translation = {u(rng), u(rng), u(rng)};
    b.cam_to_ego_translation = {u(rng), u(rng), u(rng)};
    EgoPose ea, eb;
    ea.rotation = random_rotation(rng);
    eb.rotation = random_rotation(rng);
    ea.translation = {u(rng), u(rng), u(rng)};
    eb.translation = {u(rng), u(rng), u(rng)};
    const RelativePose rel = compose_relative_pose(a, ea, b, eb);
    const Eigen::Matrix4d oracle = rigid(a.cam_to_ego_rotation, a.cam_to_ego_translation).inverse() *
                                   rigid(ea.rotation, ea.translation).inverse() * rigid(eb.rotation, eb.translation) *
                                   rigid(b.cam_to_ego_rotation, b.cam_to_ego_translation);
    CHECK((rel.rotation - oracle.topLeftCorner<3, 3>()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((rel.translation - oracle.topRightCorner<3, 1>()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("compose_relative_pose: non-orthonormal rotation is an invalid pose") {
  CameraModel cam = forward_camera_at_origin();
  EgoPose ego;
  ego.rotation(0, 0) = 1.01;
  try {
    compose_relative_pose(cam, ego, cam, EgoPose{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidPose);
  }
}

TEST_CASE("plane_homography: same camera and pose is the identity") {
  const auto rig = default_rig();
  for (double d : {2.0, 20.0, 58.0}) {
    const Homography h = plane_homography(RelativePose{}, rig[0], rig[0], d);
    CHECK((h.matrix - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("plane_homography: large depth approaches the infinite homography") {
  // 1 m of forward travel with a slight turn. The residual at 1e6 m is exactly the plane
  // term; with intrinsics stripped it is |t_rel| * 1e-6 against |R_rel| = sqrt(3).
  const auto rig = default_rig();
  EgoPose prev, cur;
  cur.translation = {1.0, 0.0, 0.0};
  cur.rotation = yaw_rotation(0.05);
  for (const auto& cam : rig) {
    const RelativePose rel = compose_relative_pose(cam, prev, cam, cur);
    const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
    const Eigen::Matrix3d h_inf = cam.intrinsics * rel.rotation * k_inv;
    const Homography h = plane_homography(rel, cam, cam, 1e6);
    const Eigen::Matrix3d plane_term =
        cam.intrinsics * rel.translation * Eigen::RowVector3d(0.0, 0.0, 1.0) * k_inv / 1e6;
    CHECK((h.matrix - h_inf - plane_term).cwiseAbs().maxCoeff() < 1e-12 * h_inf.norm());
    const Eigen::Matrix3d calibrated = k_inv * h.matrix * cam.intrinsics;
    CHECK((calibrated - rel.rotation).cwiseAbs().maxCoeff() < 1e-6 * rel.rotation.norm());
  }
}

TEST_CASE("plane_homography: non-positive depth is a domain error") {
  const auto rig = default_rig();
  for (double d : {0.0, -1.0}) {
    try {
      plane_homography(RelativePose{}, rig[0], rig[0], d);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDomain);
    }
  }
}

TEST_CASE("plane_homography agrees with the projection oracle at pixel (100, 50), 20 m") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    CameraModel ref = forward_camera_at_origin();
    CameraModel src = forward_camera_at_origin();
    ref.cam_to_ego_rotation = random_rotation(rng);
    src.cam_to_ego_rotation = ref.cam_to_ego_rotation * Eigen::AngleAxisd(0.2 * u(rng), Eigen::Vector3d::UnitY());
    src.cam_to_ego_translation = {u(rng), u(rng), u(rng)};
    EgoPose prev, cur;
    cur.translation = {u(rng), u(rng), 0.0};
    const RelativePose rel = compose_relative_pose(src, prev, ref, cur);
    const Eigen::Vector2d px(100.0, 50.0);
    const OracleProjection o = project_point_oracle(px, 20.0, rel, ref, src);
    if (o.behind_camera || o.z_src < 0.1) continue;
    const Eigen::Vector2d p = plane_homography(rel, ref, src, 20.0).apply(px);
    CHECK((p - o.pixel).norm() < 1e-6);
  }
}

TEST_CASE("project_point_oracle: identity returns the principal point") {
  const CameraModel cam = forward_camera_at_origin();
  const OracleProjection o = project_point_oracle({352.0, 128.0}, 7.5, RelativePose{}, cam, cam);
  CHECK_FALSE(o.behind_camera);
  CHECK(o.pixel.x() == doctest::Approx(352.0));
  CHECK(o.pixel.y() == doctest::Approx(128.0));
  CHECK(o.z_src == doctest::Approx(7.5));
}

TEST_CASE("project_point_oracle: source 1 m behind along its axis") {
  const CameraModel cam = forward_camera_at_origin();
  RelativePose rel;
  rel.translation = {0.0, 0.0, 1.0};
  const OracleProjection o = project_point_oracle({352.0, 128.0}, 10.0, rel, cam, cam);
  CHECK(o.pixel.x() == doctest::Approx(352.0));
  CHECK(o.pixel.y() == doctest::Approx(128.0));
  CHECK(o.z_src == doctest::Approx(11.0));
}

TEST_CASE("project_point_oracle: points behind the source camera are flagged") {
  const CameraModel cam = forward_camera_at_origin();
  RelativePose rel;
  rel.translation = {0.0, 0.0, -20.0};
  CHECK(project_point_oracle({352.0, 128.0}, 10.0, rel, cam, cam).behind_camera);
}

TEST_CASE("homography and oracle agree over random rigs, depths and pixels") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    CameraModel ref = forward_camera_at_origin();
    CameraModel src = forward_camera_at_origin();
    ref.intrinsics(0, 0) = ref.intrinsics(1, 1) = 300.0 + 600.0 * unit(rng);
    src.intrinsics(0, 0) = 300.0 + 600.0 * unit(rng);
    src.intrinsics(1, 1) = src.intrinsics(0, 0) * (0.9 + 0.2 * unit(rng));
    src.intrinsics(0, 1) = 0.5 * (unit(rng) - 0.5);
    ref.cam_to_ego_rotation = random_rotation(rng);
    src.cam_to_ego_rotation = random_rotation(rng);
    ref.cam_to_ego_translation = Eigen::Vector3d::Random();
    src.cam_to_ego_translation = Eigen::Vector3d::Random();
    EgoPose prev, cur;
    prev.rotation = yaw_rotation(unit(rng));
    cur.rotation = yaw_rotation(unit(rng));
    cur.translation = Eigen::Vector3d(3.0 * unit(rng), unit(rng), 0.0);
    const RelativePose rel = compose_relative_pose(src, prev, ref, cur);
    const double depth = 2.0 + 56.0 * unit(rng);
    const Eigen::Vector2d px(704.0 * unit(rng), 256.0 * unit(rng));
    const OracleProjection o = project_point_oracle(px, depth, rel, ref, src);
    if (o.behind_camera || o.z_src <= 0.1) continue;
    const Eigen::Vector2d p = plane_homography(rel, ref, src, depth).apply(px);
    CHECK((p - o.pixel).norm() < 1e-6);
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("plane_homography: inverse pose maps the plane image back") {
  // A point on the plane Z = d in the reference camera has depth z_src in the source;
  // the inverse homography for the source plane through that point returns it.
  const auto rig = default_rig();
  EgoPose prev, cur;
  cur.translation = {1.0, 0.0, 0.0};
  const RelativePose rel = compose_relative_pose(rig[0], prev, rig[0], cur);
  const double d = 15.0;
  const Homography h = plane_homography(rel, rig[0], rig[0], d);
  for (const Eigen::Vector2d px : {Eigen::Vector2d(100.0, 40.0), Eigen::Vector2d(600.0, 200.0)}) {
    const Eigen::Vector2d q = h.apply(px);
    const Eigen::Vector2d back = (h.matrix.inverse() * q.homogeneous()).hnormalized();
    CHECK((back - px).norm() < 1e-9);
    // Pointwise check through the inverse relative pose at the point's source depth.
    const OracleProjection o = project_point_oracle(px, d, rel, rig[0], rig[0]);
    const OracleProjection r = project_point_oracle(q, o.z_src, rel.inverse(), rig[0], rig[0]);
    CHECK((r.pixel - px).norm() < 1e-9);
  }
}

TEST_CASE("sample_positions: zero motion reproduces reference pixel centres") {
  const auto rig = default_rig();
  EgoPose ego;
  const SourceCamera src{rig[0], ego};
  const auto bins = make_sid(2.0, 58.0, 8);
  const SampleGrid grid = sample_positions(rig[0], std::span(&src, 1), ego, bins, 4);
  CHECK(grid.height == 64);
  CHECK(grid.width == 176);
  for (std::size_t d = 0; d < grid.num_depths; ++d) {
    for (std::size_t r = 0; r < grid.height; r += 7) {
      for (std::size_t c = 0; c < grid.width; c += 9) {
        const auto i = grid.index(0, d, r, c);
        REQUIRE(grid.valid[i] == 1);
        CHECK(grid.coords[i].x() == doctest::Approx((c + 0.5) * 4.0));
        CHECK(grid.coords[i].y() == doctest::Approx((r + 0.5) * 4.0));
      }
    }
  }
}

TEST_CASE("sample_positions: left border of a left-turning front camera lands in FRONT_LEFT") {
  const auto rig = default_rig();
  const auto poses = turning_trajectory(2, 1.0, 20.0 * std::numbers::pi / 180.0);
  std::vector<SourceCamera> sources;
  for (const auto& cam : rig) sources.push_back({cam, poses[0]});
  const auto bins = make_sid(2.0, 58.0, 16);
  const SampleGrid grid = sample_positions(rig[0], sources, poses[1], bins, 16);
  const std::size_t r = grid.height / 2;
  const std::size_t c = 0;  // left border
  for (std::size_t d = 0; d < grid.num_depths; ++d) {
    CHECK(grid.valid[grid.index(0, d, r, c)] == 0);  // CAM_FRONT
    CHECK(grid.valid[grid.index(1, d, r, c)] == 1);  // CAM_FRONT_LEFT
    const auto rel = compose_relative_pose(rig[1], poses[0], rig[0], poses[1]);
    const OracleProjection o =
        project_point_oracle({(c + 0.5) * 16.0, (r + 0.5) * 16.0}, bins.center(d), rel, rig[0], rig[1]);
    CHECK((grid.coords[grid.index(1, d, r, c)] - o.pixel).norm() < 1e-6);
  }
}

TEST_CASE("sample_positions: forward motion loses more pixels at D_min than at D_max") {
  // The side-looking camera sees lateral parallax, which is largest for the nearest plane.
  const auto rig = default_rig();
  const auto poses = straight_trajectory(2, 3.0);
  const SourceCamera src{rig[1], poses[0]};
  const auto bins = make_sid(2.0, 58.0, 16);
  const SampleGrid grid = sample_positions(rig[1], std::span(&src, 1), poses[1], bins, 8);
  const auto count = [&](std::size_t d) {
    std::size_t n = 0;
    for (std::size_t r = 0; r < grid.height; ++r)
      for (std::size_t c = 0; c < grid.width; ++c) n += grid.valid[grid.index(0, d, r, c)];
    return n;
  };
  const std::size_t total = grid.height * grid.width;
  CHECK(count(0) < count(grid.num_depths - 1));
  CHECK(static_cast<double>(total - count(0)) / static_cast<double>(total) > 0.05);
  for (std::size_t d = 1; d < grid.num_depths; ++d) CHECK(count(d - 1) <= count(d));
}

TEST_CASE("sample_positions: valid coordinates are finite and in bounds") {
  const auto rig = default_rig();
  const auto poses = turning_trajectory(2, 2.0, 0.3);
  std::vector<SourceCamera> sources;
  for (const auto& cam : rig) sources.push_back({cam, poses[0]});
  const auto bins = make_ud(2.0, 58.0, 12);
  for (const auto& ref : rig) {
    const SampleGrid grid = sample_positions(ref, sources, poses[1], bins, 16);
    for (std::size_t s = 0; s < grid.num_sources; ++s) {
      for (std::size_t i = grid.index(s, 0, 0, 0); i < grid.index(s + 1, 0, 0, 0); ++i) {
        if (!grid.valid[i]) continue;
        CHECK(grid.coords[i].allFinite());
        CHECK(in_image(rig[s], grid.coords[i]));
      }
    }
  }
}

TEST_CASE("camera validation rejects malformed intrinsics and mounts") {
  CameraModel cam = forward_camera_at_origin();
  CHECK_NOTHROW(cam.validate());
  CameraModel bad_k = cam;
  bad_k.intrinsics(2, 2) = 2.0;
  CHECK_THROWS_AS(bad_k.validate(), Error);
  CameraModel bad_r = cam;
  bad_r.cam_to_ego_rotation *= -1.0;  // det = -1
  CHECK_THROWS_AS(bad_r.validate(), Error);
  CameraModel bad_size = cam;
  bad_size.width = 0;
  CHECK_THROWS_AS(bad_size.validate(), Error);
}

TEST_CASE("rig files round-trip through format and parse") {
  const auto rig = default_rig();
  const auto poses = turning_trajectory(3, 1.5, 0.2);
  std::string text = "# test rig\n";
  for (const auto& c : rig) text += format_rig_line(c) + "\n";
  for (const auto& p : poses) text += format_rig_line(p) + "\n";
  const Rig parsed = parse_rig(text);
  REQUIRE(parsed.cameras.size() == rig.size());
  REQUIRE(parsed.poses.size() == poses.size());
  for (std::size_t i = 0; i < rig.size(); ++i) {
    CHECK(parsed.cameras[i].id == rig[i].id);
    CHECK(parsed.cameras[i].intrinsics == rig[i].intrinsics);
    CHECK(parsed.cameras[i].cam_to_ego_rotation == rig[i].cam_to_ego_rotation);
    CHECK(parsed.cameras[i].cam_to_ego_translation == rig[i].cam_to_ego_translation);
  }
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(parsed.poses[i].timestamp == poses[i].timestamp);
    CHECK(parsed.poses[i].rotation == poses[i].rotation);
    CHECK(parsed.poses[i].translation == poses[i].translation);
  }
}

TEST_CASE("rig parse errors name the line") {
  try {
    parse_rig("camera A 10 10 K 1 0 0 0 1 0 0 0 1 R 1 0 0 0 1 0 0 0 1 T 0 0\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInput);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_rig("\n\nbogus 1 2 3\n"), Error);
}
