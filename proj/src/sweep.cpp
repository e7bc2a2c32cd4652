#include "sts/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sts/error.hpp"
#include "sts/parallel.hpp"

namespace sts {

SweepMode parse_sweep_mode(std::string_view text) {
  if (text == "surround") return SweepMode::kSurround;
  if (text == "same_camera") return SweepMode::kSameCamera;
  throw Error(ErrorKind::kConfig,
              "sweep mode must be 'surround' or 'same_camera', got '" + std::string(text) + "'");
}

std::string_view to_string(SweepMode mode) {
  return mode == SweepMode::kSurround ? "surround" : "same_camera";
}

namespace {

bool inside_map(const FeatureMap& map, double u, double v) {
  const double w = static_cast<double>(map.width() * map.stride);
  const double h = static_cast<double>(map.height() * map.stride);
  return u >= 0.0 && u < w && v >= 0.0 && v < h;
}

// Caller guarantees (u, v) is inside the map.
void bilinear_unchecked(const FeatureMap& map, double u, double v, std::span<double> out) {
  const auto w = static_cast<std::ptrdiff_t>(map.width());
  const auto h = static_cast<std::ptrdiff_t>(map.height());
  const double x = u / map.stride - 0.5;
  const double y = v / map.stride - 0.5;
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  const double tx = x - xf;
  const double ty = y - yf;
  const auto x0 = static_cast<std::ptrdiff_t>(xf);
  const auto y0 = static_cast<std::ptrdiff_t>(yf);
  const std::size_t xa = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x0, 0, w - 1));
  const std::size_t xb = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(x0 + 1, 0, w - 1));
  const std::size_t ya = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y0, 0, h - 1));
  const std::size_t yb = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(y0 + 1, 0, h - 1));

  const double w00 = (1.0 - tx) * (1.0 - ty);
  const double w01 = tx * (1.0 - ty);
  const double w10 = (1.0 - tx) * ty;
  const double w11 = tx * ty;
  const std::size_t plane = map.height() * map.width();
  const std::size_t i00 = ya * map.width() + xa;
  const std::size_t i01 = ya * map.width() + xb;
  const std::size_t i10 = yb * map.width() + xa;
  const std::size_t i11 = yb * map.width() + xb;
  const double* base = map.data.data();
  for (std::size_t c = 0; c < map.channels(); ++c) {
    const double* p = base + c * plane;
    out[c] = w00 * p[i00] + w01 * p[i01] + w10 * p[i10] + w11 * p[i11];
  }
}

}  // namespace

void bilinear_sample(const FeatureMap& map, double u, double v, std::span<double> out) {
  if (!inside_map(map, u, v)) {
    throw Error(ErrorKind::kContract, "bilinear sample at (" + std::to_string(u) + ", " +
                                          std::to_string(v) + ") is outside the feature map");
  }
  if (out.size() < map.channels()) throw Error(ErrorKind::kShape, "bilinear output too small");
  bilinear_unchecked(map, u, v, out);
}

std::vector<double> bilinear_sample(const FeatureMap& map, double u, double v) {
  std::vector<double> out(map.channels());
  bilinear_sample(map, u, v, out);
  return out;
}

namespace detail {

WarpPlan::WarpPlan(const ReferenceView& ref, std::span<const SourceView> sources,
                   const DepthHypothesisSet& hypotheses, SweepMode mode)
    : channels_(ref.features.channels()),
      depths_(hypotheses.size()),
      height_(ref.features.height()),
      width_(ref.features.width()),
      stride_(ref.features.stride) {
  if (hypotheses.size() == 0) throw Error(ErrorKind::kContract, "sweep needs depth hypotheses");
  for (const auto& src : sources) {
    const FeatureMap& fm = src.features.get();
    if (fm.channels() != channels_ || fm.stride != stride_) {
      throw Error(ErrorKind::kShape, "source '" + fm.camera_id + "' has " +
                                         std::to_string(fm.channels()) + " channels at stride " +
                                         std::to_string(fm.stride) + ", reference has " +
                                         std::to_string(channels_) + " at stride " +
                                         std::to_string(stride_));
    }
  }

  std::vector<std::size_t> order(sources.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sources[a].camera.get().id < sources[b].camera.get().id;
  });

  depth_values_ = hypotheses.centers();
  for (std::size_t idx : order) {
    const auto& src = sources[idx];
    const CameraModel& cam = src.camera.get();
    if (mode == SweepMode::kSameCamera && cam.id != ref.camera.id) continue;
    const RelativePose rel = compose_relative_pose(cam, src.ego.get(), ref.camera, ref.ego);
    Active active{&src.features.get(), &cam, {}};
    active.homographies.reserve(depths_);
    for (double d : depth_values_) {
      active.homographies.push_back(plane_homography(rel, ref.camera, cam, d).matrix);
    }
    active_.push_back(std::move(active));
  }
}

int WarpPlan::warp_cell(std::size_t depth, std::size_t row, std::size_t col, std::span<double> out,
                        std::span<double> scratch) const {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(channels_), 0.0);
  const Eigen::Vector3d ref_px((col + 0.5) * stride_, (row + 0.5) * stride_, 1.0);
  int count = 0;
  for (const auto& src : active_) {
    const Eigen::Vector3d h = src.homographies[depth] * ref_px;
    // h.z() * depth is the swept point's depth in the source camera.
    if (!(h.z() * depth_values_[depth] > kMinSourceDepth)) continue;
    const double u = h.x() / h.z();
    const double v = h.y() / h.z();
    if (!std::isfinite(u) || !std::isfinite(v)) continue;
    if (!in_image(*src.camera, {u, v}) || !inside_map(*src.features, u, v)) continue;
    bilinear_unchecked(*src.features, u, v, scratch);
    for (std::size_t c = 0; c < channels_; ++c) out[c] += scratch[c];
    ++count;
  }
  if (count > 1) {
    const double inv = 1.0 / count;
    for (std::size_t c = 0; c < channels_; ++c) out[c] *= inv;
  }
  return count;
}

}  // namespace detail

WarpedVolume build_warped_volume(const ReferenceView& ref, std::span<const SourceView> sources,
                                 const DepthHypothesisSet& hypotheses, SweepMode mode) {
  const detail::WarpPlan plan(ref, sources, hypotheses, mode);
  const std::size_t channels = plan.channels();
  const std::size_t depths = plan.depths();
  const std::size_t height = plan.height();
  const std::size_t width = plan.width();

  WarpedVolume vol{Tensor({channels, depths, height, width}), CountTensor({depths, height, width})};
  const std::size_t slab = depths * height * width;
  parallel_for(depths * height, [&](std::size_t dr) {
    const std::size_t d = dr / height;
    const std::size_t r = dr % height;
    std::vector<double> cell(channels);
    std::vector<double> scratch(channels);
    for (std::size_t c = 0; c < width; ++c) {
      const int n = plan.warp_cell(d, r, c, cell, scratch);
      const std::size_t offset = (d * height + r) * width + c;
      vol.valid_count[offset] = n;
      for (std::size_t ch = 0; ch < channels; ++ch) vol.data[ch * slab + offset] = cell[ch];
    }
  });
  return vol;
}

}  // namespace sts
