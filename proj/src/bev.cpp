#include "sts/bev.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "sts/error.hpp"
#include "sts/parallel.hpp"

namespace sts {

BevGridConfig BevGridConfig::centered(double half_extent, double cell_size) {
  BevGridConfig cfg;
  cfg.origin_x = -half_extent;
  cfg.origin_y = -half_extent;
  cfg.cell_size = cell_size;
  const auto n = static_cast<std::size_t>(std::llround(2.0 * half_extent / cell_size));
  cfg.cells_x = n;
  cfg.cells_y = n;
  cfg.validate();
  return cfg;
}

void BevGridConfig::validate() const {
  if (!(cell_size > 0.0) || cells_x == 0 || cells_y == 0 || !std::isfinite(origin_x) ||
      !std::isfinite(origin_y)) {
    throw Error(ErrorKind::kConfig, "BEV grid needs a positive cell size and cell counts");
  }
}

std::ptrdiff_t BevGridConfig::cell_of(const Eigen::Vector3d& point) const {
  const double fx = std::floor((point.x() - origin_x) / cell_size);
  const double fy = std::floor((point.y() - origin_y) / cell_size);
  if (!(fx >= 0.0 && fx < static_cast<double>(cells_x) && fy >= 0.0 &&
        fy < static_cast<double>(cells_y))) {
    return -1;
  }
  return static_cast<std::ptrdiff_t>(fx) * static_cast<std::ptrdiff_t>(cells_y) +
         static_cast<std::ptrdiff_t>(fy);
}

Tensor BevGrid::l2_norm() const {
  const std::size_t channels = data.dim(0);
  const std::size_t plane = data.dim(1) * data.dim(2);
  Tensor out({data.dim(1), data.dim(2)});
  for (std::size_t i = 0; i < plane; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += data[c * plane + i] * data[c * plane + i];
    out[i] = std::sqrt(acc);
  }
  return out;
}

FrustumPoints lift(const FeatureMap& features, const DepthDistribution& dist, const CameraModel& cam) {
  if (features.height() != dist.height() || features.width() != dist.width() ||
      features.stride != dist.stride) {
    throw Error(ErrorKind::kShape, "lift: feature grid " + shape_string(features.data.shape()) +
                                       "@" + std::to_string(features.stride) +
                                       " does not match distribution " +
                                       shape_string(dist.probs.shape()) + "@" +
                                       std::to_string(dist.stride));
  }
  const std::size_t channels = features.channels();
  const std::size_t bins = dist.probs.dim(0);
  const std::size_t height = dist.height();
  const std::size_t width = dist.width();
  const std::size_t plane = height * width;
  const Eigen::Matrix3d k_inv = cam.intrinsics_at_stride(dist.stride).inverse();

  std::size_t count = 0;
  for (double p : dist.probs.values()) count += (p != 0.0);

  FrustumPoints out;
  out.positions.reserve(count);
  out.pixel.reserve(count);
  out.features = Tensor({count, channels});
  std::size_t n = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    const std::size_t r = i / width;
    const std::size_t c = i % width;
    const Eigen::Vector3d ray = k_inv * Eigen::Vector3d(c + 0.5, r + 0.5, 1.0);
    for (std::size_t k = 0; k < bins; ++k) {
      const double p = dist.probs[k * plane + i];
      if (p == 0.0) continue;
      const Eigen::Vector3d x_cam = ray * (dist.bins.center(k) / ray.z());
      out.positions.push_back(cam.cam_to_ego_rotation * x_cam + cam.cam_to_ego_translation);
      out.pixel.push_back(i);
      for (std::size_t ch = 0; ch < channels; ++ch) {
        out.features.at(n, ch) = features.data[ch * plane + i] * p;
      }
      ++n;
    }
  }
  return out;
}

BevGrid splat(const FrustumPoints& points, const BevGridConfig& config) {
  config.validate();
  const std::size_t channels = points.channels();
  BevGrid grid{Tensor({channels, config.cells_x, config.cells_y}), config};

  std::vector<std::pair<std::ptrdiff_t, std::size_t>> order;
  order.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::ptrdiff_t cell = config.cell_of(points.positions[i]);
    if (cell >= 0) order.emplace_back(cell, i);
  }
  // Fixed reduction order: by cell, then by source pixel, then by bin (point order).
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (points.pixel[a.second] != points.pixel[b.second]) {
      return points.pixel[a.second] < points.pixel[b.second];
    }
    return a.second < b.second;
  });

  const std::size_t plane = config.cells_x * config.cells_y;
  for (const auto& [cell, idx] : order) {
    for (std::size_t ch = 0; ch < channels; ++ch) {
      grid.data[ch * plane + static_cast<std::size_t>(cell)] += points.features.at(idx, ch);
    }
  }
  return grid;
}

FeatureMap pool_features(const FeatureMap& map, int target_stride) {
  if (target_stride <= 0 || target_stride % map.stride != 0) {
    throw Error(ErrorKind::kResolution, "cannot pool stride " + std::to_string(map.stride) +
                                            " features to stride " + std::to_string(target_stride));
  }
  const auto factor = static_cast<std::size_t>(target_stride / map.stride);
  if (map.height() % factor != 0 || map.width() % factor != 0) {
    throw Error(ErrorKind::kResolution, "feature grid is not divisible by the pooling factor");
  }
  const std::size_t oh = map.height() / factor;
  const std::size_t ow = map.width() / factor;
  FeatureMap out{Tensor({map.channels(), oh, ow}), target_stride, map.camera_id, map.timestamp};
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (std::size_t ch = 0; ch < map.channels(); ++ch)
    for (std::size_t r = 0; r < oh; ++r)
      for (std::size_t c = 0; c < ow; ++c) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < factor; ++dy)
          for (std::size_t dx = 0; dx < factor; ++dx)
            acc += map.data.at(ch, r * factor + dy, c * factor + dx);
        out.data.at(ch, r, c) = acc * inv;
      }
  return out;
}

}  // namespace sts
