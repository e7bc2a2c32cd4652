#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sts/geometry.hpp"
#include "sts/hypotheses.hpp"
#include "sts/tensor.hpp"

namespace sts {

/// C_F x H' x W' feature grid sampled at stride `stride` of its camera image.
struct FeatureMap {
  Tensor data;
  int stride = 1;
  std::string camera_id;
  std::int64_t timestamp = 0;

  std::size_t channels() const { return data.dim(0); }
  std::size_t height() const { return data.dim(1); }
  std::size_t width() const { return data.dim(2); }
};

/// Source features averaged per (depth bin, reference cell).
struct WarpedVolume {
  Tensor data;               // C_F x D x H' x W'
  CountTensor valid_count;   // D x H' x W'
};

enum class SweepMode { kSurround, kSameCamera };

SweepMode parse_sweep_mode(std::string_view text);
std::string_view to_string(SweepMode mode);

struct ReferenceView {
  const FeatureMap& features;
  const CameraModel& camera;
  const EgoPose& ego;
};

struct SourceView {
  std::reference_wrapper<const FeatureMap> features;
  std::reference_wrapper<const CameraModel> camera;
  std::reference_wrapper<const EgoPose> ego;
};

/// Bilinear interpolation at full-resolution image pixel (u, v); texel (i, j) of the
/// map has its centre at image pixel ((j + 0.5) * stride, (i + 0.5) * stride).
/// Neighbours past the border replicate the edge texel. Throws kContract when (u, v)
/// is outside the image covered by the map.
void bilinear_sample(const FeatureMap& map, double u, double v, std::span<double> out);
std::vector<double> bilinear_sample(const FeatureMap& map, double u, double v);

WarpedVolume build_warped_volume(const ReferenceView& ref, std::span<const SourceView> sources,
                                 const DepthHypothesisSet& hypotheses, SweepMode mode);

namespace detail {

/// Per-(source, depth) homographies in full-resolution pixels for the sources that
/// participate under `mode`, ordered by ascending camera id.
class WarpPlan {
 public:
  WarpPlan(const ReferenceView& ref, std::span<const SourceView> sources,
           const DepthHypothesisSet& hypotheses, SweepMode mode);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t depths() const noexcept { return depths_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  /// Mean of valid source samples for one cell, written to `out`; `scratch` must hold
  /// channels() values. Returns the number of contributing sources. Zero-fills `out`
  /// when nothing is valid.
  int warp_cell(std::size_t depth, std::size_t row, std::size_t col, std::span<double> out,
                std::span<double> scratch) const;

 private:
  struct Active {
    const FeatureMap* features;
    const CameraModel* camera;
    std::vector<Eigen::Matrix3d> homographies;
  };
  std::vector<Active> active_;
  std::vector<double> depth_values_;
  std::size_t channels_ = 0;
  std::size_t depths_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  int stride_ = 1;
};

}  // namespace detail

}  // namespace sts
