#include "sts/costvol.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sts/error.hpp"
#include "sts/io.hpp"
#include "sts/parallel.hpp"

namespace sts {

namespace {

void check_groups(std::size_t channels, int groups) {
  if (groups <= 0 || channels % static_cast<std::size_t>(groups) != 0) {
    throw Error(ErrorKind::kConfig, "group count " + std::to_string(groups) +
                                        " does not divide feature channels " +
                                        std::to_string(channels));
  }
}

// Group correlations of one cell. `stride` steps between channels of `a`/`b`.
void correlate_cell(const double* a, std::size_t a_stride, const double* b, std::size_t b_stride,
                    std::size_t channels, int groups, double* out, std::size_t out_stride) {
  const std::size_t width = channels / static_cast<std::size_t>(groups);
  const double scale = 1.0 / static_cast<double>(width);
  for (int g = 0; g < groups; ++g) {
    double acc = 0.0;
    const std::size_t base = static_cast<std::size_t>(g) * width;
    for (std::size_t c = base; c < base + width; ++c) acc += a[c * a_stride] * b[c * b_stride];
    out[static_cast<std::size_t>(g) * out_stride] = acc * scale;
  }
}

}  // namespace

CostVolume group_correlation(const FeatureMap& ref, const WarpedVolume& warped, int groups) {
  const std::size_t channels = ref.channels();
  check_groups(channels, groups);
  if (warped.data.rank() != 4 || warped.data.dim(0) != channels ||
      warped.data.dim(2) != ref.height() || warped.data.dim(3) != ref.width()) {
    throw Error(ErrorKind::kShape, "warped volume " + shape_string(warped.data.shape()) +
                                       " does not match reference features " +
                                       shape_string(ref.data.shape()));
  }
  const std::size_t depths = warped.data.dim(1);
  const std::size_t height = ref.height();
  const std::size_t width = ref.width();
  require_shape(warped.valid_count.shape(), {depths, height, width}, "valid_count");

  const auto g = static_cast<std::size_t>(groups);
  CostVolume vol{Tensor({g, depths, height, width}), groups};
  const std::size_t plane = height * width;
  const std::size_t slab = depths * plane;
  parallel_for(depths * height, [&](std::size_t dr) {
    const std::size_t d = dr / height;
    const std::size_t r = dr % height;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t cell = (d * height + r) * width + c;
      if (warped.valid_count[cell] == 0) continue;
      correlate_cell(ref.data.data() + r * width + c, plane, warped.data.data() + cell, slab,
                     channels, groups, vol.data.data() + cell, slab);
    }
  });
  return vol;
}

CostVolumeBuild build_cost_volume(const ReferenceView& ref, std::span<const SourceView> sources,
                                  const DepthHypothesisSet& hypotheses, SweepMode mode,
                                  int groups) {
  check_groups(ref.features.channels(), groups);
  const detail::WarpPlan plan(ref, sources, hypotheses, mode);
  const std::size_t channels = plan.channels();
  const std::size_t depths = plan.depths();
  const std::size_t height = plan.height();
  const std::size_t width = plan.width();
  const auto g = static_cast<std::size_t>(groups);

  CostVolumeBuild out{CostVolume{Tensor({g, depths, height, width}), groups},
                      CountTensor({depths, height, width})};
  const std::size_t plane = height * width;
  const std::size_t slab = depths * plane;
  parallel_for(depths * height, [&](std::size_t dr) {
    const std::size_t d = dr / height;
    const std::size_t r = dr % height;
    std::vector<double> cell(channels);
    std::vector<double> scratch(channels);
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t idx = (d * height + r) * width + c;
      const int n = plan.warp_cell(d, r, c, cell, scratch);
      out.valid_count[idx] = n;
      if (n == 0) continue;
      correlate_cell(ref.features.data.data() + r * width + c, plane, cell.data(), 1, channels,
                     groups, out.volume.data.data() + idx, slab);
    }
  });
  return out;
}

void RegularizerWeights::check(std::size_t groups) const {
  if (is_default()) return;
  if (layers.size() != 3) {
    throw Error(ErrorKind::kConfig,
                "regularizer needs exactly 3 layers, got " + std::to_string(layers.size()));
  }
  std::size_t expected_in = groups;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    if (layer.in != expected_in || layer.out == 0 || layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw Error(ErrorKind::kConfig, "regularizer layer " + std::to_string(i) +
                                          " has shape " + std::to_string(layer.out) + "x" +
                                          std::to_string(layer.in) + ", expected input width " +
                                          std::to_string(expected_in));
    }
    expected_in = layer.out;
  }
  if (expected_in != 1) {
    throw Error(ErrorKind::kConfig, "regularizer must end in a single output channel");
  }
}

RegularizerWeights RegularizerWeights::load(const std::filesystem::path& path) {
  BinaryReader in(read_file_bytes(path));
  RegularizerWeights head;
  const std::uint32_t count = in.u32("layer count");
  if (count > 64) throw FormatError("implausible regularizer layer count", 0);
  for (std::uint32_t i = 0; i < count; ++i) {
    RegularizerLayer layer;
    layer.in = in.u32("layer input width");
    layer.out = in.u32("layer output width");
    if (layer.in == 0 || layer.out == 0 || layer.in * layer.out > (1u << 24)) {
      throw FormatError("implausible regularizer layer shape", in.offset());
    }
    layer.weights.resize(layer.in * layer.out);
    for (auto& w : layer.weights) w = in.f32("weight");
    layer.bias.resize(layer.out);
    for (auto& b : layer.bias) b = in.f32("bias");
    head.layers.push_back(std::move(layer));
  }
  in.expect_end();
  return head;
}

RegularizerWeights RegularizerWeights::scaled_mean(std::size_t groups, double scale) {
  if (groups == 0 || !std::isfinite(scale)) {
    throw Error(ErrorKind::kConfig, "scaled mean head needs groups > 0 and a finite scale");
  }
  const double inv = 1.0 / static_cast<double>(groups);
  RegularizerLayer split{groups, 2, std::vector<double>(2 * groups, inv), {0.0, 0.0}};
  std::fill(split.weights.begin() + static_cast<std::ptrdiff_t>(groups), split.weights.end(), -inv);
  RegularizerLayer pass{2, 2, {1.0, 0.0, 0.0, 1.0}, {0.0, 0.0}};
  RegularizerLayer merge{2, 1, {scale, -scale}, {0.0}};
  return RegularizerWeights{{split, pass, merge}};
}

void RegularizerWeights::save(const std::filesystem::path& path) const {
  BinaryWriter out;
  out.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) {
    out.u32(static_cast<std::uint32_t>(layer.in));
    out.u32(static_cast<std::uint32_t>(layer.out));
    for (double w : layer.weights) out.f32(static_cast<float>(w));
    for (double b : layer.bias) out.f32(static_cast<float>(b));
  }
  write_file_bytes(path, out.bytes());
}

DepthLogits regularize(const CostVolume& volume, const RegularizerWeights& head, int stride) {
  if (volume.data.rank() != 4) throw Error(ErrorKind::kShape, "cost volume must be rank 4");
  const std::size_t groups = volume.data.dim(0);
  head.check(groups);
  const std::size_t cells = volume.data.dim(1) * volume.data.dim(2) * volume.data.dim(3);
  DepthLogits out{Tensor({volume.data.dim(1), volume.data.dim(2), volume.data.dim(3)}), stride};

  if (head.is_default()) {
    const double inv = 1.0 / static_cast<double>(groups);
    parallel_for(cells, [&](std::size_t i) {
      double acc = 0.0;
      for (std::size_t g = 0; g < groups; ++g) acc += volume.data[g * cells + i];
      out.data[i] = acc * inv;
    });
    return out;
  }

  std::size_t widest = groups;
  for (const auto& layer : head.layers) widest = std::max(widest, layer.out);
  parallel_for(cells, [&](std::size_t i) {
    std::vector<double> x(widest);
    std::vector<double> y(widest);
    for (std::size_t g = 0; g < groups; ++g) x[g] = volume.data[g * cells + i];
    for (std::size_t l = 0; l < head.layers.size(); ++l) {
      const auto& layer = head.layers[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        double acc = layer.bias[o];
        for (std::size_t k = 0; k < layer.in; ++k) acc += layer.weights[o * layer.in + k] * x[k];
        y[o] = (l + 1 < head.layers.size()) ? std::max(acc, 0.0) : acc;
      }
      std::swap(x, y);
    }
    out.data[i] = x[0];
  });
  return out;
}

DepthLogits pool_to_output(const DepthLogits& logits, int target_stride) {
  if (logits.stride <= 0 || target_stride <= 0 || target_stride % logits.stride != 0) {
    throw Error(ErrorKind::kResolution, "cannot pool stride " + std::to_string(logits.stride) +
                                            " logits to stride " + std::to_string(target_stride));
  }
  const auto factor = static_cast<std::size_t>(target_stride / logits.stride);
  if (factor == 1) return logits;
  const std::size_t bins = logits.bins();
  const std::size_t h = logits.height();
  const std::size_t w = logits.width();
  if (h % factor != 0 || w % factor != 0) {
    throw Error(ErrorKind::kResolution, "logit grid " + std::to_string(h) + "x" + std::to_string(w) +
                                            " is not divisible by pooling factor " +
                                            std::to_string(factor));
  }
  const std::size_t oh = h / factor;
  const std::size_t ow = w / factor;
  DepthLogits out{Tensor({bins, oh, ow}), target_stride};
  const double inv = 1.0 / static_cast<double>(factor * factor);
  parallel_for(bins * oh, [&](std::size_t kr) {
    const std::size_t k = kr / oh;
    const std::size_t r = kr % oh;
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t dy = 0; dy < factor; ++dy)
        for (std::size_t dx = 0; dx < factor; ++dx)
          acc += logits.data.at(k, r * factor + dy, c * factor + dx);
      out.data.at(k, r, c) = acc * inv;
    }
  });
  return out;
}

StereoResult stereo_pipeline(const ReferenceView& ref, std::span<const SourceView> sources,
                             const StereoConfig& config) {
  if (!config.stereo_bins.compatible_with(config.final_bins)) {
    throw Error(ErrorKind::kAlignment,
                "stereo and final depth bins must share mode, d_min and d_max");
  }
  config.head.check(static_cast<std::size_t>(config.groups));
  auto built = build_cost_volume(ref, sources, config.stereo_bins, config.mode, config.groups);
  DepthLogits raw = regularize(built.volume, config.head, ref.features.stride);
  built.volume.data = Tensor();  // release before pooling
  StereoResult result;
  result.stereo_logits = pool_to_output(raw, config.output_stride);
  result.logits =
      expand_bins(result.stereo_logits, static_cast<int>(config.final_bins.size()));
  result.valid_count = std::move(built.valid_count);
  return result;
}

}  // namespace sts
