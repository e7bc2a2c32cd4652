#include "sts/synthworld.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "sts/error.hpp"
#include "sts/io.hpp"
#include "sts/parallel.hpp"

namespace sts {

std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  // splitmix64 finaliser over the mixed pair
  std::uint64_t z = seed ^ (value + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double hash_uniform(std::uint64_t key) {
  return static_cast<double>(hash_combine(key, 0x5bd1e995ull) >> 11) * 0x1.0p-53;
}

double hash_normal(std::uint64_t key) {
  const double u1 = 1.0 - hash_uniform(hash_combine(key, 1));  // (0, 1]
  const double u2 = hash_uniform(hash_combine(key, 2));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SceneSpec::validate() const {
  if (rig.empty()) throw Error(ErrorKind::kInput, "scene has no cameras");
  if (trajectory.empty()) throw Error(ErrorKind::kInput, "scene has no ego poses");
  if (channels <= 0 || channels % 2 != 0) {
    throw Error(ErrorKind::kInput, "scene channel count must be positive and even");
  }
  if (feature_stride <= 0) throw Error(ErrorKind::kInput, "scene stride must be positive");
  for (const auto& cam : rig) cam.validate();
  for (const auto& pose : trajectory) pose.validate();
  for (const auto& s : surfaces) {
    if (!(s.half_u > 0.0) || !(s.half_v > 0.0) || !(s.texture_scale > 0.0) ||
        std::abs(s.axis_u.norm() - 1.0) > 1e-9 || std::abs(s.axis_v.norm() - 1.0) > 1e-9 ||
        std::abs(s.axis_u.dot(s.axis_v)) > 1e-9) {
      throw Error(ErrorKind::kInput, "surface " + std::to_string(s.id) +
                                         " needs orthonormal axes and positive size and scale");
    }
  }
}

namespace {

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double lattice(std::uint64_t key, std::int64_t x, std::int64_t y) {
  const std::uint64_t k = hash_combine(hash_combine(key, static_cast<std::uint64_t>(x)),
                                       static_cast<std::uint64_t>(y));
  return 2.0 * hash_uniform(k) - 1.0;
}

// Smooth value noise in [-1, 1] with unit lattice spacing.
double value_noise(std::uint64_t key, double x, double y) {
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  const auto xi = static_cast<std::int64_t>(xf);
  const auto yi = static_cast<std::int64_t>(yf);
  const double tx = fade(x - xf);
  const double ty = fade(y - yf);
  const double a = lattice(key, xi, yi);
  const double b = lattice(key, xi + 1, yi);
  const double c = lattice(key, xi, yi + 1);
  const double d = lattice(key, xi + 1, yi + 1);
  return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
}

constexpr double kPhaseWarpCycles = 0.35;

}  // namespace

void sample_texture(std::uint64_t seed, int texture_id, double scale, double u, double v,
                    std::span<double> out) {
  const std::size_t pairs = out.size() / 2;
  const std::uint64_t base = hash_combine(seed, static_cast<std::uint64_t>(texture_id) + 1);
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::uint64_t key = hash_combine(base, k);
    const double angle = 2.0 * std::numbers::pi * hash_uniform(hash_combine(key, 11));
    const double phase0 = 2.0 * std::numbers::pi * hash_uniform(hash_combine(key, 12));
    const double wavelength = scale * std::exp2(static_cast<double>(k % 4) / 2.0);
    const double along = (std::cos(angle) * u + std::sin(angle) * v) / wavelength;
    const double warp =
        kPhaseWarpCycles * value_noise(hash_combine(key, 13), u / (2.0 * wavelength), v / (2.0 * wavelength));
    const double phase = 2.0 * std::numbers::pi * (along + warp) + phase0;
    out[2 * k] = std::cos(phase);
    out[2 * k + 1] = std::sin(phase);
  }
}

namespace {

void constant_texture(std::uint64_t seed, int texture_id, std::span<double> out) {
  const std::uint64_t base = hash_combine(seed, static_cast<std::uint64_t>(texture_id) + 1);
  for (std::size_t k = 0; k < out.size() / 2; ++k) {
    const double phase0 = 2.0 * std::numbers::pi * hash_uniform(hash_combine(hash_combine(base, k), 12));
    out[2 * k] = std::cos(phase0);
    out[2 * k + 1] = std::sin(phase0);
  }
}

struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  int surface = -1;
  double u = 0.0;
  double v = 0.0;
};

}  // namespace

RenderedFrame render_camera(const SceneSpec& spec, std::size_t frame, std::size_t camera, int stride) {
  spec.validate();
  if (frame >= spec.trajectory.size()) {
    throw Error(ErrorKind::kInput, "frame " + std::to_string(frame) + " is outside the trajectory of " +
                                       std::to_string(spec.trajectory.size()) + " poses");
  }
  if (camera >= spec.rig.size()) throw Error(ErrorKind::kInput, "camera index out of range");
  if (stride <= 0) throw Error(ErrorKind::kDomain, "stride must be positive");

  const CameraModel& cam = spec.rig[camera];
  const EgoPose& ego = spec.trajectory[frame];
  const Eigen::Matrix3d r_world_cam = ego.rotation * cam.cam_to_ego_rotation;
  const Eigen::Vector3d origin = ego.rotation * cam.cam_to_ego_translation + ego.translation;
  const Eigen::Matrix3d k_inv = cam.intrinsics.inverse();
  const auto height = static_cast<std::size_t>(cam.height / stride);
  const auto width = static_cast<std::size_t>(cam.width / stride);
  const auto channels = static_cast<std::size_t>(spec.channels);
  const double t = static_cast<double>(frame);

  struct Placed {
    Eigen::Vector3d center;
    Eigen::Vector3d normal;
  };
  std::vector<Placed> placed;
  placed.reserve(spec.surfaces.size());
  for (const auto& s : spec.surfaces) {
    placed.push_back({s.center + t * s.velocity, s.axis_u.cross(s.axis_v)});
  }

  RenderedFrame out;
  out.features = FeatureMap{Tensor({channels, height, width}), stride, cam.id, ego.timestamp};
  out.gt_depth = Tensor({height, width});
  out.moving_mask = Mask({height, width});
  out.textureless_mask = Mask({height, width});
  out.surface_id = BasicTensor<std::int32_t>({height, width}, -1);

  const std::size_t plane = height * width;
  parallel_for(height, [&](std::size_t r) {
    std::vector<double> texel(channels);
    for (std::size_t c = 0; c < width; ++c) {
      const Eigen::Vector3d ray_cam = k_inv * Eigen::Vector3d((c + 0.5) * stride, (r + 0.5) * stride, 1.0);
      // ray_cam has z = 1, so the ray parameter is the depth along the principal axis.
      const Eigen::Vector3d dir = r_world_cam * (ray_cam / ray_cam.z());
      Hit best;
      for (std::size_t s = 0; s < spec.surfaces.size(); ++s) {
        const auto& surf = spec.surfaces[s];
        const double denom = placed[s].normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double depth = placed[s].normal.dot(placed[s].center - origin) / denom;
        if (!(depth > 1e-6) || depth >= best.depth) continue;
        const Eigen::Vector3d local = origin + depth * dir - placed[s].center;
        const double u = local.dot(surf.axis_u);
        const double v = local.dot(surf.axis_v);
        if (std::abs(u) > surf.half_u || std::abs(v) > surf.half_v) continue;
        best = {depth, static_cast<int>(s), u, v};
      }
      const std::size_t i = r * width + c;
      if (best.surface < 0) continue;
      const auto& surf = spec.surfaces[static_cast<std::size_t>(best.surface)];
      bool flat = surf.textureless;
      for (const auto& patch : spec.textureless_regions) {
        if (patch.surface_id == surf.id && best.u >= patch.u0 && best.u <= patch.u1 && best.v >= patch.v0 &&
            best.v <= patch.v1) {
          flat = true;
        }
      }
      if (flat) {
        constant_texture(spec.seed, surf.texture_id, texel);
      } else {
        sample_texture(spec.seed, surf.texture_id, surf.texture_scale, best.u, best.v, texel);
      }
      for (std::size_t ch = 0; ch < channels; ++ch) out.features.data[ch * plane + i] = texel[ch];
      out.gt_depth[i] = best.depth;
      out.moving_mask[i] = surf.moving() ? 1 : 0;
      out.textureless_mask[i] = flat ? 1 : 0;
      out.surface_id[i] = surf.id;
    }
  });
  return out;
}

std::vector<RenderedFrame> render(const SceneSpec& spec, std::size_t frame) {
  spec.validate();
  std::vector<RenderedFrame> frames;
  frames.reserve(spec.rig.size());
  for (std::size_t c = 0; c < spec.rig.size(); ++c) {
    frames.push_back(render_camera(spec, frame, c, spec.feature_stride));
  }
  return frames;
}

DepthLogits mono_oracle(const Tensor& gt_depth, const DepthHypothesisSet& bins, const MonoQuality& quality,
                        std::uint64_t seed, std::uint64_t stream, int stride) {
  if (!(quality.sigma_bins > 0.0)) throw Error(ErrorKind::kDomain, "mono oracle sigma_bins must be positive");
  if (quality.noise < 0.0 || quality.center_jitter_bins < 0.0 || quality.reference_depth < 0.0) {
    throw Error(ErrorKind::kDomain, "mono oracle noise parameters must be non-negative");
  }
  if (gt_depth.rank() != 2) throw Error(ErrorKind::kShape, "mono oracle needs a rank-2 depth map");
  const std::size_t count = bins.size();
  const std::size_t plane = gt_depth.size();
  DepthLogits out{Tensor({count, gt_depth.dim(0), gt_depth.dim(1)}), stride};
  const std::uint64_t base = hash_combine(hash_combine(seed, 0x6d6f6e6full), stream);
  constexpr double kFloor = -1e6;

  for (std::size_t i = 0; i < plane; ++i) {
    const int gt_bin = bins.nearest_bin(gt_depth[i]);
    if (gt_bin < 0) continue;  // flat logits
    const double gain = quality.reference_depth > 0.0 ? gt_depth[i] / quality.reference_depth : 1.0;
    const std::uint64_t cell_key = hash_combine(base, i);
    const double sigma = quality.sigma_bins * gain;
    const double center = gt_bin + quality.center_jitter_bins * gain * hash_normal(hash_combine(cell_key, 0));
    const double noise = quality.noise * gain;
    for (std::size_t k = 0; k < count; ++k) {
      const double dk = static_cast<double>(k) - center;
      double logit = std::isinf(sigma) ? 0.0 : std::max(-dk * dk / (2.0 * sigma * sigma), kFloor);
      if (noise > 0.0) logit += noise * hash_normal(hash_combine(cell_key, k + 1));
      out.data[k * plane + i] = logit;
    }
  }
  return out;
}

Tensor project_points_to_depth(std::span<const Eigen::Vector3d> points, const CameraModel& cam, int stride) {
  if (stride <= 0) throw Error(ErrorKind::kDomain, "stride must be positive");
  const auto height = static_cast<std::size_t>(cam.height / stride);
  const auto width = static_cast<std::size_t>(cam.width / stride);
  Tensor depth({height, width});
  const Eigen::Matrix3d r_cam_ego = cam.cam_to_ego_rotation.transpose();
  for (const auto& p : points) {
    const Eigen::Vector3d x = r_cam_ego * (p - cam.cam_to_ego_translation);
    if (!(x.z() > kMinSourceDepth)) continue;
    const Eigen::Vector3d h = cam.intrinsics * x;
    const Eigen::Vector2d px = h.hnormalized();
    if (!in_image(cam, px)) continue;
    const auto c = static_cast<std::size_t>(px.x() / stride);
    const auto r = static_cast<std::size_t>(px.y() / stride);
    if (r >= height || c >= width) continue;
    double& slot = depth.at(r, c);
    if (slot == 0.0 || x.z() < slot) slot = x.z();
  }
  return depth;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

class SceneLine {
 public:
  SceneLine(const std::vector<std::string>& tokens, int line) : tokens_(tokens), line_(line) {}

  const std::string& word(const char* what) {
    if (pos_ >= tokens_.size()) fail(std::string("missing ") + what);
    return tokens_[pos_++];
  }
  double number(const char* what) {
    const std::string& tok = word(what);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) fail("expected a number for " + std::string(what) + ", got '" + tok + "'");
    return v;
  }
  std::int64_t integer(const char* what) {
    const std::string& tok = word(what);
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) fail("expected an integer for " + std::string(what) + ", got '" + tok + "'");
    return v;
  }
  std::uint64_t unsigned_integer(const char* what) {
    const std::string& tok = word(what);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || tok.front() == '-') fail("expected an unsigned integer for " + std::string(what));
    return v;
  }
  Eigen::Vector3d vec3(const char* what) { return {number(what), number(what), number(what)}; }
  void keyword(const char* expected) {
    const std::string& tok = word(expected);
    if (tok != expected) fail("expected '" + std::string(expected) + "', got '" + tok + "'");
  }
  bool done() const { return pos_ == tokens_.size(); }
  void finish() {
    if (!done()) fail("unexpected token '" + tokens_[pos_] + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::kInput, "line " + std::to_string(line_) + ": " + msg);
  }

 private:
  const std::vector<std::string>& tokens_;
  int line_;
  std::size_t pos_ = 0;
};

}  // namespace

SceneSpec parse_scene(std::string_view text) {
  SceneSpec spec;
  Rig rig;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_number = 0;
  while (std::getline(in, raw)) {
    ++line_number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const auto tokens = tokenize(raw);
    if (tokens.empty()) continue;
    if (parse_rig_line(tokens, rig, line_number)) continue;
    SceneLine line(tokens, line_number);
    const std::string kw = line.word("keyword");
    if (kw == "seed") {
      spec.seed = line.unsigned_integer("seed");
    } else if (kw == "channels") {
      spec.channels = static_cast<int>(line.integer("channels"));
    } else if (kw == "stride") {
      spec.feature_stride = static_cast<int>(line.integer("stride"));
    } else if (kw == "surface") {
      Surface s;
      s.id = static_cast<int>(line.integer("surface id"));
      line.keyword("C");
      s.center = line.vec3("centre");
      line.keyword("U");
      s.axis_u = line.vec3("u axis");
      line.keyword("V");
      s.axis_v = line.vec3("v axis");
      line.keyword("size");
      s.half_u = line.number("half_u");
      s.half_v = line.number("half_v");
      line.keyword("texture");
      s.texture_id = static_cast<int>(line.integer("texture id"));
      line.keyword("scale");
      s.texture_scale = line.number("texture scale");
      line.keyword("velocity");
      s.velocity = line.vec3("velocity");
      if (!line.done()) {
        line.keyword("textureless");
        s.textureless = true;
      }
      line.finish();
      spec.surfaces.push_back(s);
    } else if (kw == "patch") {
      TexturelessPatch p;
      p.surface_id = static_cast<int>(line.integer("surface id"));
      p.u0 = line.number("u0");
      p.v0 = line.number("v0");
      p.u1 = line.number("u1");
      p.v1 = line.number("v1");
      line.finish();
      spec.textureless_regions.push_back(p);
    } else {
      line.fail("unknown keyword '" + kw + "'");
    }
  }
  spec.rig = std::move(rig.cameras);
  spec.trajectory = std::move(rig.poses);
  spec.validate();
  return spec;
}

SceneSpec load_scene(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::kInput, "scene file '" + path.string() + "' does not exist");
  }
  try {
    return parse_scene(read_text_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_scene(const SceneSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "seed " << spec.seed << "\nchannels " << spec.channels << "\nstride " << spec.feature_stride << "\n";
  for (const auto& cam : spec.rig) out << format_rig_line(cam) << "\n";
  for (const auto& pose : spec.trajectory) out << format_rig_line(pose) << "\n";
  const auto v3 = [&](const Eigen::Vector3d& v) { out << ' ' << v.x() << ' ' << v.y() << ' ' << v.z(); };
  for (const auto& s : spec.surfaces) {
    out << "surface " << s.id << " C";
    v3(s.center);
    out << " U";
    v3(s.axis_u);
    out << " V";
    v3(s.axis_v);
    out << " size " << s.half_u << ' ' << s.half_v << " texture " << s.texture_id << " scale "
        << s.texture_scale << " velocity";
    v3(s.velocity);
    if (s.textureless) out << " textureless";
    out << "\n";
  }
  for (const auto& p : spec.textureless_regions) {
    out << "patch " << p.surface_id << ' ' << p.u0 << ' ' << p.v0 << ' ' << p.u1 << ' ' << p.v1 << "\n";
  }
  return out.str();
}

}  // namespace sts
