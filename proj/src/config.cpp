#include "sts/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "sts/error.hpp"
#include "sts/io.hpp"

namespace sts {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(int line, const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::kConfig,
              "line " + std::to_string(line) + ": " + key + " = '" + value + "' is not " + expected);
}

template <typename T>
T parse_number(int line, const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(line, key, value, "a number");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) bad_value(line, key, value, "a finite number");
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, msg); };
  if (!(depth_min > 0.0) || !(depth_max > depth_min)) fail("depth range needs 0 < depth.min < depth.max");
  if (depth_bins <= 0 || stereo_bins <= 0) fail("bin counts must be positive");
  if (depth_bins % stereo_bins != 0) {
    fail("depth.bins (" + std::to_string(depth_bins) + ") must be a multiple of depth.stereo_bins (" +
         std::to_string(stereo_bins) + ")");
  }
  if (reference_frame == 0) fail("sweep.frame must be at least 1 so a previous frame exists");
  if (feature_stride && *feature_stride <= 0) fail("feature.stride must be positive");
  if (output_stride <= 0) fail("output.stride must be positive");
  if (feature_stride && output_stride % *feature_stride != 0) {
    fail("output.stride must be a multiple of feature.stride");
  }
  if (groups <= 0) fail("cost.groups must be positive");
  if (!(bev_extent > 0.0) || !(bev_cell > 0.0)) fail("bev.extent and bev.cell must be positive");
  if (!(mono.sigma_bins > 0.0)) fail("mono.sigma_bins must be positive");
  if (mono.noise < 0.0 || mono.center_jitter_bins < 0.0 || mono.reference_depth < 0.0) {
    fail("mono noise parameters must be non-negative");
  }
}

DepthHypothesisSet RunConfig::final_hypotheses() const {
  return make_hypotheses(depth_mode, depth_min, depth_max, depth_bins);
}

DepthHypothesisSet RunConfig::stereo_hypotheses() const {
  return make_hypotheses(depth_mode, depth_min, depth_max, stereo_bins);
}

BevGridConfig RunConfig::bev_grid() const { return BevGridConfig::centered(bev_extent, bev_cell); }

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string content = trim(raw);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, "line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (value.empty()) throw Error(ErrorKind::kConfig, "line " + std::to_string(line) + ": empty value for " + key);

    try {
      if (key == "scene") {
        cfg.scene = base_dir / value;
      } else if (key == "depth.mode") {
        cfg.depth_mode = parse_depth_mode(value);
      } else if (key == "depth.min") {
        cfg.depth_min = parse_number<double>(line, key, value);
      } else if (key == "depth.max") {
        cfg.depth_max = parse_number<double>(line, key, value);
      } else if (key == "depth.bins") {
        cfg.depth_bins = parse_number<int>(line, key, value);
      } else if (key == "depth.stereo_bins") {
        cfg.stereo_bins = parse_number<int>(line, key, value);
      } else if (key == "sweep.mode") {
        cfg.sweep_mode = parse_sweep_mode(value);
      } else if (key == "sweep.frame") {
        cfg.reference_frame = parse_number<std::size_t>(line, key, value);
      } else if (key == "feature.stride") {
        cfg.feature_stride = parse_number<int>(line, key, value);
      } else if (key == "output.stride") {
        cfg.output_stride = parse_number<int>(line, key, value);
      } else if (key == "cost.groups") {
        cfg.groups = parse_number<int>(line, key, value);
      } else if (key == "cost.head") {
        cfg.head = base_dir / value;
      } else if (key == "bev.extent") {
        cfg.bev_extent = parse_number<double>(line, key, value);
      } else if (key == "bev.cell") {
        cfg.bev_cell = parse_number<double>(line, key, value);
      } else if (key == "mono.sigma_bins") {
        cfg.mono.sigma_bins = parse_number<double>(line, key, value);
      } else if (key == "mono.noise") {
        cfg.mono.noise = parse_number<double>(line, key, value);
      } else if (key == "mono.jitter_bins") {
        cfg.mono.center_jitter_bins = parse_number<double>(line, key, value);
      } else if (key == "mono.reference_depth") {
        cfg.mono.reference_depth = parse_number<double>(line, key, value);
      } else if (key == "decode.mode") {
        cfg.decode = parse_decode_mode(value);
      } else if (key == "out") {
        cfg.out = value;
      } else if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(line, key, value);
      } else {
        throw Error(ErrorKind::kConfig, "line " + std::to_string(line) + ": unknown key '" + key + "'");
      }
    } catch (const Error& e) {
      const std::string tag = "line " + std::to_string(line) + ": ";
      if (std::string_view(e.what()).starts_with(tag)) throw;
      throw Error(ErrorKind::kConfig, tag + e.what());
    }
  }
  if (cfg.scene.empty()) throw Error(ErrorKind::kConfig, "config does not name a scene");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorKind::kInput, "config file '" + path.string() + "' does not exist");
  }
  try {
    return parse_config(read_text_file(path), path.parent_path());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_config(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "scene = " << c.scene.filename().string() << "\n"
      << "depth.mode = " << to_string(c.depth_mode) << "\n"
      << "depth.min = " << c.depth_min << "\n"
      << "depth.max = " << c.depth_max << "\n"
      << "depth.bins = " << c.depth_bins << "\n"
      << "depth.stereo_bins = " << c.stereo_bins << "\n"
      << "sweep.mode = " << to_string(c.sweep_mode) << "\n"
      << "sweep.frame = " << c.reference_frame << "\n";
  if (c.feature_stride) out << "feature.stride = " << *c.feature_stride << "\n";
  out << "output.stride = " << c.output_stride << "\n"
      << "cost.groups = " << c.groups << "\n";
  if (c.head) out << "cost.head = " << c.head->filename().string() << "\n";
  out << "bev.extent = " << c.bev_extent << "\n"
      << "bev.cell = " << c.bev_cell << "\n"
      << "mono.sigma_bins = " << c.mono.sigma_bins << "\n"
      << "mono.noise = " << c.mono.noise << "\n"
      << "mono.jitter_bins = " << c.mono.center_jitter_bins << "\n"
      << "mono.reference_depth = " << c.mono.reference_depth << "\n"
      << "decode.mode = " << to_string(c.decode) << "\n"
      << "out = " << c.out.string() << "\n";
  if (c.seed) out << "seed = " << *c.seed << "\n";
  return out.str();
}

}  // namespace sts
