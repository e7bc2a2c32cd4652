#include "sts/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sts/error.hpp"

namespace sts {

static_assert(std::endian::native == std::endian::little, "tensor I/O assumes a little-endian host");

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInput:
    case ErrorKind::kConfig:
    case ErrorKind::kShape:
      return 2;
    case ErrorKind::kFormat:
      return 3;
    default:
      return 4;
  }
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void BinaryWriter::u16(std::uint16_t v) {
  bytes_.push_back(static_cast<std::uint8_t>(v & 0xff));
  bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
}

void BinaryWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void BinaryWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void BinaryWriter::raw(std::span<const char> chars) {
  for (char c : chars) bytes_.push_back(static_cast<std::uint8_t>(c));
}

void BinaryReader::need(std::size_t n, const char* what) const {
  if (bytes_.size() - pos_ < n) {
    throw FormatError(std::string("truncated data while reading ") + what, pos_);
  }
}

std::uint8_t BinaryReader::u8(const char* what) {
  need(1, what);
  return bytes_[pos_++];
}

std::uint16_t BinaryReader::u16(const char* what) {
  need(2, what);
  const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
  pos_ += 2;
  return v;
}

std::uint32_t BinaryReader::u32(const char* what) {
  need(4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

float BinaryReader::f32(const char* what) { return std::bit_cast<float>(u32(what)); }

void BinaryReader::expect_end() const {
  if (pos_ != bytes_.size()) {
    throw FormatError(std::to_string(bytes_.size() - pos_) + " trailing bytes", pos_);
  }
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.rank() > 255) throw Error(ErrorKind::kShape, "tensor rank exceeds 255");
  BinaryWriter out;
  out.raw(kTensorMagic);
  out.u16(kTensorVersion);
  out.u8(static_cast<std::uint8_t>(tensor.rank()));
  for (std::size_t d : tensor.shape()) {
    if (d > 0xffffffffu) throw Error(ErrorKind::kShape, "tensor dimension exceeds u32");
    out.u32(static_cast<std::uint32_t>(d));
  }
  for (double v : tensor.values()) out.f32(static_cast<float>(v));
  return out.bytes();
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  BinaryReader in(bytes);
  for (std::size_t i = 0; i < 4; ++i) {
    const std::uint64_t at = in.offset();
    if (in.u8("magic") != static_cast<std::uint8_t>(kTensorMagic[i])) {
      throw FormatError("bad magic, expected \"STST\"", at);
    }
  }
  const std::uint64_t version_at = in.offset();
  const std::uint16_t version = in.u16("version");
  if (version != kTensorVersion) {
    throw FormatError("unsupported tensor version " + std::to_string(version), version_at);
  }
  const std::uint8_t rank = in.u8("rank");
  std::vector<std::size_t> shape(rank);
  std::size_t count = 1;
  for (auto& d : shape) {
    const std::uint64_t at = in.offset();
    d = in.u32("dimension");
    if (d != 0 && count > bytes.size() / d) {
      throw FormatError("dimension " + std::to_string(d) + " exceeds the file size", at);
    }
    count *= d;
  }
  if (in.remaining() != count * 4) {
    throw FormatError("payload holds " + std::to_string(in.remaining()) + " bytes, header " +
                          shape_string(shape) + " needs " + std::to_string(count * 4),
                      in.offset());
  }
  Tensor t(shape);
  for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(in.f32("value"));
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kInput, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInput, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kInput, "cannot write '" + path.string() + "'");
  out << text;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  write_file_bytes(path, encode_tensor(tensor));
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  }
}

void write_pgm(const std::filesystem::path& path, const Tensor& image, double lo, double hi) {
  if (image.rank() != 2) throw Error(ErrorKind::kShape, "PGM export needs a rank-2 tensor");
  const std::size_t h = image.dim(0);
  const std::size_t w = image.dim(1);
  std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  const double span = hi > lo ? hi - lo : 1.0;
  for (double v : image.values()) {
    const double t = std::clamp((v - lo) / span, 0.0, 1.0);
    bytes.push_back(static_cast<std::uint8_t>(std::lround(t * 255.0)));
  }
  write_file_bytes(path, bytes);
}

}  // namespace sts
