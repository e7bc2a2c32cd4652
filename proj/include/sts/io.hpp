#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sts/tensor.hpp"

namespace sts {

// Tensor files:
//   bytes 0..3   magic "STST"
//   u16          version (1)
//   u8           rank
//   u32 x rank   dims, outermost first
//   f32 x prod(dims) row-major values
// All integers and floats little-endian.
inline constexpr char kTensorMagic[4] = {'S', 'T', 'S', 'T'};
inline constexpr std::uint16_t kTensorVersion = 1;

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

template <typename T>
Tensor to_tensor(const BasicTensor<T>& in) {
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<double>(in[i]);
  return out;
}

/// 8-bit binary PGM of a rank-2 tensor, values mapped linearly from [lo, hi] to [0, 255].
void write_pgm(const std::filesystem::path& path, const Tensor& image, double lo, double hi);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void raw(std::span<const char> chars);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

/// Little-endian cursor; every read failure is a FormatError naming the offset.
class BinaryReader {
 public:
  explicit BinaryReader(std::vector<std::uint8_t> owned) : owned_(std::move(owned)), bytes_(owned_) {}
  explicit BinaryReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8(const char* what);
  std::uint16_t u16(const char* what);
  std::uint32_t u32(const char* what);
  float f32(const char* what);
  void expect_end() const;

  std::uint64_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const;

  std::vector<std::uint8_t> owned_;
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace sts
