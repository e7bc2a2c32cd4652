#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sts {

enum class ErrorKind {
  kInput,            // missing files, bad scene/config text
  kFormat,           // malformed tensor or weight file
  kConfig,           // inconsistent configuration values
  kShape,            // tensor shapes that do not line up
  kDomain,           // argument outside the valid numeric domain
  kInvalidPose,      // rotation not orthonormal
  kAlignment,        // bin counts that cannot be duplicated onto each other
  kResolution,       // strides that cannot be pooled onto each other
  kUndefinedMetric,  // metric over an empty set
  kContract,         // caller broke a precondition
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Tensor file parse failure; carries the byte offset where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& message, std::uint64_t offset)
      : Error(ErrorKind::kFormat, message + " (at byte offset " + std::to_string(offset) + ")"),
        detail_(message),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
};

/// Process exit code for an error: 2 input, 3 data format, 4 numeric/contract.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace sts
