#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "crfrefine/tensor.hpp"

namespace crfrefine {

enum class IoErrorKind {
  kOpenFailed,
  kBadMagic,
  kBadHeader,
  kUnsupportedVersion,
  kZeroDimension,
  kDimensionOverflow,
  kTruncated,
  kTrailingData,
  kValueOutOfRange,
  kWriteFailed,
};

std::string_view to_string(IoErrorKind kind);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
        kind_(kind), detail_(detail) {}
  IoErrorKind kind() const { return kind_; }
  const std::string& detail() const { return detail_; }

 private:
  IoErrorKind kind_;
  std::string detail_;
};

// CRFT layout: "CRFT" | u32 version (1) | u32 H | u32 W | u32 C | H*W*C little-endian f32.
inline constexpr std::uint32_t kTensorFormatVersion = 1;

std::string encode_tensor(const Tensor3& tensor);
Tensor3 decode_tensor(std::string_view bytes);

std::string encode_ppm(const Image& image);
Image decode_ppm(std::string_view bytes);

/// PGM (P5, maxval 255). Labels above 255 cannot be stored.
std::string encode_pgm(const LabelMap& labels);
/// num_classes bounds every non-void label; values above it raise kValueOutOfRange.
LabelMap decode_pgm(std::string_view bytes, int num_classes,
                    std::uint16_t void_label = kDefaultVoidLabel);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

Tensor3 load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const Tensor3& tensor);
Image load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const Image& image);
LabelMap load_pgm(const std::filesystem::path& path, int num_classes,
                  std::uint16_t void_label = kDefaultVoidLabel);
void save_pgm(const std::filesystem::path& path, const LabelMap& labels);

}  // namespace crfrefine
