#include "crfrefine/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

namespace crfrefine {

std::string_view to_string(IoErrorKind kind) {
  switch (kind) {
    case IoErrorKind::kOpenFailed: return "open failed";
    case IoErrorKind::kBadMagic: return "bad magic";
    case IoErrorKind::kBadHeader: return "bad header";
    case IoErrorKind::kUnsupportedVersion: return "unsupported version";
    case IoErrorKind::kZeroDimension: return "zero dimension";
    case IoErrorKind::kDimensionOverflow: return "dimension overflow";
    case IoErrorKind::kTruncated: return "truncated payload";
    case IoErrorKind::kTrailingData: return "trailing data";
    case IoErrorKind::kValueOutOfRange: return "value out of range";
    case IoErrorKind::kWriteFailed: return "write failed";
  }
  return "unknown";
}

namespace {

// Upper bound on stored elements; keeps indices within int range and rejects
// absurd headers before allocating.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;
constexpr std::uint64_t kMaxSide = static_cast<std::uint64_t>(std::numeric_limits<int>::max());

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + b])) << (8 * b);
  }
  return v;
}

void check_dims(std::uint64_t h, std::uint64_t w, std::uint64_t c, const char* what) {
  if (h == 0 || w == 0 || c == 0) {
    throw IoError(IoErrorKind::kZeroDimension,
                  std::string(what) + " has a zero dimension (" + std::to_string(h) + "x" +
                      std::to_string(w) + "x" + std::to_string(c) + ")");
  }
  if (h > kMaxSide || w > kMaxSide || c > kMaxSide || h * w > kMaxElements ||
      h * w * c > kMaxElements) {
    throw IoError(IoErrorKind::kDimensionOverflow,
                  std::string(what) + " dimensions exceed the supported element count");
  }
}

// Netpbm header: magic, then whitespace-separated width, height, maxval with
// '#' comments, then exactly one whitespace byte before the raster.
struct NetpbmHeader {
  std::uint64_t width = 0;
  std::uint64_t height = 0;
  std::uint64_t maxval = 0;
  std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != magic) {
    throw IoError(IoErrorKind::kBadMagic, "expected " + std::string(magic) + " netpbm magic");
  }
  std::size_t pos = 2;
  auto next_number = [&]() -> std::uint64_t {
    while (pos < bytes.size()) {
      const char ch = bytes[pos];
      if (ch == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size()) throw IoError(IoErrorKind::kTruncated, "netpbm header ends early");
    if (!std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw IoError(IoErrorKind::kBadHeader, "non-numeric netpbm header field");
    }
    std::uint64_t value = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      value = value * 10 + static_cast<std::uint64_t>(bytes[pos] - '0');
      if (value > kMaxElements) {
        throw IoError(IoErrorKind::kDimensionOverflow, "netpbm header field too large");
      }
      ++pos;
    }
    return value;
  };
  NetpbmHeader header;
  header.width = next_number();
  header.height = next_number();
  header.maxval = next_number();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw IoError(IoErrorKind::kTruncated, "netpbm header missing raster separator");
  }
  header.data_offset = pos + 1;
  if (header.maxval != 255) {
    throw IoError(IoErrorKind::kBadHeader,
                  "only maxval 255 is supported, got " + std::to_string(header.maxval));
  }
  return header;
}

void check_payload(std::string_view bytes, std::size_t offset, std::uint64_t expected) {
  const std::uint64_t available = bytes.size() - offset;
  if (available < expected) {
    throw IoError(IoErrorKind::kTruncated, "expected " + std::to_string(expected) +
                                               " payload bytes, found " +
                                               std::to_string(available));
  }
  if (available > expected) {
    throw IoError(IoErrorKind::kTrailingData,
                  std::to_string(available - expected) + " bytes after payload");
  }
}

}  // namespace

std::string encode_tensor(const Tensor3& tensor) {
  check_dims(tensor.height(), tensor.width(), tensor.channels(), "tensor");
  std::string out;
  out.reserve(20 + tensor.size() * 4);
  out.append("CRFT");
  put_u32(out, kTensorFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.height()));
  put_u32(out, static_cast<std::uint32_t>(tensor.width()));
  put_u32(out, static_cast<std::uint32_t>(tensor.channels()));
  for (float v : tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor3 decode_tensor(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "CRFT") {
    throw IoError(IoErrorKind::kBadMagic, "expected CRFT tensor magic");
  }
  if (bytes.size() < 20) throw IoError(IoErrorKind::kTruncated, "tensor header shorter than 20 bytes");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kTensorFormatVersion) {
    throw IoError(IoErrorKind::kUnsupportedVersion, "tensor version " + std::to_string(version));
  }
  const std::uint64_t h = get_u32(bytes, 8);
  const std::uint64_t w = get_u32(bytes, 12);
  const std::uint64_t c = get_u32(bytes, 16);
  check_dims(h, w, c, "tensor");
  const std::uint64_t count = h * w * c;
  check_payload(bytes, 20, count * 4);
  std::vector<float> data(count);
  for (std::size_t k = 0; k < count; ++k) data[k] = std::bit_cast<float>(get_u32(bytes, 20 + 4 * k));
  return Tensor3(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), std::move(data));
}

std::string encode_ppm(const Image& image) {
  check_dims(image.height(), image.width(), 3, "image");
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                    "\n255\n";
  auto rgb = image.rgb();
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

Image decode_ppm(std::string_view bytes) {
  const NetpbmHeader header = parse_netpbm(bytes, "P6");
  check_dims(header.height, header.width, 3, "image");
  const std::uint64_t count = header.height * header.width * 3;
  check_payload(bytes, header.data_offset, count);
  std::vector<std::uint8_t> rgb(bytes.begin() + header.data_offset, bytes.end());
  return Image(static_cast<int>(header.height), static_cast<int>(header.width), std::move(rgb));
}

std::string encode_pgm(const LabelMap& labels) {
  check_dims(labels.height(), labels.width(), 1, "label map");
  std::string out = "P5\n" + std::to_string(labels.width()) + " " +
                    std::to_string(labels.height()) + "\n255\n";
  out.reserve(out.size() + labels.pixels());
  for (auto label : labels.labels()) {
    if (label > 255) {
      throw IoError(IoErrorKind::kValueOutOfRange,
                    "label " + std::to_string(label) + " does not fit an 8-bit PGM");
    }
    out.push_back(static_cast<char>(label));
  }
  return out;
}

LabelMap decode_pgm(std::string_view bytes, int num_classes, std::uint16_t void_label) {
  const NetpbmHeader header = parse_netpbm(bytes, "P5");
  check_dims(header.height, header.width, 1, "label map");
  const std::uint64_t count = header.height * header.width;
  check_payload(bytes, header.data_offset, count);
  std::vector<std::uint16_t> labels(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto label = static_cast<std::uint16_t>(
        static_cast<unsigned char>(bytes[header.data_offset + k]));
    if (label != void_label && label >= num_classes) {
      throw IoError(IoErrorKind::kValueOutOfRange,
                    "label " + std::to_string(label) + " >= num_classes " +
                        std::to_string(num_classes));
    }
    labels[k] = label;
  }
  return LabelMap(static_cast<int>(header.height), static_cast<int>(header.width), num_classes,
                  std::move(labels), void_label);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorKind::kOpenFailed, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoErrorKind::kWriteFailed, tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(IoErrorKind::kWriteFailed, tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(IoErrorKind::kWriteFailed, "rename to " + path.string());
  }
}

Tensor3 load_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const IoError& e) {
    throw IoError(e.kind(), path.string() + ": " + e.detail());
  }
}

void save_tensor(const std::filesystem::path& path, const Tensor3& tensor) {
  write_file_atomic(path, encode_tensor(tensor));
}

Image load_ppm(const std::filesystem::path& path) {
  try {
    return decode_ppm(read_file(path));
  } catch (const IoError& e) {
    throw IoError(e.kind(), path.string() + ": " + e.detail());
  }
}

void save_ppm(const std::filesystem::path& path, const Image& image) {
  write_file_atomic(path, encode_ppm(image));
}

LabelMap load_pgm(const std::filesystem::path& path, int num_classes, std::uint16_t void_label) {
  try {
    return decode_pgm(read_file(path), num_classes, void_label);
  } catch (const IoError& e) {
    throw IoError(e.kind(), path.string() + ": " + e.detail());
  }
}

void save_pgm(const std::filesystem::path& path, const LabelMap& labels) {
  write_file_atomic(path, encode_pgm(labels));
}

}  // namespace crfrefine
