#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace crfrefine::cli {

struct ManifestEntry {
  std::filesystem::path score;
  std::filesystem::path image;
  std::optional<std::filesystem::path> gt;  // "-" in the file
  std::filesystem::path output;
};

/// Tab-separated lines: score, image, gt (or "-"), output. Relative paths
/// resolve against the manifest's directory; blank lines and '#' lines are
/// skipped.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Inverse of load_manifest for paths already relative to the manifest.
std::string format_manifest(const std::vector<ManifestEntry>& entries);

}  // namespace crfrefine::cli
