#include "manifest.hpp"

#include <sstream>
#include <stdexcept>

#include "crfrefine/io.hpp"

namespace crfrefine::cli {

namespace fs = std::filesystem;

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  const fs::path base = path.parent_path();
  auto resolve = [&base](const std::string& field) {
    fs::path p(field);
    return p.is_absolute() ? p : base / p;
  };

  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                               std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) {
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": empty field");
      }
    }
    ManifestEntry entry;
    entry.score = resolve(fields[0]);
    entry.image = resolve(fields[1]);
    if (fields[2] != "-") entry.gt = resolve(fields[2]);
    entry.output = resolve(fields[3]);
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) throw std::runtime_error(path.string() + ": manifest has no entries");
  return entries;
}

std::string format_manifest(const std::vector<ManifestEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += e.score.generic_string() + '\t' + e.image.generic_string() + '\t' +
           (e.gt ? e.gt->generic_string() : std::string("-")) + '\t' + e.output.generic_string() +
           '\n';
  }
  return out;
}

}  // namespace crfrefine::cli
