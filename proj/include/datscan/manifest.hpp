#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "datscan/label.hpp"

namespace datscan {

struct ManifestEntry {
  std::string subject_id;
  std::filesystem::path path;  // relative to DatasetManifest::root
  Label label = Label::Control;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Subjects with labels and file locations. Subject ids are unique.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::size_t count(Label l) const;
  std::filesystem::path resolve(const ManifestEntry& e) const { return root / e.path; }

  /// Throws std::invalid_argument on a duplicate subject id.
  void validate() const;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV with header `subject_id,relative_path,label`. Paths resolve against
/// the manifest's own directory.
DatasetManifest read_manifest(const std::filesystem::path& file);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& file);

/// Builds a manifest from `<dir>/<class>/<subject_id>.png`.
DatasetManifest scan_image_tree(const std::filesystem::path& dir);

/// Copies each entry's image into `<out_dir>/<class>/<subject_id>.png` and
/// returns the manifest of the copied tree.
DatasetManifest export_image_tree(const DatasetManifest& m, const std::filesystem::path& out_dir);

}  // namespace datscan
