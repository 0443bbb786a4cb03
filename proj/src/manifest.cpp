#include "datscan/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace datscan {
namespace fs = std::filesystem;

std::size_t DatasetManifest::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [l](const ManifestEntry& e) { return e.label == l; }));
}

void DatasetManifest::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (e.subject_id.empty()) throw std::invalid_argument("manifest entry with empty subject id");
    if (!seen.insert(e.subject_id).second) throw std::invalid_argument("duplicate subject id '" + e.subject_id + "'");
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

DatasetManifest read_manifest(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ManifestError("manifest not found: " + file.string());

  DatasetManifest m;
  m.root = file.parent_path();
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{"subject_id", "relative_path", "label"}) {
    throw ManifestError(file.string() + ": expected header 'subject_id,relative_path,label'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 3) throw ManifestError(file.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
    const auto label = try_parse_label(cells[2]);
    if (!label) throw ManifestError(file.string() + ":" + std::to_string(line_no) + ": bad label '" + cells[2] + "'");
    m.entries.push_back({cells[0], cells[1], *label});
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ManifestError(file.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ManifestError("cannot write manifest " + file.string());
  out << "subject_id,relative_path,label\n";
  for (const auto& e : m.entries) out << e.subject_id << ',' << e.path.generic_string() << ',' << to_string(e.label) << '\n';
  if (!out) throw ManifestError("failed writing manifest " + file.string());
}

DatasetManifest scan_image_tree(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ManifestError("image tree not found: " + dir.string());
  DatasetManifest m;
  m.root = dir;
  for (Label l : kAllLabels) {
    const fs::path sub = dir / std::string(class_dir(l));
    if (!fs::is_directory(sub)) continue;
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(sub))
      if (f.is_regular_file() && f.path().extension() == ".png") files.push_back(f.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) m.entries.push_back({f.stem().string(), fs::relative(f, dir), l});
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ManifestError(dir.string() + ": " + e.what());
  }
  return m;
}

DatasetManifest export_image_tree(const DatasetManifest& m, const fs::path& out_dir) {
  DatasetManifest out;
  out.root = out_dir;
  for (Label l : kAllLabels) fs::create_directories(out_dir / std::string(class_dir(l)));
  for (const auto& e : m.entries) {
    const fs::path rel = fs::path(std::string(class_dir(e.label))) / (e.subject_id + ".png");
    fs::copy_file(m.resolve(e), out_dir / rel, fs::copy_options::overwrite_existing);
    out.entries.push_back({e.subject_id, rel, e.label});
  }
  return out;
}

}  // namespace datscan
