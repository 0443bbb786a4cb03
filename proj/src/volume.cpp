#include "datscan/volume.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace datscan {
namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

[[noreturn]] void malformed(const fs::path& p, const std::string& why) {
  throw VolumeError(VolumeError::Kind::MalformedHeader, p.string() + ": " + why);
}

}  // namespace

Volume load_volume(const fs::path& header_path) {
  std::ifstream in(header_path);
  if (!in) {
    throw VolumeError(VolumeError::Kind::MissingFile, "volume header not found: " + header_path.string());
  }

  std::map<std::string, std::string> fields;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) malformed(header_path, "line " + std::to_string(line_no) + " has no ':'");
    fields[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end() || it->second.empty()) malformed(header_path, "missing field '" + key + "'");
    return it->second;
  };

  if (require("format") != "datscan-volume 1") malformed(header_path, "unsupported format '" + fields["format"] + "'");
  if (require("dtype") != "float32le") malformed(header_path, "unsupported dtype '" + fields["dtype"] + "'");
  if (require("order") != "xyz") malformed(header_path, "unsupported order '" + fields["order"] + "'");

  Dims dims{};
  {
    std::istringstream ds(require("dims"));
    std::string extra;
    if (!(ds >> dims.x >> dims.y >> dims.z) || (ds >> extra)) malformed(header_path, "dims must be three integers");
    if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0) malformed(header_path, "dims must be positive");
  }

  std::optional<Label> label;
  if (auto it = fields.find("label"); it != fields.end() && !it->second.empty()) {
    label = try_parse_label(it->second);
    if (!label) malformed(header_path, "unknown label '" + it->second + "'");
  }

  Volume v(require("subject_id"), dims, label);
  const fs::path payload = header_path.parent_path() / require("payload");
  std::ifstream raw(payload, std::ios::binary);
  if (!raw) throw VolumeError(VolumeError::Kind::MissingFile, "volume payload not found: " + payload.string());

  const std::size_t expected = dims.count() * sizeof(float);
  const auto actual = static_cast<std::size_t>(fs::file_size(payload));
  if (actual != expected) {
    throw VolumeError(VolumeError::Kind::SizeMismatch,
                      payload.string() + ": payload holds " + std::to_string(actual) + " bytes, header implies " +
                          std::to_string(expected));
  }

  std::vector<std::uint32_t> words(dims.count());
  raw.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(expected));
  if (!raw) throw VolumeError(VolumeError::Kind::Io, "failed reading " + payload.string());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::uint32_t w = to_little(words[i]);
    std::memcpy(&v.voxels[i], &w, sizeof(float));
    if (!std::isfinite(v.voxels[i])) {
      throw VolumeError(VolumeError::Kind::NonFinite, payload.string() + ": non-finite voxel at index " + std::to_string(i));
    }
  }
  return v;
}

fs::path save_volume(const Volume& v, const fs::path& dir) {
  if (v.voxels.size() != v.dims.count()) {
    throw VolumeError(VolumeError::Kind::SizeMismatch, "volume " + v.subject_id + " voxel count does not match dims");
  }
  const fs::path header = dir / (v.subject_id + ".hdr");
  const std::string payload_name = v.subject_id + ".raw";

  std::ofstream h(header);
  if (!h) throw VolumeError(VolumeError::Kind::Io, "cannot write " + header.string());
  h << "format: datscan-volume 1\n"
    << "dims: " << v.dims.x << ' ' << v.dims.y << ' ' << v.dims.z << '\n'
    << "dtype: float32le\n"
    << "order: xyz\n"
    << "subject_id: " << v.subject_id << '\n';
  if (v.label) h << "label: " << to_string(*v.label) << '\n';
  h << "payload: " << payload_name << '\n';
  if (!h) throw VolumeError(VolumeError::Kind::Io, "failed writing " + header.string());

  std::vector<std::uint32_t> words(v.voxels.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::uint32_t w;
    std::memcpy(&w, &v.voxels[i], sizeof(float));
    words[i] = to_little(w);
  }
  std::ofstream raw(dir / payload_name, std::ios::binary);
  raw.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * sizeof(float)));
  if (!raw) throw VolumeError(VolumeError::Kind::Io, "failed writing " + (dir / payload_name).string());
  return header;
}

}  // namespace datscan
