#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

#include "datscan/manifest.hpp"

namespace datscan::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("datscan-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

/// In-memory manifest with `n_control` controls followed by `n_pd` PD subjects.
inline DatasetManifest make_manifest(std::size_t n_control, std::size_t n_pd) {
  DatasetManifest m;
  for (std::size_t i = 0; i < n_control + n_pd; ++i) {
    const std::string id = "s" + std::to_string(i);
    m.entries.push_back({id, id + ".png", i < n_control ? Label::Control : Label::PD});
  }
  return m;
}

}  // namespace datscan::testing
