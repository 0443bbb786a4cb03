#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "datscan/augment.hpp"
#include "datscan/model/model.hpp"
#include "datscan/model/schedule.hpp"
#include "datscan/phantom.hpp"
#include "datscan/triplet.hpp"

namespace datscan {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Environment variable that overrides paths.data_root.
inline constexpr const char* kDataRootEnv = "DATSCAN_DATA_ROOT";

struct PipelineConfig {
  std::filesystem::path data_root = "data";
  std::filesystem::path output_root = "out";

  std::size_t n_control = 210;
  std::size_t n_pd = 449;
  PhantomParams phantom;

  int z0 = 40;
  Axis axis = Axis::Axial;

  AugmentationConfig aug;
  TrainConfig train;
  StepDecaySchedule schedule;

  int k = 10;
  std::uint64_t split_seed = 7;
  double test_frac = 0.2;
  std::optional<std::size_t> test_control;
  std::optional<std::size_t> test_pd;

  bool plots = true;
  bool verbose = false;

  using KeyValues = std::map<std::string, std::string>;

  /// Applies `key = value` overrides; unknown keys and bad values throw.
  void apply(const KeyValues& kv);
  /// Every key with its effective value, in the same syntax apply() reads.
  KeyValues to_key_values() const;
  void validate() const;
};

/// Parses `dotted.key = value` lines; `#` starts a comment.
PipelineConfig::KeyValues parse_config_text(const std::string& text, const std::string& origin = "<config>");
PipelineConfig::KeyValues read_config_file(const std::filesystem::path& file);
std::string format_config(const PipelineConfig& cfg);

}  // namespace datscan
