#include "datscan/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace datscan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError("config key '" + key + "': '" + value + "' is not a valid number");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw ConfigError("config key '" + key + "': '" + value + "' is not a valid number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': '" + value + "' is not a boolean");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const PipelineConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

template <typename T>
Field size_field(T PipelineConfig::*member) {
  return {[member](PipelineConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const PipelineConfig& c) { return std::to_string(c.*member); }};
}

#define DATSCAN_REAL(path)                                                                                     \
  Field {                                                                                                      \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.path = parse_real(k, v); },          \
        [](const PipelineConfig& c) { return fmt_double(c.path); }                                             \
  }
#define DATSCAN_INT(path, type)                                                                                \
  Field {                                                                                                      \
    [](PipelineConfig& c, const std::string& k, const std::string& v) { c.path = parse_number<type>(k, v); }, \
        [](const PipelineConfig& c) { return std::to_string(c.path); }                                         \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"paths.data_root",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.data_root = v; },
        [](const PipelineConfig& c) { return c.data_root.string(); }}},
      {"paths.output_root",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.output_root = v; },
        [](const PipelineConfig& c) { return c.output_root.string(); }}},

      {"synth.n_control", size_field(&PipelineConfig::n_control)},
      {"synth.n_pd", size_field(&PipelineConfig::n_pd)},
      {"synth.noise_sigma", DATSCAN_REAL(phantom.noise_sigma)},
      {"synth.control_uptake", DATSCAN_REAL(phantom.control_uptake)},
      {"synth.pd_uptake_factor", DATSCAN_REAL(phantom.pd_uptake_factor)},
      {"synth.asymmetry_factor", DATSCAN_REAL(phantom.asymmetry_factor)},
      {"synth.seed", DATSCAN_INT(phantom.rng_seed, std::uint64_t)},

      {"preprocess.z0", DATSCAN_INT(z0, int)},
      {"preprocess.axis",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          try {
            c.axis = parse_axis(v);
          } catch (const std::invalid_argument& e) {
            throw ConfigError("config key '" + k + "': " + e.what());
          }
        },
        [](const PipelineConfig& c) { return to_string(c.axis); }}},

      {"aug.width_shift", DATSCAN_REAL(aug.width_shift_frac)},
      {"aug.height_shift", DATSCAN_REAL(aug.height_shift_frac)},
      {"aug.brightness_lo", DATSCAN_REAL(aug.brightness_lo)},
      {"aug.brightness_hi", DATSCAN_REAL(aug.brightness_hi)},
      {"aug.hflip_prob", DATSCAN_REAL(aug.hflip_prob)},

      {"train.epochs", DATSCAN_INT(train.epochs, int)},
      {"train.batch_size", DATSCAN_INT(train.batch_size, int)},
      {"train.seed", DATSCAN_INT(train.seed, std::uint64_t)},
      {"train.adam_beta1", DATSCAN_REAL(train.adam.beta1)},
      {"train.adam_beta2", DATSCAN_REAL(train.adam.beta2)},
      {"train.adam_epsilon", DATSCAN_REAL(train.adam.epsilon)},
      {"train.backbone_mode",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          if (v == "fine-tune") {
            c.train.backbone_mode = BackboneMode::FineTune;
          } else if (v == "frozen") {
            c.train.backbone_mode = BackboneMode::Frozen;
          } else {
            throw ConfigError("config key '" + k + "': expected 'fine-tune' or 'frozen', got '" + v + "'");
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.train.backbone_mode == BackboneMode::Frozen ? "frozen" : "fine-tune");
        }}},
      {"train.head_units", DATSCAN_INT(train.head_units, int)},
      {"train.dropout", DATSCAN_REAL(train.dropout)},
      {"train.threshold", DATSCAN_REAL(train.threshold)},
      {"train.input_rows", DATSCAN_INT(train.input_rows, int)},
      {"train.input_cols", DATSCAN_INT(train.input_cols, int)},
      {"train.backbone_widths",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.train.backbone_widths = parse_int_list(k, v); },
        [](const PipelineConfig& c) { return join(c.train.backbone_widths); }}},
      {"train.backbone_weights",
       {[](PipelineConfig& c, const std::string&, const std::string& v) { c.train.backbone_weights = v; },
        [](const PipelineConfig& c) { return c.train.backbone_weights; }}},

      {"schedule.initial_lr", DATSCAN_REAL(schedule.initial_lr)},
      {"schedule.final_lr", DATSCAN_REAL(schedule.final_lr)},
      {"schedule.drop_factor", DATSCAN_REAL(schedule.drop_factor)},
      {"schedule.drop_period", DATSCAN_INT(schedule.drop_period, int)},

      {"split.k", DATSCAN_INT(k, int)},
      {"split.seed", DATSCAN_INT(split_seed, std::uint64_t)},
      {"split.test_frac", DATSCAN_REAL(test_frac)},
      {"split.test_control",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.test_control = v.empty() ? std::nullopt : std::optional(parse_number<std::size_t>(k, v));
        },
        [](const PipelineConfig& c) { return c.test_control ? std::to_string(*c.test_control) : std::string{}; }}},
      {"split.test_pd",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.test_pd = v.empty() ? std::nullopt : std::optional(parse_number<std::size_t>(k, v));
        },
        [](const PipelineConfig& c) { return c.test_pd ? std::to_string(*c.test_pd) : std::string{}; }}},

      {"report.plots",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.plots = parse_bool(k, v); },
        [](const PipelineConfig& c) { return std::string(c.plots ? "true" : "false"); }}},
      {"report.verbose",
       {[](PipelineConfig& c, const std::string& k, const std::string& v) { c.verbose = parse_bool(k, v); },
        [](const PipelineConfig& c) { return std::string(c.verbose ? "true" : "false"); }}},
  };
  return table;
}

#undef DATSCAN_REAL
#undef DATSCAN_INT

}  // namespace

void PipelineConfig::apply(const KeyValues& kv) {
  const auto& table = fields();
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(*this, key, value);
  }
}

PipelineConfig::KeyValues PipelineConfig::to_key_values() const {
  KeyValues kv;
  for (const auto& [key, field] : fields()) kv[key] = field.get(*this);
  return kv;
}

void PipelineConfig::validate() const {
  try {
    phantom.validate();
    aug.validate();
    train.validate();
    schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (z0 < 0) throw ConfigError("preprocess.z0 must be >= 0");
  if (k < 2) throw ConfigError("split.k must be >= 2");
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ConfigError("split.test_frac must lie in (0, 1)");
}

PipelineConfig::KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  PipelineConfig::KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

PipelineConfig::KeyValues read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config file not found: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), file.string());
}

std::string format_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : cfg.to_key_values()) out += key + " = " + value + "\n";
  return out;
}

}  // namespace datscan
