#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace datscan {

/// Diagnostic class. PD is the positive class everywhere in the pipeline.
enum class Label { Control = 0, PD = 1 };

inline constexpr std::array<Label, 2> kAllLabels{Label::Control, Label::PD};

inline std::string_view to_string(Label l) { return l == Label::PD ? "PD" : "CONTROL"; }

/// Directory name used in class-per-subdirectory image trees.
inline std::string_view class_dir(Label l) { return l == Label::PD ? "pd" : "control"; }

inline std::optional<Label> try_parse_label(std::string_view s) {
  if (s == "PD" || s == "pd" || s == "1") return Label::PD;
  if (s == "CONTROL" || s == "control" || s == "0") return Label::Control;
  return std::nullopt;
}

inline Label parse_label(std::string_view s) {
  if (auto l = try_parse_label(s)) return *l;
  throw std::invalid_argument("unknown label '" + std::string(s) + "'");
}

inline int as_target(Label l) { return l == Label::PD ? 1 : 0; }

}  // namespace datscan
