#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "datscan/manifest.hpp"

namespace datscan {

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of;

  std::size_t fold_size(int fold) const;
  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

struct HoldoutSplit {
  DatasetManifest train;
  DatasetManifest test;
};

/// Optional exact per-class test counts for stratified_holdout.
struct HoldoutOverrides {
  std::optional<std::size_t> control;
  std::optional<std::size_t> pd;
};

/// Each class is shuffled with one seeded SplitMix64 stream (classes in
/// CONTROL, PD order) and dealt round-robin across folds. The dealing
/// position carries over from one class to the next so fold totals stay
/// within one of each other.
FoldAssignment stratified_kfold(const DatasetManifest& m, int k, std::uint64_t seed);

/// Returns (train, val) for fold `fold`, both in manifest order.
std::pair<DatasetManifest, DatasetManifest> fold_datasets(const DatasetManifest& m, const FoldAssignment& fa, int fold);

/// Per class, round(test_frac * n_c) subjects go to test; the largest class
/// then absorbs any difference from round(test_frac * N). Overrides replace
/// the computed count for their class and bypass the repair.
HoldoutSplit stratified_holdout(const DatasetManifest& m, double test_frac, std::uint64_t seed,
                                const HoldoutOverrides& overrides = {});

}  // namespace datscan
