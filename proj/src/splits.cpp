#include "datscan/splits.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "datscan/rng.hpp"

namespace datscan {

std::size_t FoldAssignment::fold_size(int fold) const {
  std::size_t n = 0;
  for (const auto& [id, f] : fold_of) n += (f == fold);
  return n;
}

namespace {

std::vector<std::size_t> indices_of(const DatasetManifest& m, Label l) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.entries.size(); ++i)
    if (m.entries[i].label == l) idx.push_back(i);
  return idx;
}

}  // namespace

FoldAssignment stratified_kfold(const DatasetManifest& m, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be at least 2");
  m.validate();

  FoldAssignment fa;
  fa.k = k;
  SplitMix64 rng(seed);
  std::size_t deal = 0;
  for (Label l : kAllLabels) {
    auto idx = indices_of(m, l);
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("class " + std::string(to_string(l)) + " has " + std::to_string(idx.size()) +
                                  " members, fewer than k=" + std::to_string(k));
    }
    shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i : idx) fa.fold_of[m.entries[i].subject_id] = static_cast<int>(deal++ % k);
  }
  return fa;
}

std::pair<DatasetManifest, DatasetManifest> fold_datasets(const DatasetManifest& m, const FoldAssignment& fa, int fold) {
  if (fold < 0 || fold >= fa.k) {
    throw std::out_of_range("fold index " + std::to_string(fold) + " outside [0, " + std::to_string(fa.k) + ")");
  }
  DatasetManifest train{m.root, {}};
  DatasetManifest val{m.root, {}};
  for (const auto& e : m.entries) {
    auto it = fa.fold_of.find(e.subject_id);
    if (it == fa.fold_of.end()) throw std::invalid_argument("subject '" + e.subject_id + "' has no fold");
    (it->second == fold ? val : train).entries.push_back(e);
  }
  return {std::move(train), std::move(val)};
}

HoldoutSplit stratified_holdout(const DatasetManifest& m, double test_frac, std::uint64_t seed,
                                const HoldoutOverrides& overrides) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw std::invalid_argument("test fraction must lie in (0, 1)");
  m.validate();

  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> n_test;
  for (Label l : kAllLabels) {
    members.push_back(indices_of(m, l));
    if (members.back().empty()) throw std::invalid_argument("class " + std::string(to_string(l)) + " is empty");
    n_test.push_back(static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(members.back().size()))));
  }

  const std::optional<std::size_t> forced[2] = {overrides.control, overrides.pd};
  if (!forced[0] && !forced[1]) {
    const auto target = static_cast<long long>(std::llround(test_frac * static_cast<double>(m.size())));
    const std::size_t largest = members[1].size() >= members[0].size() ? 1 : 0;
    const long long diff = target - static_cast<long long>(n_test[0] + n_test[1]);
    n_test[largest] = static_cast<std::size_t>(static_cast<long long>(n_test[largest]) + diff);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    if (forced[c]) n_test[c] = *forced[c];
    if (n_test[c] > members[c].size()) {
      throw std::invalid_argument("requested " + std::to_string(n_test[c]) + " test subjects of class " +
                                  std::string(to_string(kAllLabels[c])) + " but only " +
                                  std::to_string(members[c].size()) + " exist");
    }
  }

  SplitMix64 rng(seed);
  std::set<std::size_t> test_idx;
  for (std::size_t c = 0; c < 2; ++c) {
    shuffle(members[c].begin(), members[c].end(), rng);
    test_idx.insert(members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(n_test[c]));
  }

  HoldoutSplit split{{m.root, {}}, {m.root, {}}};
  for (std::size_t i = 0; i < m.entries.size(); ++i) (test_idx.count(i) ? split.test : split.train).entries.push_back(m.entries[i]);
  return split;
}

}  // namespace datscan
