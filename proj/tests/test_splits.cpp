#include <doctest.h>

#include <set>

#include "datscan/rng.hpp"
#include "datscan/splits.hpp"
#include "test_util.hpp"

using namespace datscan;
using datscan::testing::make_manifest;

namespace {

std::size_t class_count(const DatasetManifest& m, const FoldAssignment& fa, int fold, Label l) {
  std::size_t n = 0;
  for (const auto& e : m.entries) n += fa.fold_of.at(e.subject_id) == fold && e.label == l;
  return n;
}

std::set<std::string> ids(const DatasetManifest& m) {
  std::set<std::string> s;
  for (const auto& e : m.entries) s.insert(e.subject_id);
  return s;
}

void check_kfold_invariants(const DatasetManifest& m, const FoldAssignment& fa) {
  REQUIRE(fa.fold_of.size() == m.size());
  for (const auto& e : m.entries) {
    const int f = fa.fold_of.at(e.subject_id);
    CHECK(f >= 0);
    CHECK(f < fa.k);
  }
  for (Label l : kAllLabels) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (int f = 0; f < fa.k; ++f) {
      const std::size_t n = class_count(m, fa, f, l);
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
  }
  for (int f = 0; f < fa.k; ++f) {
    const auto [train, val] = fold_datasets(m, fa, f);
    CHECK(train.size() + val.size() == m.size());
    CHECK(val.size() == fa.fold_size(f));
    auto all = ids(train);
    for (const auto& id : ids(val)) CHECK(all.insert(id).second);
    CHECK(all == ids(m));
  }
}

void check_holdout_invariants(const DatasetManifest& m, const HoldoutSplit& h, double frac) {
  auto all = ids(h.train);
  for (const auto& id : ids(h.test)) CHECK(all.insert(id).second);
  CHECK(all == ids(m));
  for (Label l : kAllLabels) {
    const double want = frac * static_cast<double>(m.count(l));
    CHECK(std::abs(static_cast<double>(h.test.count(l)) - want) <= 1.0);
  }
}

}  // namespace

TEST_CASE("ten folds over 210 controls and 449 PD") {
  const DatasetManifest m = make_manifest(210, 449);
  const FoldAssignment fa = stratified_kfold(m, 10, 7);
  CHECK(fa.k == 10);
  int full = 0, short_folds = 0;
  for (int f = 0; f < 10; ++f) {
    const std::size_t c = class_count(m, fa, f, Label::Control);
    const std::size_t p = class_count(m, fa, f, Label::PD);
    CHECK(c == 21);
    if (p == 45) ++full;
    if (p == 44) ++short_folds;
    const auto [train, val] = fold_datasets(m, fa, f);
    CHECK(train.size() == (val.size() == 66 ? 593u : 594u));
  }
  CHECK(full == 9);
  CHECK(short_folds == 1);
  check_kfold_invariants(m, fa);
}

TEST_CASE("five by five with k = 5 gives one of each per fold") {
  const DatasetManifest m = make_manifest(5, 5);
  const FoldAssignment fa = stratified_kfold(m, 5, 1);
  for (int f = 0; f < 5; ++f) {
    CHECK(class_count(m, fa, f, Label::Control) == 1);
    CHECK(class_count(m, fa, f, Label::PD) == 1);
  }
}

TEST_CASE("k = 2 over four entries splits two and two") {
  const DatasetManifest m = make_manifest(2, 2);
  const FoldAssignment fa = stratified_kfold(m, 2, 3);
  for (int f = 0; f < 2; ++f) {
    const auto [train, val] = fold_datasets(m, fa, f);
    CHECK(train.size() == 2);
    CHECK(val.size() == 2);
  }
}

TEST_CASE("kfold preconditions") {
  CHECK_THROWS_AS(stratified_kfold(make_manifest(5, 5), 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_kfold(make_manifest(3, 20), 4, 0), std::invalid_argument);
  const DatasetManifest m = make_manifest(4, 4);
  const FoldAssignment fa = stratified_kfold(m, 2, 0);
  CHECK_THROWS_AS(fold_datasets(m, fa, 2), std::out_of_range);
  CHECK_THROWS_AS(fold_datasets(m, fa, -1), std::out_of_range);
}

TEST_CASE("kfold is deterministic and seed-sensitive") {
  const DatasetManifest m = make_manifest(30, 50);
  const FoldAssignment a = stratified_kfold(m, 5, 11);
  CHECK(a == stratified_kfold(m, 5, 11));
  const FoldAssignment b = stratified_kfold(m, 5, 12);
  CHECK_FALSE(a == b);
  check_kfold_invariants(m, b);
}

TEST_CASE("holdout 0.2 on 659 subjects") {
  const DatasetManifest m = make_manifest(210, 449);
  const HoldoutSplit h = stratified_holdout(m, 0.2, 7);
  CHECK(h.train.size() == 527);
  CHECK(h.test.size() == 132);
  CHECK(h.test.count(Label::Control) == 42);
  CHECK(h.test.count(Label::PD) == 90);
  check_holdout_invariants(m, h, 0.2);

  const HoldoutSplit o = stratified_holdout(m, 0.2, 7, {43, 89});
  CHECK(o.test.count(Label::Control) == 43);
  CHECK(o.test.count(Label::PD) == 89);
  CHECK(o.train.size() == 527);
  check_holdout_invariants(m, o, 0.2);
}

TEST_CASE("holdout 0.2 on five by five gives one of each") {
  const HoldoutSplit h = stratified_holdout(make_manifest(5, 5), 0.2, 0);
  CHECK(h.test.count(Label::Control) == 1);
  CHECK(h.test.count(Label::PD) == 1);
  CHECK(h.train.size() == 8);
}

TEST_CASE("holdout preconditions") {
  CHECK_THROWS_AS(stratified_holdout(make_manifest(5, 5), 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_holdout(make_manifest(5, 5), 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_holdout(make_manifest(0, 5), 0.2, 0), std::invalid_argument);
  CHECK_THROWS_AS(stratified_holdout(make_manifest(5, 5), 0.2, 0, {6, std::nullopt}), std::invalid_argument);
}

TEST_CASE("random manifests keep every split invariant") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = static_cast<int>(rng.between(2, 10));
    const auto nc = static_cast<std::size_t>(rng.between(k, 80));
    const auto np = static_cast<std::size_t>(rng.between(k, 80));
    const DatasetManifest m = make_manifest(nc, np);
    const std::uint64_t seed = rng();
    const FoldAssignment fa = stratified_kfold(m, k, seed);
    check_kfold_invariants(m, fa);
    CHECK(fa == stratified_kfold(m, k, seed));

    const double frac = rng.uniform(0.05, 0.5);
    const HoldoutSplit h = stratified_holdout(m, frac, seed);
    check_holdout_invariants(m, h, frac);
    const HoldoutSplit h2 = stratified_holdout(m, frac, seed);
    CHECK(h.test.entries == h2.test.entries);
    CHECK(h.train.entries == h2.train.entries);
  }
}
