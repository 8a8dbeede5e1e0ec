#include "dte/folds.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "dte/errors.hpp"
#include "dte/rng.hpp"

namespace dte {

std::vector<std::size_t> FoldPlan::in_fold(int k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == k) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::out_of_fold(int k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != k) out.push_back(i);
  }
  return out;
}

namespace {

void check_k(const Sample& sample, int k) {
  if (k < 2) throw ConfigError("k_folds must be at least 2, got " + std::to_string(k));
  const std::size_t m = std::min(sample.n_treated(), sample.n_control());
  if (static_cast<std::size_t>(k) > m) {
    throw ConfigError("k_folds = " + std::to_string(k) + " exceeds the smaller arm size " +
                      std::to_string(m));
  }
}

// Deals `units` (already in final order) round-robin over a shuffled fold order.
void deal(const std::vector<std::size_t>& units, int k, Rng& rng, std::vector<int>& fold_of) {
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t pos = 0; pos < units.size(); ++pos) {
    fold_of[units[pos]] = order[pos % static_cast<std::size_t>(k)];
  }
}

}  // namespace

FoldPlan make_folds(const Sample& sample, int k, std::uint64_t seed) {
  check_k(sample, k);
  FoldPlan plan{k, std::vector<int>(sample.size(), -1)};
  Rng rng(seed);
  for (int arm : {1, 0}) {
    auto units = sample.arm_indices(arm);
    std::shuffle(units.begin(), units.end(), rng);
    deal(units, k, rng, plan.fold_of);
  }
  return plan;
}

FoldPlan make_group_folds(const Sample& sample, std::span<const int> group, int k,
                          std::uint64_t seed) {
  if (group.size() != sample.size()) throw ConfigError("group column length mismatch");
  check_k(sample, k);
  FoldPlan plan{k, std::vector<int>(sample.size(), -1)};
  Rng rng(seed);
  for (int arm : {1, 0}) {
    std::map<int, std::vector<std::size_t>> cells;
    for (std::size_t i : sample.arm_indices(arm)) cells[group[i]].push_back(i);
    std::vector<std::size_t> units;
    for (auto& [g, members] : cells) {
      std::shuffle(members.begin(), members.end(), rng);
      units.insert(units.end(), members.begin(), members.end());
    }
    deal(units, k, rng, plan.fold_of);
  }
  return plan;
}

}  // namespace dte
