#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dte/sample.hpp"

namespace dte {

struct FoldPlan {
  int k_folds = 0;
  std::vector<int> fold_of;  // 0-based fold per unit

  // Units in fold k, and the complement, in row order.
  std::vector<std::size_t> in_fold(int k) const;
  std::vector<std::size_t> out_of_fold(int k) const;
};

// Stratified by treatment arm. Within an arm units are shuffled and dealt to
// folds in a shuffled fold order, so the first n mod K folds of that order get
// one extra unit. Throws ConfigError if k < 2 or k > min(n1, n0).
FoldPlan make_folds(const Sample& sample, int k, std::uint64_t seed);

// Same, stratified by (group, arm): units of an arm are dealt group by group,
// which balances arms across folds and arms within each group across folds.
FoldPlan make_group_folds(const Sample& sample, std::span<const int> group, int k,
                          std::uint64_t seed);

}  // namespace dte
