#pragma once

#include <fmt/format.h>

#include <string>
#include <vector>

#include "cxrnet/prng.hpp"

namespace cxrnet::testing {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
};

/// 234 NORMAL and 390 PNEUMONIA test items where exactly `false_pos` normals
/// and `false_neg` pneumonia cases land on the wrong side of 0.5.
inline ScoredSet benchmark_fixture(std::size_t false_pos, std::size_t false_neg) {
  ScoredSet s;
  for (std::size_t i = 0; i < 234; ++i) {
    s.labels.push_back(0);
    s.scores.push_back(i < false_pos ? 0.8 : 0.2);
  }
  for (std::size_t i = 0; i < 390; ++i) {
    s.labels.push_back(1);
    s.scores.push_back(i < false_neg ? 0.3 : 0.9);
  }
  return s;
}

inline std::string percent_2dp(double fraction) { return fmt::format("{:.2f}", 100.0 * fraction); }

/// Random labelled scores with both classes present. Scores come from a
/// coarse grid so duplicates (including across classes) are common.
inline ScoredSet random_scored_set(Prng& prng, std::size_t n) {
  ScoredSet s;
  const auto grid = static_cast<std::uint64_t>(1 + prng.below(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.labels.push_back(i == 0 ? 0 : i == 1 ? 1 : static_cast<int>(prng.below(2)));
    s.scores.push_back(static_cast<double>(prng.below(grid)) / static_cast<double>(grid));
  }
  return s;
}

}  // namespace cxrnet::testing
