#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mhd/space.hpp"

namespace mhd {

struct Group {
  std::string label;
  std::vector<Point> points;
};

struct GroupedSample {
  Space space;
  std::vector<Group> groups;

  std::size_t total_size() const;
};

struct TestResult {
  std::string test;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_permutations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> group_labels;
  /// Observed depth ranks of the pooled observations (groups in order), one
  /// row per reference group; the Wilcoxon test has a single row (reference
  /// = first group).
  std::vector<std::vector<double>> depth_ranks;
};

/// Ascending average ranks (ties share the mean rank), 1-based.
std::vector<double> average_ranks(std::span<const double> values);

/// Approximate depths of evaluate_on w.r.t. reference (anchors = reference),
/// converted to average ranks.
std::vector<double> depth_ranks(const Space& space, std::span<const Point> reference,
                                std::span<const Point> evaluate_on);

/// Two-sample test: pooled observations are ranked by depth w.r.t. the first
/// group; the statistic is the rank sum of the second group, and the
/// two-sided permutation p-value uses |rank sum - its null mean|.
TestResult wilcoxon_depth_test(const Space& space, std::span<const Point> first, std::span<const Point> second,
                               std::size_t n_permutations, std::uint64_t seed);

/// k-sample test: for every reference group, all observations are ranked by
/// depth w.r.t. that group and the tie-corrected Kruskal-Wallis statistic is
/// formed on those ranks; the statistic is the sum over reference groups.
TestResult kruskal_wallis_depth_test(const GroupedSample& sample, std::size_t n_permutations, std::uint64_t seed);

/// Pairwise Wilcoxon tests over the upper triangle (i < j) of the groups.
struct PairwiseEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  TestResult result;
};
std::vector<PairwiseEntry> pairwise_wilcoxon(const GroupedSample& sample, std::size_t n_permutations,
                                             std::uint64_t seed);

}  // namespace mhd
