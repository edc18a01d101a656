#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mhd/space.hpp"

namespace mhd {

/// Exact depth value count/total. Sample depths are always multiples of 1/n,
/// so they are kept as integers and compared by cross-multiplication.
struct DepthValue {
  std::uint32_t count = 0;
  std::uint32_t total = 1;

  double value() const { return static_cast<double>(count) / static_cast<double>(total); }

  friend bool operator==(const DepthValue& a, const DepthValue& b) {
    return std::uint64_t{a.count} * b.total == std::uint64_t{b.count} * a.total;
  }
  friend std::strong_ordering operator<=>(const DepthValue& a, const DepthValue& b) {
    return std::uint64_t{a.count} * b.total <=> std::uint64_t{b.count} * a.total;
  }
};

struct AnchorOrigin {
  std::size_t source = 0;  ///< index of the sample point it came from
  bool jiggled = false;
};

/// Ordered anchor points; sample points first, then jiggles grouped by source.
struct AnchorSet {
  std::vector<Point> points;
  std::vector<AnchorOrigin> origin;

  static AnchorSet from_sample(std::span<const Point> sample);
  std::size_t size() const { return points.size(); }
};

using AnchorPair = std::pair<std::size_t, std::size_t>;

/// Counts #{i : d(X_i, a) <= d(X_i, b)} over ordered anchor pairs a != b.
/// Ties on the bisector count for both orders, so count(a,b)+count(b,a) >= n.
class HalfspaceTable {
 public:
  /// anchor_by_sample(a, i) = d(anchor a, X_i).
  static HalfspaceTable build(const DistanceMatrix& anchor_by_sample);

  std::size_t anchors() const { return anchors_; }
  std::size_t sample_size() const { return sample_size_; }
  std::uint32_t count(std::size_t a, std::size_t b) const { return counts_[a * anchors_ + b]; }
  DepthValue probability(std::size_t a, std::size_t b) const {
    return {count(a, b), static_cast<std::uint32_t>(sample_size_)};
  }

  /// Smallest entry over the pairs admissible for a query, i.e. pairs with
  /// d(y,a) <= d(y,b), given query_to_anchor[a] = d(y, a). Returns the
  /// lexicographically first minimizing pair, or nullopt when no pair is
  /// admissible (single anchor); the depth is then 1 by convention.
  std::pair<DepthValue, std::optional<AnchorPair>> min_admissible(std::span<const double> query_to_anchor) const;

  /// Smallest admissible entry, or nullopt as soon as some admissible entry
  /// falls below `floor`.
  std::optional<std::uint32_t> min_admissible_at_least(std::span<const double> query_to_anchor,
                                                       std::uint32_t floor) const;

 private:
  static constexpr std::uint32_t kExcluded = 0xFFFFFFFFu;

  std::size_t anchors_ = 0;
  std::size_t sample_size_ = 0;
  std::vector<std::uint32_t> counts_;  // diagonal holds kExcluded
  std::vector<std::uint32_t> row_min_;

  // Scans rows in order; returns the minimum and its row, stopping early once
  // the minimum drops below floor.
  std::pair<std::uint32_t, std::size_t> scan(std::span<const double> query_to_anchor, std::uint32_t floor) const;
};

struct DepthEntry {
  std::size_t query = 0;
  DepthValue depth;
  std::optional<AnchorPair> anchors;
};

using DepthReport = std::vector<DepthEntry>;

/// y lies in the closed halfspace {z : d(z,x1) <= d(z,x2)}.
bool halfspace_membership(const Space& space, const Point& y, const Point& x1, const Point& x2);

HalfspaceTable halfspace_prob_table(const Space& space, std::span<const Point> sample, const AnchorSet& anchors);

/// Approximate depth of each query w.r.t. the sample using halfspaces
/// anchored at ordered pairs of anchors.
DepthReport approx_depth(const Space& space, std::span<const Point> sample, const AnchorSet& anchors,
                         std::span<const Point> queries);

/// Median of d(X_i, X_j) over i < j.
double median_pairwise_distance(const Space& space, std::span<const Point> sample);

struct JiggleOptions {
  std::size_t per_point = 0;
  double radius_frac = 0.1;
  std::uint64_t seed = 0;
};

/// Sample points plus `per_point` random perturbations exp(X_i, v) of each,
/// v isotropic Gaussian with sd radius_frac * median pairwise distance.
/// Jiggle j of point i depends only on (seed, i, j), so the anchor set for a
/// smaller per_point is a subset of the one for a larger per_point.
AnchorSet jiggle_anchors(const Space& space, std::span<const Point> sample, const JiggleOptions& options);

/// Holds the halfspace table of one (sample, anchors) problem and evaluates
/// depths of arbitrary points against it.
class DepthEvaluator {
 public:
  DepthEvaluator(Space space, std::vector<Point> sample, AnchorSet anchors);

  const Space& space() const { return space_; }
  const std::vector<Point>& sample() const { return sample_; }
  const AnchorSet& anchors() const { return anchors_; }
  const HalfspaceTable& table() const { return table_; }

  DepthEntry evaluate(const Point& y, std::size_t query_index = 0) const;
  DepthReport evaluate(std::span<const Point> queries) const;
  /// Depth of y, or nullopt once it is known to be below floor.
  std::optional<DepthValue> depth_at_least(const Point& y, DepthValue floor) const;

  double distance_sum(const Point& y) const;
  double median_pairwise_distance() const;

 private:
  Space space_;
  std::vector<Point> sample_;
  AnchorSet anchors_;
  HalfspaceTable table_;
  mutable std::optional<double> median_distance_;
};

struct DeepestPoint {
  Point point;
  DepthValue depth;
  std::size_t index = 0;
  double distance_sum = 0.0;
};

/// Sample point of largest approximate depth; ties go to the smallest sum of
/// distances to the sample, then to the lowest index.
DeepestPoint in_sample_deepest(const DepthEvaluator& evaluator);
DeepestPoint in_sample_deepest(const Space& space, std::span<const Point> sample, const AnchorSet& anchors);

struct RefineOptions {
  std::size_t budget = 200;
  /// Starting proposal sd; <= 0 means 0.1 * median pairwise distance.
  double initial_radius = 0.0;
  /// Proposal sd at the end of the budget relative to the start.
  double final_ratio = 0.01;
  std::uint64_t seed = 0;
};

struct RefinedPoint {
  Point point;
  DepthValue depth;
  double distance_sum = 0.0;
  std::size_t accepted = 0;
};

/// Random local search for an out-of-sample point of larger approximate
/// depth. Proposals exp(current, v) use a geometrically shrinking radius; a
/// proposal is accepted on strictly larger depth, or equal depth and strictly
/// smaller distance sum. The returned depth is never below the start's.
RefinedPoint refine_deepest(const DepthEvaluator& evaluator, const DeepestPoint& start, const RefineOptions& options);

}  // namespace mhd
