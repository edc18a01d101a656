#include "mhd/depth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mhd/parallel.hpp"

namespace mhd {

AnchorSet AnchorSet::from_sample(std::span<const Point> sample) {
  AnchorSet a;
  a.points.assign(sample.begin(), sample.end());
  a.origin.resize(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) a.origin[i] = {i, false};
  return a;
}

HalfspaceTable HalfspaceTable::build(const DistanceMatrix& anchor_by_sample) {
  const std::size_t na = anchor_by_sample.rows();
  const std::size_t n = anchor_by_sample.cols();
  if (n == 0) throw std::invalid_argument("halfspace table: empty sample");
  if (na == 0) throw std::invalid_argument("halfspace table: empty anchor set");
  if (n > std::numeric_limits<std::uint32_t>::max() - 1) throw std::invalid_argument("halfspace table: sample too large");

  HalfspaceTable t;
  t.anchors_ = na;
  t.sample_size_ = n;
  t.counts_.assign(na * na, kExcluded);
  const auto total = static_cast<std::uint32_t>(n);

  // One pass per unordered pair yields both orders:
  //   count(a,b) = #{d_a <= d_b},  count(b,a) = n - #{d_a < d_b}.
  parallel_for(static_cast<std::ptrdiff_t>(na), [&](std::ptrdiff_t ia) {
    const auto a = static_cast<std::size_t>(ia);
    const double* ra = anchor_by_sample.row(a).data();
    for (std::size_t b = a + 1; b < na; ++b) {
      const double* rb = anchor_by_sample.row(b).data();
      std::uint32_t le = 0, lt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        le += ra[i] <= rb[i];
        lt += ra[i] < rb[i];
      }
      t.counts_[a * na + b] = le;
      t.counts_[b * na + a] = total - lt;
    }
  }, na * na * n > (1u << 16));
  t.row_min_.resize(na);
  for (std::size_t a = 0; a < na; ++a)
    t.row_min_[a] = *std::min_element(t.counts_.begin() + static_cast<std::ptrdiff_t>(a * na),
                                      t.counts_.begin() + static_cast<std::ptrdiff_t>((a + 1) * na));
  return t;
}

namespace {

// Dense ranks of the query distances; equal distances share a rank.
void distance_ranks(std::span<const double> q, std::vector<std::uint32_t>& rank, std::vector<std::uint32_t>& order) {
  const std::size_t m = q.size();
  order.resize(m);
  rank.resize(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return q[a] < q[b]; });
  std::uint32_t r = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i > 0 && q[order[i]] != q[order[i - 1]]) ++r;
    rank[order[i]] = r;
  }
}

}  // namespace

std::pair<std::uint32_t, std::size_t> HalfspaceTable::scan(std::span<const double> query_to_anchor,
                                                           std::uint32_t floor) const {
  if (query_to_anchor.size() != anchors_) throw DimensionMismatch("min_admissible: wrong number of query distances");
  thread_local std::vector<std::uint32_t> rank, order;
  distance_ranks(query_to_anchor, rank, order);
  const std::uint32_t* rk = rank.data();
  std::uint32_t best = kExcluded;
  std::size_t best_row = 0;
  for (std::size_t a = 0; a < anchors_; ++a) {
    if (row_min_[a] >= best) continue;
    const std::uint32_t ra = rk[a];
    const std::uint32_t* row = counts_.data() + a * anchors_;
    std::uint32_t m = kExcluded;
    for (std::size_t b = 0; b < anchors_; ++b) {
      const std::uint32_t c = row[b] | (rk[b] < ra ? kExcluded : 0u);
      m = c < m ? c : m;
    }
    if (m < best) {
      best = m;
      best_row = a;
      if (best < floor) break;
    }
  }
  return {best, best_row};
}

std::pair<DepthValue, std::optional<AnchorPair>> HalfspaceTable::min_admissible(
    std::span<const double> query_to_anchor) const {
  const auto [best, best_row] = scan(query_to_anchor, 0);
  const auto n = static_cast<std::uint32_t>(sample_size_);
  if (best == kExcluded) return {DepthValue{n, n}, std::nullopt};
  const double* q = query_to_anchor.data();
  const double qa = q[best_row];
  const std::uint32_t* row = counts_.data() + best_row * anchors_;
  for (std::size_t b = 0; b < anchors_; ++b) {
    if (b != best_row && q[b] >= qa && row[b] == best) return {DepthValue{best, n}, AnchorPair{best_row, b}};
  }
  return {DepthValue{best, n}, std::nullopt};  // unreachable
}

std::optional<std::uint32_t> HalfspaceTable::min_admissible_at_least(std::span<const double> query_to_anchor,
                                                                     std::uint32_t floor) const {
  const auto best = scan(query_to_anchor, floor).first;
  if (best < floor) return std::nullopt;
  return best == kExcluded ? static_cast<std::uint32_t>(sample_size_) : best;
}

bool halfspace_membership(const Space& space, const Point& y, const Point& x1, const Point& x2) {
  return space.distance(y, x1) <= space.distance(y, x2);
}

HalfspaceTable halfspace_prob_table(const Space& space, std::span<const Point> sample, const AnchorSet& anchors) {
  if (sample.empty()) throw std::invalid_argument("halfspace table: empty sample");
  return HalfspaceTable::build(pairwise_distances(space, anchors.points, sample));
}

DepthReport approx_depth(const Space& space, std::span<const Point> sample, const AnchorSet& anchors,
                         std::span<const Point> queries) {
  if (queries.empty()) return {};
  const DepthEvaluator ev(space, std::vector<Point>(sample.begin(), sample.end()), anchors);
  return ev.evaluate(queries);
}

double median_pairwise_distance(const Space& space, std::span<const Point> sample) {
  if (sample.size() < 2) return 0.0;
  const DistanceMatrix d = pairwise_distances(space, sample, sample);
  std::vector<double> upper;
  upper.reserve(sample.size() * (sample.size() - 1) / 2);
  for (std::size_t i = 0; i < sample.size(); ++i)
    for (std::size_t j = i + 1; j < sample.size(); ++j) upper.push_back(d(i, j));
  const std::size_t mid = upper.size() / 2;
  std::nth_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(mid), upper.end());
  const double hi = upper[mid];
  if (upper.size() % 2 == 1) return hi;
  const double lo = *std::max_element(upper.begin(), upper.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

AnchorSet jiggle_anchors(const Space& space, std::span<const Point> sample, const JiggleOptions& options) {
  AnchorSet anchors = AnchorSet::from_sample(sample);
  const std::size_t k = options.per_point;
  if (k == 0) return anchors;
  if (sample.size() < 2 && options.radius_frac > 0.0) {
    throw std::invalid_argument("jiggle_anchors: need at least two sample points to set the jiggle scale");
  }
  const double sd = options.radius_frac * median_pairwise_distance(space, sample);
  const Scatter scatter = Scatter::isotropic(sd * sd);
  const std::size_t n = sample.size();
  anchors.points.resize(n * (k + 1));
  anchors.origin.resize(n * (k + 1));
  parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    Rng rng = make_rng(options.seed, i);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t slot = n + i * k + j;
      anchors.points[slot] = space.exp_map(sample[i], space.random_tangent(sample[i], scatter, rng));
      anchors.origin[slot] = {i, true};
    }
  }, n * k > 256);
  return anchors;
}

// ---------------------------------------------------------------- evaluator

DepthEvaluator::DepthEvaluator(Space space, std::vector<Point> sample, AnchorSet anchors)
    : space_(std::move(space)), sample_(std::move(sample)), anchors_(std::move(anchors)) {
  if (sample_.empty()) throw std::invalid_argument("depth: empty sample");
  if (anchors_.points.empty()) throw std::invalid_argument("depth: empty anchor set");
  table_ = HalfspaceTable::build(pairwise_distances(space_, anchors_.points, sample_));
}

DepthEntry DepthEvaluator::evaluate(const Point& y, std::size_t query_index) const {
  const DistanceMatrix q = pairwise_distances(space_, std::span<const Point>(&y, 1), anchors_.points);
  auto [depth, pair] = table_.min_admissible(q.row(0));
  return {query_index, depth, pair};
}

DepthReport DepthEvaluator::evaluate(std::span<const Point> queries) const {
  const DistanceMatrix q = pairwise_distances(space_, queries, anchors_.points);
  DepthReport report(queries.size());
  parallel_for(static_cast<std::ptrdiff_t>(queries.size()), [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto [depth, pair] = table_.min_admissible(q.row(i));
    report[i] = {i, depth, pair};
  }, queries.size() * anchors_.size() * anchors_.size() > (1u << 16));
  return report;
}

std::optional<DepthValue> DepthEvaluator::depth_at_least(const Point& y, DepthValue floor) const {
  const auto n = static_cast<std::uint32_t>(sample_.size());
  if (floor.total != n) throw std::invalid_argument("depth_at_least: floor has a different denominator");
  const DistanceMatrix q = pairwise_distances(space_, std::span<const Point>(&y, 1), anchors_.points);
  const auto c = table_.min_admissible_at_least(q.row(0), floor.count);
  if (!c) return std::nullopt;
  return DepthValue{*c, n};
}

double DepthEvaluator::distance_sum(const Point& y) const {
  const DistanceMatrix d = pairwise_distances(space_, std::span<const Point>(&y, 1), sample_);
  double s = 0.0;
  for (double v : d.row(0)) s += v;
  return s;
}

double DepthEvaluator::median_pairwise_distance() const {
  if (!median_distance_) median_distance_ = mhd::median_pairwise_distance(space_, sample_);
  return *median_distance_;
}

DeepestPoint in_sample_deepest(const DepthEvaluator& evaluator) {
  const auto& sample = evaluator.sample();
  const std::size_t n = sample.size();
  std::vector<double> sums(n);
  parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t i) {
    sums[static_cast<std::size_t>(i)] = evaluator.distance_sum(sample[static_cast<std::size_t>(i)]);
  }, n > 64);

  // Central points first, so the running best prunes most of the scan.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sums[a] != sums[b] ? sums[a] < sums[b] : a < b;
  });

  // Points known to be shallower than the running best are dropped; every
  // point tying the final maximum is evaluated exactly.
  const auto total = static_cast<std::uint32_t>(n);
  std::atomic<std::uint32_t> floor{0};
  std::vector<std::optional<DepthValue>> depth(n);
  parallel_for(static_cast<std::ptrdiff_t>(n), [&](std::ptrdiff_t k) {
    const std::size_t i = order[static_cast<std::size_t>(k)];
    depth[i] = evaluator.depth_at_least(sample[i], DepthValue{floor.load(), total});
    if (!depth[i]) return;
    std::uint32_t cur = floor.load();
    while (depth[i]->count > cur && !floor.compare_exchange_weak(cur, depth[i]->count)) {
    }
  }, n * evaluator.anchors().size() > (1u << 12));

  DeepestPoint out;
  bool found = false;
  for (const std::size_t i : order) {
    if (!depth[i] || (found && !(*depth[i] > out.depth))) continue;
    out.index = i;
    out.depth = *depth[i];
    out.distance_sum = sums[i];
    found = true;
  }
  out.point = sample[out.index];
  return out;
}

DeepestPoint in_sample_deepest(const Space& space, std::span<const Point> sample, const AnchorSet& anchors) {
  return in_sample_deepest(DepthEvaluator(space, std::vector<Point>(sample.begin(), sample.end()), anchors));
}

RefinedPoint refine_deepest(const DepthEvaluator& evaluator, const DeepestPoint& start, const RefineOptions& options) {
  RefinedPoint cur{start.point, start.depth, start.distance_sum, 0};
  if (options.budget == 0) return cur;
  const double r0 =
      options.initial_radius > 0.0 ? options.initial_radius : 0.1 * evaluator.median_pairwise_distance();
  if (!(r0 > 0.0)) return cur;

  const Space& space = evaluator.space();
  Rng rng = make_rng(options.seed, 0x5EA5C4);
  const double budget = static_cast<double>(options.budget);
  for (std::size_t t = 0; t < options.budget; ++t) {
    const double radius = r0 * std::pow(options.final_ratio, static_cast<double>(t) / budget);
    const Tangent v = space.random_tangent(cur.point, Scatter::isotropic(radius * radius), rng);
    Point candidate = space.exp_map(cur.point, v);
    const auto found = evaluator.depth_at_least(candidate, cur.depth);
    if (!found) continue;
    const DepthValue depth = *found;
    const double s = evaluator.distance_sum(candidate);
    if (depth > cur.depth || s < cur.distance_sum) {
      cur.point = std::move(candidate);
      cur.depth = depth;
      cur.distance_sum = s;
      ++cur.accepted;
    }
  }
  return cur;
}

}  // namespace mhd
