#include "mhd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mhd/depth.hpp"
#include "mhd/parallel.hpp"

namespace mhd {

namespace {

constexpr std::size_t kMinPermutations = 99;

void check_permutations(std::size_t n_permutations) {
  if (n_permutations < kMinPermutations) {
    throw std::invalid_argument("permutation test: at least 99 permutations are required");
  }
}

// Depth ranks of all pooled observations w.r.t. the reference indices.
std::vector<double> pooled_ranks(const DistanceMatrix& pooled, std::span<const std::size_t> reference,
                                 std::span<const std::size_t> all) {
  const HalfspaceTable table = HalfspaceTable::build(pooled.gather(reference, reference));
  const DistanceMatrix queries = pooled.gather(all, reference);
  std::vector<double> depth(all.size());
  for (std::size_t j = 0; j < all.size(); ++j) depth[j] = table.min_admissible(queries.row(j)).first.count;
  return average_ranks(depth);
}

double sum_ranks(std::span<const double> ranks, std::span<const std::size_t> members) {
  double s = 0.0;
  for (std::size_t m : members) s += ranks[m];
  return s;
}

std::vector<Point> pool(std::span<const Point> a, std::span<const Point> b) {
  std::vector<Point> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Twice the absolute deviation of the rank sum from its null mean; exact
// because ranks are multiples of 1/2.
double wilcoxon_deviation(const DistanceMatrix& pooled, std::span<const std::size_t> order, std::size_t n1) {
  const std::size_t total = order.size();
  const std::vector<std::size_t> all = iota_indices(total);
  const std::vector<double> ranks = pooled_ranks(pooled, order.first(n1), all);
  const double w = sum_ranks(ranks, order.subspan(n1));
  return std::abs(2.0 * w - static_cast<double>((total - n1) * (total + 1)));
}

struct KwLayout {
  std::vector<std::size_t> sizes;
  std::size_t total = 0;
};

double kruskal_wallis(std::span<const double> ranks, std::span<const std::size_t> order, const KwLayout& layout) {
  const double n = static_cast<double>(layout.total);
  double between = 0.0;
  std::size_t off = 0;
  for (std::size_t size : layout.sizes) {
    const double s = sum_ranks(ranks, order.subspan(off, size));
    between += s * s / static_cast<double>(size);
    off += size;
  }
  const double h = 12.0 / (n * (n + 1.0)) * between - 3.0 * (n + 1.0);

  std::vector<double> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - ties / (n * n * n - n);
  return correction > 0.0 ? h / correction : 0.0;
}

// Sum over reference groups of the KW statistic; order lists pooled indices
// group by group.
double kw_statistic(const DistanceMatrix& pooled, std::span<const std::size_t> order, const KwLayout& layout,
                    std::vector<std::vector<double>>* ranks_out = nullptr) {
  const std::vector<std::size_t> all = iota_indices(layout.total);
  double total = 0.0;
  std::size_t off = 0;
  for (std::size_t size : layout.sizes) {
    const std::vector<double> ranks = pooled_ranks(pooled, order.subspan(off, size), all);
    total += kruskal_wallis(ranks, order, layout);
    if (ranks_out) ranks_out->push_back(ranks);
    off += size;
  }
  return total;
}

template <typename Statistic>
std::size_t count_extreme(std::size_t total, std::size_t n_permutations, std::uint64_t seed, double observed,
                          Statistic statistic) {
  // Replicate r draws its own stream, so the count is independent of scheduling.
  std::vector<char> extreme(n_permutations, 0);
  const double threshold = observed - 1e-12 * std::max(1.0, std::abs(observed));
  parallel_for(static_cast<std::ptrdiff_t>(n_permutations), [&](std::ptrdiff_t r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    std::vector<std::size_t> order = iota_indices(total);
    std::shuffle(order.begin(), order.end(), rng);
    extreme[static_cast<std::size_t>(r)] = statistic(order) >= threshold;
  });
  return static_cast<std::size_t>(std::count(extreme.begin(), extreme.end(), 1));
}

}  // namespace

std::size_t GroupedSample::total_size() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.points.size();
  return n;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx = iota_indices(values.size());
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && values[idx[j]] == values[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

std::vector<double> depth_ranks(const Space& space, std::span<const Point> reference,
                                std::span<const Point> evaluate_on) {
  if (reference.empty()) throw std::invalid_argument("depth ranks: empty reference sample");
  const DepthReport report = approx_depth(space, reference, AnchorSet::from_sample(reference), evaluate_on);
  std::vector<double> depth(report.size());
  for (std::size_t i = 0; i < report.size(); ++i) depth[i] = report[i].depth.count;
  return average_ranks(depth);
}

TestResult wilcoxon_depth_test(const Space& space, std::span<const Point> first, std::span<const Point> second,
                               std::size_t n_permutations, std::uint64_t seed) {
  if (first.size() < 2 || second.size() < 2) throw std::invalid_argument("wilcoxon: each group needs at least 2 points");
  check_permutations(n_permutations);

  const std::vector<Point> points = pool(first, second);
  const DistanceMatrix pooled = pairwise_distances(space, points, points);
  const std::size_t n1 = first.size(), total = points.size();
  const std::vector<std::size_t> identity = iota_indices(total);

  TestResult result;
  result.test = "wilcoxon";
  result.group_labels = {"group1", "group2"};
  result.n_permutations = n_permutations;
  result.seed = seed;
  result.depth_ranks.push_back(pooled_ranks(pooled, std::span(identity).first(n1), identity));
  result.statistic = sum_ranks(result.depth_ranks.front(), std::span(identity).subspan(n1));

  const double observed = wilcoxon_deviation(pooled, identity, n1);
  const std::size_t extreme = count_extreme(total, n_permutations, seed, observed, [&](const std::vector<std::size_t>& order) {
    return wilcoxon_deviation(pooled, order, n1);
  });
  result.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + n_permutations);
  return result;
}

TestResult kruskal_wallis_depth_test(const GroupedSample& sample, std::size_t n_permutations, std::uint64_t seed) {
  if (sample.groups.size() < 2) throw std::invalid_argument("kruskal-wallis: at least two groups are required");
  check_permutations(n_permutations);

  KwLayout layout;
  std::vector<Point> points;
  TestResult result;
  for (const auto& g : sample.groups) {
    if (g.points.size() < 2) throw std::invalid_argument("kruskal-wallis: group '" + g.label + "' has fewer than 2 points");
    layout.sizes.push_back(g.points.size());
    points.insert(points.end(), g.points.begin(), g.points.end());
    result.group_labels.push_back(g.label);
  }
  layout.total = points.size();
  const DistanceMatrix pooled = pairwise_distances(sample.space, points, points);
  const std::vector<std::size_t> identity = iota_indices(layout.total);

  result.test = "kw";
  result.n_permutations = n_permutations;
  result.seed = seed;
  result.statistic = kw_statistic(pooled, identity, layout, &result.depth_ranks);
  const std::size_t extreme =
      count_extreme(layout.total, n_permutations, seed, result.statistic,
                    [&](const std::vector<std::size_t>& order) { return kw_statistic(pooled, order, layout); });
  result.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + n_permutations);
  return result;
}

std::vector<PairwiseEntry> pairwise_wilcoxon(const GroupedSample& sample, std::size_t n_permutations,
                                             std::uint64_t seed) {
  std::vector<PairwiseEntry> out;
  const std::size_t g = sample.groups.size();
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      TestResult r = wilcoxon_depth_test(sample.space, sample.groups[i].points, sample.groups[j].points,
                                         n_permutations, derive_seed(seed, i * g + j));
      r.group_labels = {sample.groups[i].label, sample.groups[j].label};
      out.push_back({i, j, std::move(r)});
    }
  }
  return out;
}

}  // namespace mhd
