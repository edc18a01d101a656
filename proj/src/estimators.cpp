#include "mhd/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mhd/parallel.hpp"

namespace mhd {

namespace {

constexpr double kCoincidenceGuard = 1e-9;
constexpr int kMaxHalvings = 60;

// Neumaier-compensated sum so the objective does not depend on summation noise.
double compensated_sum(std::span<const double> values) {
  double sum = 0.0, c = 0.0;
  for (double v : values) {
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + c;
}

std::vector<double> distances_to(const Space& space, std::span<const Point> sample, const Point& x) {
  const DistanceMatrix d = pairwise_distances(space, std::span<const Point>(&x, 1), sample);
  return {d.row(0).begin(), d.row(0).end()};
}

double mean_power(const Space& space, std::span<const Point> sample, const Point& x, int power) {
  std::vector<double> d = distances_to(space, sample, x);
  if (power == 2)
    for (double& v : d) v *= v;
  return compensated_sum(d) / static_cast<double>(sample.size());
}

// Sample points whose distance-power sum is minimal (relative tie tolerance
// 1e-12), in index order. Rows are formed one at a time to keep memory linear.
std::vector<std::size_t> best_sample_points(const Space& space, std::span<const Point> sample, int power) {
  std::vector<double> sums(sample.size());
  parallel_for(static_cast<std::ptrdiff_t>(sample.size()), [&](std::ptrdiff_t i) {
    sums[static_cast<std::size_t>(i)] = mean_power(space, sample, sample[static_cast<std::size_t>(i)], power);
  });
  const double best = *std::min_element(sums.begin(), sums.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sums.size(); ++i)
    if (sums[i] <= best + 1e-12 * std::abs(best)) out.push_back(i);
  return out;
}

// Shared descent loop. `direction` returns the tangent step at x (before
// step-size scaling); the objective is mean d^power.
template <typename Direction>
EstimatorResult descend(const Space& space, std::span<const Point> sample, const IterationOptions& options,
                        int power, const Point& start, Direction direction) {
  EstimatorResult r;
  r.point = start;
  r.objective = mean_power(space, sample, r.point, power);
  r.trace.push_back(r.objective);

  for (r.iterations = 0; r.iterations < options.max_iter;) {
    const Tangent g = direction(r.point);
    const double gnorm = space.tangent_norm(r.point, g);
    double step = 1.0;
    bool moved = false;
    for (int h = 0; h <= kMaxHalvings && step * gnorm >= options.tol; ++h, step *= 0.5) {
      Point candidate = space.exp_map(r.point, space.scale_tangent(g, step));
      const double f = mean_power(space, sample, candidate, power);
      if (f <= r.objective) {
        r.point = std::move(candidate);
        r.objective = f;
        moved = true;
        break;
      }
    }
    ++r.iterations;
    if (!moved) {
      r.converged = true;
      break;
    }
    r.trace.push_back(r.objective);
    if (step * gnorm < options.tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

std::vector<Tangent> logs_at(const Space& space, std::span<const Point> sample, const Point& x) {
  std::vector<Tangent> out(sample.size());
  try {
    for (std::size_t i = 0; i < sample.size(); ++i) out[i] = space.log_map(x, sample[i]);
  } catch (const GeometryError& e) {
    throw GeometryError(std::string(e.what()) + "; the sample spans antipodal points, try a different initial point");
  }
  return out;
}

}  // namespace

EstimatorResult frechet_mean(const Space& space, std::span<const Point> sample, const IterationOptions& options) {
  if (sample.empty()) throw std::invalid_argument("frechet mean: empty sample");
  const std::vector<double> ones(sample.size(), 1.0);
  const Point start = sample[best_sample_points(space, sample, 2).front()];
  return descend(space, sample, options, 2, start, [&](const Point& x) {
    const std::vector<Tangent> logs = logs_at(space, sample, x);
    return space.weighted_tangent_mean(x, logs, ones);
  });
}

EstimatorResult frechet_median(const Space& space, std::span<const Point> sample, const IterationOptions& options) {
  if (sample.empty()) throw std::invalid_argument("frechet median: empty sample");
  // Several sample points can share the minimal distance sum (any two-point
  // sample); starting from their Frechet mean picks the central minimizer.
  const std::vector<std::size_t> tied = best_sample_points(space, sample, 1);
  Point start = sample[tied.front()];
  if (tied.size() > 1) {
    std::vector<Point> subset;
    for (std::size_t i : tied) subset.push_back(sample[i]);
    try {
      const Point m = frechet_mean(space, subset, options).point;
      if (mean_power(space, sample, m, 1) <= mean_power(space, sample, start, 1)) start = m;
    } catch (const GeometryError&) {
      // keep the lowest-index minimizer
    }
  }
  return descend(space, sample, options, 1, start, [&](const Point& x) {
    const std::vector<Tangent> logs = logs_at(space, sample, x);
    const std::vector<double> d = distances_to(space, sample, x);
    std::vector<double> w(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) w[i] = 1.0 / std::max(d[i], kCoincidenceGuard);
    return space.weighted_tangent_mean(x, logs, w);
  });
}

double geodesic_distance_depth(const Space& space, std::span<const Point> sample, const Point& y) {
  if (sample.empty()) throw std::invalid_argument("geodesic distance depth: empty sample");
  return std::exp(-mean_power(space, sample, y, 1));
}

MhdMedianResult mhd_median(const Space& space, std::span<const Point> sample, const MhdMedianOptions& options) {
  if (sample.empty()) throw std::invalid_argument("mhd median: empty sample");
  const std::size_t jiggle = sample.size() < 2 ? 0 : options.jiggle;
  AnchorSet anchors = jiggle_anchors(space, sample, {jiggle, options.radius_frac, derive_seed(options.seed, 1)});
  const DepthEvaluator evaluator(space, std::vector<Point>(sample.begin(), sample.end()), std::move(anchors));
  MhdMedianResult out;
  out.in_sample = in_sample_deepest(evaluator);

  RefineOptions refine;
  refine.budget = sample.size() < 2 ? 0 : options.budget;
  refine.initial_radius = options.radius_frac * evaluator.median_pairwise_distance();
  refine.seed = derive_seed(options.seed, 2);
  const RefinedPoint refined = refine_deepest(evaluator, out.in_sample, refine);

  out.depth = refined.depth;
  out.estimate.point = refined.point;
  out.estimate.objective = refined.depth.value();
  out.estimate.iterations = static_cast<int>(refine.budget);
  out.estimate.converged = true;
  out.estimate.trace = {out.in_sample.depth.value(), refined.depth.value()};
  return out;
}

double breakdown_lower_bound(const DepthValue& depth_at_median) {
  const double d = depth_at_median.value();
  if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("breakdown bound: depth must lie in [0,1]");
  return d / (1.0 + d);
}

}  // namespace mhd
