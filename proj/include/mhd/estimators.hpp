#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mhd/depth.hpp"
#include "mhd/space.hpp"

namespace mhd {

struct EstimatorResult {
  Point point;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after each accepted iterate, starting with the initial point.
  std::vector<double> trace;
};

struct IterationOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

/// argmin_x mean_i d^2(x, X_i) by Riemannian gradient descent with step halving.
EstimatorResult frechet_mean(const Space& space, std::span<const Point> sample, const IterationOptions& options = {});

/// argmin_x mean_i d(x, X_i) by a Weiszfeld-type iteration on the manifold.
EstimatorResult frechet_median(const Space& space, std::span<const Point> sample,
                               const IterationOptions& options = {});

/// exp(-mean_i d(y, X_i)).
double geodesic_distance_depth(const Space& space, std::span<const Point> sample, const Point& y);

struct MhdMedianOptions {
  std::size_t jiggle = 10;
  double radius_frac = 0.1;
  std::size_t budget = 200;
  std::uint64_t seed = 0;
};

struct MhdMedianResult {
  EstimatorResult estimate;  ///< objective holds the final approximate depth
  DepthValue depth;
  DeepestPoint in_sample;
};

/// Jiggled anchors, in-sample deepest point, then local refinement.
MhdMedianResult mhd_median(const Space& space, std::span<const Point> sample, const MhdMedianOptions& options = {});

/// Lower bound D/(1+D) on the finite-sample breakdown point of a depth median.
double breakdown_lower_bound(const DepthValue& depth_at_median);

}  // namespace mhd
