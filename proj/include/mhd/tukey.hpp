#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "mhd/depth.hpp"

namespace mhd::tukey {

/// Exact halfline depth min(#{X_i <= x}, #{X_i >= x}) / n.
DepthValue depth_1d(std::span<const double> sample, double x);

/// Exact closed-halfplane Tukey depth in the plane. Enumerates the open arcs
/// of normal directions between consecutive critical angles (normals
/// orthogonal to some X_i - x); the count is constant on each arc and never
/// smaller at an arc endpoint, so the arc midpoints attain the minimum.
DepthValue depth_2d(std::span<const Eigen::Vector2d> sample, const Eigen::Vector2d& x);

}  // namespace mhd::tukey
