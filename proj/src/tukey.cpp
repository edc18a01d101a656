#include "mhd/tukey.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mhd::tukey {

DepthValue depth_1d(std::span<const double> sample, double x) {
  if (sample.empty()) throw std::invalid_argument("tukey: empty sample");
  std::uint32_t below = 0, above = 0;
  for (double v : sample) {
    below += v <= x;
    above += v >= x;
  }
  return {std::min(below, above), static_cast<std::uint32_t>(sample.size())};
}

DepthValue depth_2d(std::span<const Eigen::Vector2d> sample, const Eigen::Vector2d& x) {
  if (sample.empty()) throw std::invalid_argument("tukey: empty sample");
  const auto n = static_cast<std::uint32_t>(sample.size());

  std::uint32_t coincident = 0;
  std::vector<Eigen::Vector2d> dirs;
  std::vector<double> critical;
  dirs.reserve(sample.size());
  for (const auto& p : sample) {
    const Eigen::Vector2d d = p - x;
    if (d.x() == 0.0 && d.y() == 0.0) {
      ++coincident;
      continue;
    }
    dirs.push_back(d);
    const double theta = std::atan2(d.y(), d.x());
    for (double c : {theta + std::numbers::pi / 2, theta - std::numbers::pi / 2}) {
      critical.push_back(std::remainder(c, 2 * std::numbers::pi));
    }
  }
  if (dirs.empty()) return {n, n};

  std::sort(critical.begin(), critical.end());
  critical.erase(std::unique(critical.begin(), critical.end()), critical.end());

  std::uint32_t best = n;
  for (std::size_t j = 0; j < critical.size(); ++j) {
    const double lo = critical[j];
    const double hi = (j + 1 < critical.size()) ? critical[j + 1] : critical.front() + 2 * std::numbers::pi;
    const double mid = 0.5 * (lo + hi);
    const Eigen::Vector2d u(std::cos(mid), std::sin(mid));
    std::uint32_t count = coincident;
    for (const auto& d : dirs) count += d.dot(u) >= 0.0;
    best = std::min(best, count);
  }
  return {best, n};
}

}  // namespace mhd::tukey
