#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhd/estimators.hpp"
#include "mhd/space.hpp"

namespace mhd {

enum class Estimator { mhd, fm, gdd };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

/// Pushforward of a tangent Gaussian at `center` through the exponential map.
struct PopulationSpec {
  Space space;
  Point center;
  Scatter scatter;
  std::string label;
};

std::vector<Point> sample_population(const PopulationSpec& spec, std::size_t n, Rng& rng);
std::vector<Point> sample_population(const PopulationSpec& spec, std::size_t n, std::uint64_t seed);

/// Robustness simulation design. Case 1 is uncontaminated; cases 2-4 mix in
/// a contaminating population that differs in location (2), scale (3) or
/// both (4).
struct SimulationConfig {
  int case_id = 1;
  Space space = Space::spd(2);
  std::size_t n = 100;
  std::size_t reps = 128;
  double contamination = 0.1;
  /// Distance of the outlier center from the inlier center; defaults to 1,
  /// or pi/2 on spheres.
  std::optional<double> location_offset;
  /// Covariance multiplier of the outlier population in cases 3 and 4.
  double scale_factor = 4.0;
  /// Isotropic tangent variance of the inlier population.
  double variance = 0.3;
  std::vector<Estimator> estimators{Estimator::mhd, Estimator::fm, Estimator::gdd};
  std::uint64_t seed = 1;
  MhdMedianOptions mhd{};
  IterationOptions iteration{};
  std::size_t bootstrap = 500;

  double offset() const;
  PopulationSpec inlier() const;
  PopulationSpec outlier() const;
  void validate() const;
};

struct ContaminatedSample {
  std::vector<Point> points;
  std::vector<bool> inlier;
};

ContaminatedSample sample_contaminated(const SimulationConfig& config, std::uint64_t rep_seed);

struct EstimatorSummary {
  Estimator estimator = Estimator::mhd;
  double median_error = 0.0;
  double se = 0.0;                ///< bootstrap standard error of the median
  std::vector<double> errors;     ///< per replicate; NaN for a failed replicate
  std::size_t failures = 0;
};

struct SimulationResult {
  SimulationConfig config;
  std::vector<EstimatorSummary> summaries;

  const EstimatorSummary& summary(Estimator e) const;
};

/// Replicate r uses seed derive_seed(config.seed, r); the result does not
/// depend on the number of threads.
SimulationResult run_simulation(const SimulationConfig& config);

/// Median of the finite values; NaN when there are none.
double finite_median(std::span<const double> values);

struct BreakdownRow {
  std::size_t contamination = 0;
  double distance = 0.0;
  double mhd_displacement = 0.0;
  double fm_displacement = 0.0;
};

/// For every contamination count l and distance, adds l copies of the point
/// at that distance from the clean MHD median along a fixed chart direction,
/// and records how far each estimator moves.
std::vector<BreakdownRow> breakdown_experiment(const Space& space, std::span<const Point> base,
                                               std::span<const std::size_t> counts,
                                               std::span<const double> distances,
                                               const MhdMedianOptions& mhd = {},
                                               const IterationOptions& iteration = {});

}  // namespace mhd
