#include "mhd/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mhd/parallel.hpp"

namespace mhd {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB0075;
constexpr std::uint64_t kEstimatorStream = 0xE5;

Tangent unit_direction(const Space& space, const Point& at) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(space.intrinsic_dim());
  e[0] = 1.0;
  return space.chart_to_tangent(at, e);
}

double estimate_error(const SimulationConfig& config, Estimator e, std::span<const Point> sample,
                      const Point& truth, std::uint64_t rep_seed) {
  Point est;
  switch (e) {
    case Estimator::mhd: {
      MhdMedianOptions o = config.mhd;
      o.seed = derive_seed(rep_seed, kEstimatorStream);
      est = mhd_median(config.space, sample, o).estimate.point;
      break;
    }
    case Estimator::fm: est = frechet_mean(config.space, sample, config.iteration).point; break;
    case Estimator::gdd: est = frechet_median(config.space, sample, config.iteration).point; break;
  }
  return config.space.distance(est, truth);
}

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::mhd: return "MHD";
    case Estimator::fm: return "FM";
    case Estimator::gdd: return "GDD";
  }
  return {};
}

Estimator parse_estimator(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "mhd") return Estimator::mhd;
  if (s == "fm") return Estimator::fm;
  if (s == "gdd") return Estimator::gdd;
  throw std::invalid_argument("unknown estimator '" + name + "' (expected mhd, fm or gdd)");
}

std::vector<Point> sample_population(const PopulationSpec& spec, std::size_t n, Rng& rng) {
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(spec.space.exp_map(spec.center, spec.space.random_tangent(spec.center, spec.scatter, rng)));
  }
  return out;
}

std::vector<Point> sample_population(const PopulationSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_population(spec, n, rng);
}

// ---------------------------------------------------------------- config

double SimulationConfig::offset() const {
  if (location_offset) return *location_offset;
  return space.kind() == SpaceKind::sphere ? std::numbers::pi / 2 : 1.0;
}

PopulationSpec SimulationConfig::inlier() const {
  return {space, space.reference_point(), Scatter::isotropic(variance), "P1"};
}

PopulationSpec SimulationConfig::outlier() const {
  PopulationSpec p = inlier();
  p.label = "P2";
  if (case_id == 2 || case_id == 4) {
    p.center = space.exp_map(p.center, space.scale_tangent(unit_direction(space, p.center), offset()));
  }
  if (case_id == 3 || case_id == 4) p.scatter = p.scatter.scaled(scale_factor);
  return p;
}

void SimulationConfig::validate() const {
  if (case_id < 1 || case_id > 4) throw std::invalid_argument("simulation: case must be 1, 2, 3 or 4");
  if (reps < 1) throw std::invalid_argument("simulation: reps must be at least 1");
  if (n < 1) throw std::invalid_argument("simulation: n must be at least 1");
  if (!(contamination >= 0.0 && contamination < 1.0)) throw std::invalid_argument("simulation: contamination must lie in [0,1)");
  if (estimators.empty()) throw std::invalid_argument("simulation: no estimators selected");
  if (!(variance > 0.0)) throw std::invalid_argument("simulation: variance must be positive");
  if (!(scale_factor > 0.0)) throw std::invalid_argument("simulation: scale factor must be positive");
  if (space.kind() == SpaceKind::product) throw std::invalid_argument("simulation: product spaces are not supported");
  if (case_id == 2 || case_id == 4) {
    if (!(offset() > 0.0)) throw std::invalid_argument("simulation: location offset must be positive");
    if (space.kind() == SpaceKind::sphere && !(offset() < std::numbers::pi)) {
      throw std::invalid_argument("simulation: location offset on a sphere must be below pi");
    }
  }
}

ContaminatedSample sample_contaminated(const SimulationConfig& config, std::uint64_t rep_seed) {
  config.validate();
  const PopulationSpec p1 = config.inlier();
  const PopulationSpec p2 = config.outlier();
  const double fraction = config.case_id == 1 ? 0.0 : config.contamination;

  Rng rng(rep_seed);
  std::bernoulli_distribution pick_outlier(fraction);
  ContaminatedSample out;
  out.points.reserve(config.n);
  out.inlier.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const bool outlier = fraction > 0.0 && pick_outlier(rng);
    const PopulationSpec& p = outlier ? p2 : p1;
    out.points.push_back(p.space.exp_map(p.center, p.space.random_tangent(p.center, p.scatter, rng)));
    out.inlier.push_back(!outlier);
  }
  return out;
}

// ---------------------------------------------------------------- harness

const EstimatorSummary& SimulationResult::summary(Estimator e) const {
  for (const auto& s : summaries)
    if (s.estimator == e) return s;
  throw std::out_of_range("simulation result has no entry for " + to_string(e));
}

double finite_median(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values)
    if (std::isfinite(x)) v.push_back(x);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SimulationResult run_simulation(const SimulationConfig& config) {
  config.validate();
  const Point truth = config.inlier().center;
  const std::size_t ne = config.estimators.size();

  std::vector<std::vector<double>> errors(ne, std::vector<double>(config.reps, std::numeric_limits<double>::quiet_NaN()));
  parallel_for(static_cast<std::ptrdiff_t>(config.reps), [&](std::ptrdiff_t r) {
    const std::uint64_t rep_seed = derive_seed(config.seed, static_cast<std::uint64_t>(r));
    const ContaminatedSample data = sample_contaminated(config, rep_seed);
    for (std::size_t e = 0; e < ne; ++e) {
      try {
        errors[e][static_cast<std::size_t>(r)] = estimate_error(config, config.estimators[e], data.points, truth, rep_seed);
      } catch (const GeometryError&) {
        // recorded as NaN and counted below
      }
    }
  });

  SimulationResult result;
  result.config = config;
  for (std::size_t e = 0; e < ne; ++e) {
    EstimatorSummary s;
    s.estimator = config.estimators[e];
    s.errors = errors[e];
    std::vector<double> ok;
    for (double x : s.errors) {
      if (std::isfinite(x)) ok.push_back(x);
      else ++s.failures;
    }
    s.median_error = finite_median(ok);
    if (ok.size() > 1 && config.bootstrap > 1) {
      Rng rng = make_rng(config.seed, kBootstrapStream + e);
      std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
      std::vector<double> medians(config.bootstrap);
      std::vector<double> resample(ok.size());
      for (auto& m : medians) {
        for (auto& x : resample) x = ok[pick(rng)];
        m = finite_median(resample);
      }
      double mean = 0.0;
      for (double m : medians) mean += m;
      mean /= static_cast<double>(medians.size());
      double var = 0.0;
      for (double m : medians) var += (m - mean) * (m - mean);
      s.se = std::sqrt(var / static_cast<double>(medians.size() - 1));
    }
    result.summaries.push_back(std::move(s));
  }
  return result;
}

std::vector<BreakdownRow> breakdown_experiment(const Space& space, std::span<const Point> base,
                                               std::span<const std::size_t> counts,
                                               std::span<const double> distances, const MhdMedianOptions& mhd,
                                               const IterationOptions& iteration) {
  if (base.empty()) throw std::invalid_argument("breakdown: empty base sample");
  const Point clean_mhd = mhd_median(space, base, mhd).estimate.point;
  const Point clean_fm = frechet_mean(space, base, iteration).point;
  const Tangent u = unit_direction(space, clean_mhd);

  std::vector<BreakdownRow> rows;
  for (std::size_t l : counts) {
    for (double dist : distances) {
      BreakdownRow row{l, dist, 0.0, 0.0};
      if (l > 0) {
        const Point far = space.exp_map(clean_mhd, space.scale_tangent(u, dist));
        std::vector<Point> contaminated(base.begin(), base.end());
        contaminated.insert(contaminated.end(), l, far);
        row.mhd_displacement = space.distance(clean_mhd, mhd_median(space, contaminated, mhd).estimate.point);
        row.fm_displacement = space.distance(clean_fm, frechet_mean(space, contaminated, iteration).point);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace mhd
