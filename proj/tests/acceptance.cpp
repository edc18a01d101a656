// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number, e.g. `acceptance 1 3 9`.

#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mhd/depth.hpp"
#include "mhd/estimators.hpp"
#include "mhd/inference.hpp"
#include "mhd/io.hpp"
#include "mhd/simgen.hpp"
#include "mhd/tukey.hpp"
#include "support.hpp"

using namespace mhd;
using namespace mhd::testing;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> distinct_reals(std::size_t n, Rng& rng) {
  std::normal_distribution<double> z;
  std::vector<double> v;
  while (v.size() < n) {
    const double x = z(rng);
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  }
  return v;
}

std::vector<Eigen::Vector2d> planar(const std::vector<Point>& x) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& p : x) out.emplace_back(p.values[0], p.values[1]);
  return out;
}

// ---------------------------------------------------------------- 1
Outcome exactness_1d() {
  const auto start = Clock::now();
  Rng rng(101);
  std::uniform_int_distribution<int> size(3, 50);
  const Space r = Space::euclidean(1);
  std::size_t mismatches = 0, checked = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto v = distinct_reals(static_cast<std::size_t>(size(rng)), rng);
    const auto x = reals(v);
    const DepthReport d = approx_depth(r, x, AnchorSet::from_sample(x), x);
    for (std::size_t i = 0; i < x.size(); ++i, ++checked)
      if (!(d[i].depth == tukey::depth_1d(v, v[i])) || d[i].depth.total != x.size()) ++mismatches;
  }
  const double secs = since(start);
  return {mismatches == 0 && secs < 30.0,
          fmt("10000 samples, %zu points, %zu mismatches, %.1f s (limit 30 s)", checked, mismatches, secs)};
}

// ---------------------------------------------------------------- 2
Outcome upper_bound_2d() {
  const auto start = Clock::now();
  Rng rng(202);
  const Space r2 = Space::euclidean(2);
  std::size_t violations = 0, checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto x = random_points(r2, 50, rng);
    auto q = random_points(r2, 50, rng);
    for (auto& p : q) p.values *= 1.5;  // some queries fall outside the hull
    q.insert(q.end(), x.begin(), x.end());
    const auto xs = planar(x);
    const DepthReport d = approx_depth(r2, x, AnchorSet::from_sample(x), q);
    for (std::size_t i = 0; i < q.size(); ++i, ++checked)
      if (d[i].depth < tukey::depth_2d(xs, Eigen::Vector2d(q[i].values[0], q[i].values[1]))) ++violations;
  }

  Rng fixed(203);
  const auto x = random_points(r2, 100, fixed);
  const auto q = random_points(r2, 200, fixed);
  const auto xs = planar(x);
  std::vector<double> exact;
  for (const auto& p : q) exact.push_back(tukey::depth_2d(xs, Eigen::Vector2d(p.values[0], p.values[1])).value());
  std::vector<double> gaps;
  for (std::size_t k : {0, 5, 10}) {
    const AnchorSet a = jiggle_anchors(r2, x, {k, 0.1, 204});
    const DepthReport d = approx_depth(r2, x, a, q);
    double gap = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      gap += d[i].depth.value() - exact[i];
      if (d[i].depth.value() < exact[i]) ++violations;
    }
    gaps.push_back(gap / static_cast<double>(q.size()));
  }
  const bool trend = gaps[1] <= gaps[0] && gaps[2] <= gaps[1];
  const double secs = since(start);
  return {violations == 0 && trend && secs < 300.0,
          fmt("%zu queries, %zu violations; mean gap k=0/5/10: %.4f/%.4f/%.4f; %.1f s (limit 300 s)", checked,
              violations, gaps[0], gaps[1], gaps[2], secs)};
}

// ---------------------------------------------------------------- 3
Outcome isometry_invariance() {
  Rng rng(303);
  std::size_t differing = 0, trials = 0;
  double worst_distance = 0;
  auto compare = [&](const Space& s, const std::vector<Point>& x, const std::vector<Point>& q,
                     const std::vector<Point>& tx, const std::vector<Point>& tq) {
    const DistanceMatrix a = pairwise_distances(s, q, x), b = pairwise_distances(s, tq, tx);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) worst_distance = std::max(worst_distance, std::abs(a(i, j) - b(i, j)));
    const DepthReport d1 = approx_depth(s, x, AnchorSet::from_sample(x), q);
    const DepthReport d2 = approx_depth(s, tx, AnchorSet::from_sample(tx), tq);
    bool same = true;
    for (std::size_t i = 0; i < q.size(); ++i) same = same && d1[i].depth.count == d2[i].depth.count;
    if (!same) ++differing;
    ++trials;
  };
  const Space r = Space::euclidean(3);
  for (int t = 0; t < 100; ++t) {
    auto x = random_points(r, 40, rng), q = random_points(r, 20, rng);
    q.insert(q.end(), x.begin(), x.end());
    const Eigen::MatrixXd o = random_orthogonal(3, rng);
    const Eigen::VectorXd shift = 3.0 * Eigen::VectorXd::Random(3);
    auto move = [&](std::vector<Point> v) {
      for (auto& p : v) p.values = o * p.values + shift;
      return v;
    };
    compare(r, x, q, move(x), move(q));
  }
  const Space sph = Space::sphere(2);
  for (int t = 0; t < 100; ++t) {
    auto x = random_points(sph, 40, rng), q = random_points(sph, 20, rng);
    q.insert(q.end(), x.begin(), x.end());
    const Eigen::MatrixXd o = random_orthogonal(3, rng);
    auto move = [&](std::vector<Point> v) {
      for (auto& p : v) p.values = o * p.values;
      return v;
    };
    compare(sph, x, q, move(x), move(q));
  }
  const Space p = Space::spd(3);
  for (int t = 0; t < 100; ++t) {
    auto x = random_points(p, 40, rng), q = random_points(p, 20, rng);
    q.insert(q.end(), x.begin(), x.end());
    const Eigen::MatrixXd g = random_invertible(3, rng);
    auto move = [&](const std::vector<Point>& v) {
      std::vector<Point> out;
      for (const auto& y : v) out.push_back(congruence(y, g));
      return out;
    };
    compare(p, x, q, move(x), move(q));
  }
  return {differing == 0 && worst_distance <= 1e-8,
          fmt("%zu pairs over euclidean:3, sphere:2, spd:3; %zu with differing counts; max distance change %.2e",
              trials, differing, worst_distance)};
}

// ---------------------------------------------------------------- 4
Outcome monotonicity_1d() {
  Rng rng(404);
  std::uniform_int_distribution<int> size(3, 50);
  std::normal_distribution<double> z;
  const Space r = Space::euclidean(1);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto v = distinct_reals(static_cast<std::size_t>(size(rng)), rng);
    const auto x = reals(v);
    const DeepestPoint deepest = in_sample_deepest(r, x, AnchorSet::from_sample(x));
    const Point target{4.0 * z(rng)};
    DepthValue prev = tukey::depth_1d(v, deepest.point.values[0]);
    for (int i = 1; i <= 100; ++i) {
      const Point y = r.geodesic_point(deepest.point, target, i / 100.0);
      const DepthValue d = tukey::depth_1d(v, y.values[0]);
      if (d > prev) ++violations;
      prev = d;
    }
  }
  return {violations == 0, fmt("1000 samples x 100 geodesic points, %zu increases", violations)};
}

// ---------------------------------------------------------------- 5
Outcome center_outward() {
  const Space s = Space::sphere(2);
  const PopulationSpec p{s, s.reference_point(), Scatter::isotropic(0.5), "P1"};
  const auto x = sample_population(p, 100, 505);
  const DepthReport d = approx_depth(s, x, AnchorSet::from_sample(x), x);
  std::vector<double> depth, dist;
  for (std::size_t i = 0; i < x.size(); ++i) {
    depth.push_back(d[i].depth.value());
    dist.push_back(s.distance(x[i], p.center));
  }
  const double rho = spearman(depth, dist);
  return {rho <= -0.8, fmt("Spearman(depth, distance to center) = %.3f (threshold -0.8)", rho)};
}

// ---------------------------------------------------------------- 6
Outcome robustness_ordering() {
  const auto start = Clock::now();
  auto run = [](const Space& space, int case_id, std::size_t n) {
    SimulationConfig c;
    c.space = space;
    c.case_id = case_id;
    c.n = n;
    c.reps = 128;
    c.estimators = {Estimator::mhd, Estimator::fm};
    c.seed = 606;
    c.bootstrap = 200;
    const SimulationResult r = run_simulation(c);
    return std::pair{r.summary(Estimator::mhd).median_error, r.summary(Estimator::fm).median_error};
  };
  std::ostringstream os;
  bool ok = true;
  const Space spd = Space::spd(2), sph = Space::sphere(2);

  const auto [m1, f1] = run(spd, 1, 100);
  ok = ok && f1 <= m1;
  os << fmt("spd:2 case1 n=100 MHD %.3f FM %.3f", m1, f1);
  for (const Space& s : {spd, sph}) {
    for (int c : {2, 4}) {
      for (std::size_t n : {100, 200}) {
        const auto [m, f] = run(s, c, n);
        ok = ok && m < f;
        os << fmt("; %s case%d n=%zu MHD %.3f FM %.3f", s.name().c_str(), c, n, m, f);
      }
    }
  }
  std::vector<double> trend;
  for (std::size_t n : {50, 100, 200}) trend.push_back(run(sph, 1, n).first);
  ok = ok && trend[1] < trend[0] && trend[2] < trend[1];
  os << fmt("; sphere:2 case1 MHD n=50/100/200 %.3f/%.3f/%.3f", trend[0], trend[1], trend[2]);
  const double secs = since(start);
  ok = ok && secs < 1800.0;
  os << fmt("; %.0f s (limit 1800 s)", secs);
  return {ok, os.str()};
}

// ---------------------------------------------------------------- 7
Outcome breakdown() {
  Rng rng(707);
  std::normal_distribution<double> z;
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) {
    const double a = std::abs(z(rng)) + 0.01;
    v.push_back(a);
    v.push_back(-a);
  }
  const auto x = reals(v);
  const double diameter = *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
  const Space r = Space::euclidean(1);
  const MhdMedianOptions mhd{10, 0.1, 200, 708};
  const MhdMedianResult clean = mhd_median(r, x, mhd);
  const double bound = breakdown_lower_bound(clean.in_sample.depth);

  std::vector<std::size_t> counts;
  for (std::size_t l = 1; static_cast<double>(l) / static_cast<double>(20 + l) < bound; ++l) counts.push_back(l);
  const std::vector<double> distances{10 * diameter, 1e3 * diameter, 1e6 * diameter};
  const auto rows = breakdown_experiment(r, x, counts, distances, mhd);
  double worst_mhd = 0;
  for (const auto& row : rows) worst_mhd = std::max(worst_mhd, row.mhd_displacement);

  const std::vector<std::size_t> one{1};
  const std::vector<double> far{1e4 * diameter};
  const double fm = breakdown_experiment(r, x, one, far, mhd).front().fm_displacement;

  const bool ok = !counts.empty() && worst_mhd <= diameter && fm > 10 * diameter;
  return {ok, fmt("bound %.3f, l = 1..%zu; max MHD displacement %.3f vs diameter %.3f; FM displacement at l=1 %.1f",
                  bound, counts.empty() ? std::size_t{0} : counts.back(), worst_mhd, diameter, fm)};
}

// ---------------------------------------------------------------- 8
Outcome test_level() {
  const Space s = Space::sphere(2);
  const PopulationSpec p{s, s.reference_point(), Scatter::isotropic(0.5), "P"};
  const int sims = 500;
  int wilcoxon_rejections = 0, kw_rejections = 0;
  for (int i = 0; i < sims; ++i) {
    const std::uint64_t seed = derive_seed(808, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    const auto g1 = sample_population(p, 30, rng);
    const auto g2 = sample_population(p, 30, rng);
    const auto g3 = sample_population(p, 30, rng);
    if (wilcoxon_depth_test(s, g1, g2, 199, derive_seed(seed, 1)).p_value <= 0.05) ++wilcoxon_rejections;
    const GroupedSample grouped{s, {{"a", g1}, {"b", g2}, {"c", g3}}};
    if (kruskal_wallis_depth_test(grouped, 199, derive_seed(seed, 2)).p_value <= 0.05) ++kw_rejections;
  }
  const double rw = wilcoxon_rejections / static_cast<double>(sims);
  const double rk = kw_rejections / static_cast<double>(sims);
  const bool ok = rw >= 0.03 && rw <= 0.07 && rk >= 0.03 && rk <= 0.07;
  return {ok, fmt("rejection rate at 0.05 over %d null draws: Wilcoxon %.3f, KW (3 groups) %.3f (band [0.03, 0.07])",
                  sims, rw, rk)};
}

// ---------------------------------------------------------------- 9
Outcome depth_performance() {
  TempDir dir("acceptance");
  const Space s = Space::spd(2);
  const PopulationSpec p{s, s.reference_point(), Scatter::isotropic(0.5), "P"};
  std::ostringstream os;
  io::write_points(s, sample_population(p, 500, 909), os);
  const std::string data = dir.file("spd.csv", os.str());
  const std::string out = dir / "depth.csv";
  const std::string cmd = std::string("\"") + MHD_CLI_PATH + "\" depth --space spd:2 --data \"" + data +
                          "\" --self --out \"" + out + "\"";
  const auto start = Clock::now();
  const int rc = std::system(cmd.c_str());
  const double secs = since(start);
  std::ifstream in(out);
  const DepthReport report = rc == 0 ? io::read_depth_csv(in) : DepthReport{};
  const bool ok = rc == 0 && report.size() == 500 && secs < 60.0;
  return {ok, fmt("mhd depth on 500 spd:2 points (self queries, sample anchors): exit %d, %zu rows, %.2f s (limit 60 s)", rc,
                  report.size(), secs)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "one-dimensional exactness", exactness_1d},
      {2, "planar upper bound and anchor-density trend", upper_bound_2d},
      {3, "isometry invariance", isometry_invariance},
      {4, "monotonicity along geodesics", monotonicity_1d},
      {5, "center-outward pattern on the sphere", center_outward},
      {6, "robustness ordering under contamination", robustness_ordering},
      {7, "breakdown bound", breakdown},
      {8, "permutation test level", test_level},
      {9, "depth command performance", depth_performance},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
