#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "mhd/depth.hpp"
#include "mhd/errors.hpp"
#include "mhd/estimators.hpp"
#include "mhd/inference.hpp"
#include "mhd/io.hpp"
#include "mhd/parallel.hpp"
#include "mhd/simgen.hpp"
#include "mhd/tukey.hpp"

namespace mhd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Flag combination that CLI11 cannot express on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct Context {
  std::ostream& out;
  std::ostream& err;
  Clock::time_point start = Clock::now();
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_manifest(const fs::path& path, io::RunManifest& manifest, Clock::time_point start) {
  manifest.wall_seconds = seconds_since(start);
  write_file(path, manifest.to_json().dump(2) + "\n");
}

/// Sends `content` to --out (plus a manifest beside it) or to stdout.
void emit(Context& ctx, const std::string& out_path, const std::string& content, io::RunManifest& manifest) {
  if (out_path.empty()) {
    ctx.out << content;
    return;
  }
  write_file(out_path, content);
  manifest.outputs[out_path] = io::sha256_hex(content);
  write_manifest(out_path + ".manifest.json", manifest, ctx.start);
}

void record_input(io::RunManifest& manifest, const std::string& path) {
  manifest.inputs[path] = io::sha256_file(path);
}

std::vector<Point> load(const Space& space, const std::string& path) {
  std::vector<Point> pts = io::read_points(space, fs::path(path));
  if (pts.empty()) throw ParseError("'" + path + "' contains no points", 0);
  return pts;
}

// ---------------------------------------------------------------- depth

struct DepthFlags {
  std::string space, data, query, anchors = "sample", out, format = "csv";
  bool self = false;
  double radius_frac = 0.1;
  std::uint64_t seed = 1;
};

AnchorSet build_anchors(const Space& space, const std::vector<Point>& sample, const std::string& spec,
                        double radius_frac, std::uint64_t seed) {
  if (spec == "sample") return AnchorSet::from_sample(sample);
  if (spec.starts_with("jiggle:")) {
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(spec.substr(7), &used);
      if (used != spec.size() - 7 || v < 0) throw std::invalid_argument("");
      k = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw UsageError("--anchors: expected 'sample' or 'jiggle:K' with K >= 0, got '" + spec + "'");
    }
    return jiggle_anchors(space, sample, {k, radius_frac, seed});
  }
  throw UsageError("--anchors: expected 'sample' or 'jiggle:K', got '" + spec + "'");
}

int cmd_depth(Context& ctx, const DepthFlags& f) {
  if (f.self == !f.query.empty()) throw UsageError("depth: give exactly one of --query FILE or --self");
  const Space space = io::parse_space(f.space);
  const std::vector<Point> sample = load(space, f.data);
  const std::vector<Point> queries = f.self ? sample : load(space, f.query);
  const AnchorSet anchors = build_anchors(space, sample, f.anchors, f.radius_frac, f.seed);
  const DepthReport report = approx_depth(space, sample, anchors, queries);

  io::RunManifest manifest;
  manifest.command = "depth";
  manifest.seed = f.seed;
  manifest.config = {{"space", space.name()}, {"data", f.data},     {"query", f.self ? json(nullptr) : json(f.query)},
                     {"self", f.self},        {"anchors", f.anchors}, {"radius_frac", f.radius_frac},
                     {"seed", f.seed},        {"format", f.format},   {"anchor_count", anchors.size()}};
  record_input(manifest, f.data);
  if (!f.self) record_input(manifest, f.query);

  std::ostringstream os;
  if (f.format == "json") os << io::depth_report_json(report).dump(2) << '\n';
  else io::write_depth_csv(report, os);
  emit(ctx, f.out, os.str(), manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- median

struct MedianFlags {
  std::string space, data, estimator = "mhd", out;
  std::size_t jiggle = 10, budget = 200;
  double radius_frac = 0.1, tol = 1e-8;
  int max_iter = 200;
  std::uint64_t seed = 1;
};

int cmd_median(Context& ctx, const MedianFlags& f) {
  const Space space = io::parse_space(f.space);
  const Estimator which = parse_estimator(f.estimator);
  const std::vector<Point> sample = load(space, f.data);
  const IterationOptions iter{f.tol, f.max_iter};

  json result;
  switch (which) {
    case Estimator::mhd: {
      const MhdMedianResult r = mhd_median(space, sample, {f.jiggle, f.radius_frac, f.budget, f.seed});
      result = io::estimator_json(space, r.estimate);
      result["depth_num"] = r.depth.count;
      result["depth_den"] = r.depth.total;
      result["depth"] = r.depth.value();
      result["breakdown_lower_bound"] = breakdown_lower_bound(r.depth);
      result["in_sample_index"] = r.in_sample.index;
      result["in_sample_point"] = io::encode_point(space, r.in_sample.point);
      break;
    }
    case Estimator::fm: result = io::estimator_json(space, frechet_mean(space, sample, iter)); break;
    case Estimator::gdd: {
      const EstimatorResult r = frechet_median(space, sample, iter);
      result = io::estimator_json(space, r);
      result["depth"] = geodesic_distance_depth(space, sample, r.point);
      break;
    }
  }
  result["estimator"] = f.estimator;
  result["space"] = space.name();
  result["n"] = sample.size();

  io::RunManifest manifest;
  manifest.command = "median";
  manifest.seed = f.seed;
  manifest.config = {{"space", space.name()}, {"data", f.data},     {"estimator", f.estimator},
                     {"jiggle", f.jiggle},    {"budget", f.budget}, {"radius_frac", f.radius_frac},
                     {"tol", f.tol},          {"max_iter", f.max_iter}, {"seed", f.seed}};
  record_input(manifest, f.data);
  emit(ctx, f.out, result.dump(2) + "\n", manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- test

struct TestFlags {
  std::string space, test = "kw", out;
  std::vector<std::string> groups;
  std::size_t permutations = 999;
  std::uint64_t seed = 1;
};

json pairwise_json(const std::vector<PairwiseEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    arr.push_back({{"row", e.row},
                   {"col", e.col},
                   {"labels", e.result.group_labels},
                   {"statistic", e.result.statistic},
                   {"p_value", e.result.p_value},
                   {"seed", e.result.seed}});
  }
  return arr;
}

int cmd_test(Context& ctx, const TestFlags& f) {
  if (f.groups.size() < 2) throw UsageError("--groups: at least two group files are required");
  if (f.test == "wilcoxon" && f.groups.size() != 2) throw UsageError("--test wilcoxon takes exactly two --groups files");
  const Space space = io::parse_space(f.space);

  GroupedSample sample{space, {}};
  std::set<std::string> seen;
  for (std::size_t i = 0; i < f.groups.size(); ++i) {
    std::string label = fs::path(f.groups[i]).stem().string();
    if (!seen.insert(label).second) label += "_" + std::to_string(i + 1);
    sample.groups.push_back({label, load(space, f.groups[i])});
  }

  TestResult r;
  if (f.test == "wilcoxon") {
    r = wilcoxon_depth_test(space, sample.groups[0].points, sample.groups[1].points, f.permutations, f.seed);
    r.group_labels = {sample.groups[0].label, sample.groups[1].label};
  } else {
    r = kruskal_wallis_depth_test(sample, f.permutations, f.seed);
  }
  json result = io::test_result_json(r);
  if (f.test == "kw" && sample.groups.size() > 2) {
    result["pairwise"] = pairwise_json(pairwise_wilcoxon(sample, f.permutations, f.seed));
  }

  io::RunManifest manifest;
  manifest.command = "test";
  manifest.seed = f.seed;
  manifest.config = {{"space", space.name()},
                     {"groups", f.groups},
                     {"test", f.test},
                     {"permutations", f.permutations},
                     {"seed", f.seed}};
  for (const auto& g : f.groups) record_input(manifest, g);
  emit(ctx, f.out, result.dump(2) + "\n", manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

const std::vector<std::string> kSimulationKeys{"case",   "space",       "n",      "reps", "contamination",
                                               "offset", "scale",       "variance", "estimators", "seed",
                                               "jiggle", "radius_frac", "budget", "tol",  "max_iter",
                                               "bootstrap"};

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !is.eof()) throw std::invalid_argument("simulate: '" + key + "' has invalid value '" + text + "'");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  if (!text.empty() && text.front() == '-') throw std::invalid_argument("simulate: '" + key + "' must be non-negative");
  return parse_number<std::size_t>(key, text);
}

SimulationConfig resolve_simulation(const std::map<std::string, std::string>& values) {
  SimulationConfig c;
  for (const auto& [key, v] : values) {
    if (key == "case") c.case_id = parse_number<int>(key, v);
    else if (key == "space") c.space = io::parse_space(v);
    else if (key == "n") c.n = parse_count(key, v);
    else if (key == "reps") c.reps = parse_count(key, v);
    else if (key == "contamination") c.contamination = parse_number<double>(key, v);
    else if (key == "offset") c.location_offset = parse_number<double>(key, v);
    else if (key == "scale") c.scale_factor = parse_number<double>(key, v);
    else if (key == "variance") c.variance = parse_number<double>(key, v);
    else if (key == "estimators") {
      c.estimators.clear();
      std::istringstream is(v);
      for (std::string e; std::getline(is, e, ',');) c.estimators.push_back(parse_estimator(e));
    } else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "jiggle") c.mhd.jiggle = parse_count(key, v);
    else if (key == "radius_frac") c.mhd.radius_frac = parse_number<double>(key, v);
    else if (key == "budget") c.mhd.budget = parse_count(key, v);
    else if (key == "tol") c.iteration.tol = parse_number<double>(key, v);
    else if (key == "max_iter") c.iteration.max_iter = parse_number<int>(key, v);
    else if (key == "bootstrap") c.bootstrap = parse_count(key, v);
    else throw std::invalid_argument("simulate: unknown configuration key '" + key + "'");
  }
  c.validate();
  return c;
}

json simulation_json(const SimulationConfig& c) {
  std::vector<std::string> est;
  for (Estimator e : c.estimators) est.push_back(to_string(e));
  return {{"case", c.case_id},
          {"space", c.space.name()},
          {"n", c.n},
          {"reps", c.reps},
          {"contamination", c.contamination},
          {"offset", c.offset()},
          {"scale", c.scale_factor},
          {"variance", c.variance},
          {"estimators", est},
          {"seed", c.seed},
          {"jiggle", c.mhd.jiggle},
          {"radius_frac", c.mhd.radius_frac},
          {"budget", c.mhd.budget},
          {"tol", c.iteration.tol},
          {"max_iter", c.iteration.max_iter},
          {"bootstrap", c.bootstrap}};
}

struct SimulateFlags {
  std::string config, out_dir;
  std::map<std::string, std::string> values;  // flags given on the command line
  std::map<std::string, CLI::Option*> options;
};

int cmd_simulate(Context& ctx, const SimulateFlags& f) {
  std::map<std::string, std::string> values;
  io::RunManifest manifest;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw ParseError("cannot open '" + f.config + "'", 0);
    for (const auto& [key, v] : io::read_key_values(in)) {
      std::string k = key;
      for (auto& c : k)
        if (c == '-') c = '_';
      values[k] = v;
    }
    record_input(manifest, f.config);
  }
  for (const auto& [key, opt] : f.options)
    if (opt->count() > 0) values[key] = f.values.at(key);

  const SimulationConfig config = resolve_simulation(values);
  const SimulationResult result = run_simulation(config);

  std::ostringstream long_csv, summary_csv;
  io::write_simulation_long(result, long_csv);
  io::write_simulation_summary(result, summary_csv);
  const fs::path dir(f.out_dir);
  const fs::path long_path = dir / "simulation_long.csv";
  const fs::path summary_path = dir / "simulation_summary.csv";
  write_file(long_path, long_csv.str());
  write_file(summary_path, summary_csv.str());

  manifest.command = "simulate";
  manifest.seed = config.seed;
  manifest.config = simulation_json(config);
  manifest.outputs[long_path.string()] = io::sha256_hex(long_csv.str());
  manifest.outputs[summary_path.string()] = io::sha256_hex(summary_csv.str());
  write_manifest(dir / "manifest.json", manifest, ctx.start);

  for (const auto& s : result.summaries) {
    if (s.failures > 0) {
      ctx.err << "warning: " << to_string(s.estimator) << " failed in " << s.failures << " of " << config.reps
              << " replicates\n";
    }
  }
  ctx.out << summary_csv.str();
  return kExitOk;
}

// ---------------------------------------------------------------- plotdata

struct PlotFlags {
  std::string space, data, depths, out;
};

std::vector<std::string> coordinate_columns(const Space& space) {
  std::vector<std::string> cols;
  switch (space.kind()) {
    case SpaceKind::euclidean:
    case SpaceKind::sphere:
      for (int i = 1; i <= space.point_size(); ++i) cols.push_back("x" + std::to_string(i));
      break;
    case SpaceKind::spd:
      for (int r = 1; r <= space.param(); ++r)
        for (int c = 1; c <= space.param(); ++c) cols.push_back("a" + std::to_string(r) + std::to_string(c));
      break;
    case SpaceKind::spider3: cols = {"branch", "radius"}; break;
    case SpaceKind::product: {
      int i = 0;
      for (const auto& comp : space.components()) {
        ++i;
        for (const auto& c : coordinate_columns(comp)) cols.push_back("c" + std::to_string(i) + "_" + c);
      }
      break;
    }
  }
  return cols;
}

int cmd_plotdata(Context& ctx, const PlotFlags& f) {
  const Space space = io::parse_space(f.space);
  const std::vector<Point> points = load(space, f.data);
  std::ifstream in(f.depths);
  if (!in) throw ParseError("cannot open '" + f.depths + "'", 0);
  const DepthReport report = io::read_depth_csv(in);
  if (report.empty()) throw ParseError("--depths: depth file has no rows", 0);
  if (report.size() != points.size()) {
    throw ParseError("--depths: " + std::to_string(report.size()) + " depth rows but " +
                         std::to_string(points.size()) + " data rows",
                     0);
  }
  std::vector<const DepthEntry*> by_index(points.size(), nullptr);
  for (const auto& e : report) {
    if (e.query >= points.size() || by_index[e.query]) {
      throw ParseError("--depths: query_index " + std::to_string(e.query) + " is out of range or repeated", 0);
    }
    by_index[e.query] = &e;
  }

  std::ostringstream os;
  os << "index";
  for (const auto& c : coordinate_columns(space)) os << ',' << c;
  os << ",depth_num,depth_den,depth\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::string enc = io::encode_point(space, points[i]);
    for (auto& ch : enc)
      if (ch == '|') ch = ',';
    const DepthValue d = by_index[i]->depth;
    os << i << ',' << enc << ',' << d.count << ',' << d.total << ',' << io::format_double(d.value()) << '\n';
  }

  io::RunManifest manifest;
  manifest.command = "plotdata";
  manifest.config = {{"space", space.name()}, {"data", f.data}, {"depths", f.depths}};
  record_input(manifest, f.data);
  record_input(manifest, f.depths);
  emit(ctx, f.out, os.str(), manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- oracle

struct OracleFlags {
  std::string space, data, query, out;
  bool self = false;
};

int cmd_oracle(Context& ctx, const OracleFlags& f) {
  if (f.self == !f.query.empty()) throw UsageError("oracle: give exactly one of --query FILE or --self");
  const Space space = io::parse_space(f.space);
  if (space.kind() != SpaceKind::euclidean || space.param() > 2) {
    throw UsageError("oracle: exact depth is available for euclidean:1 and euclidean:2 only");
  }
  const std::vector<Point> sample = load(space, f.data);
  const std::vector<Point> queries = f.self ? sample : load(space, f.query);

  std::ostringstream os;
  os << "query_index,depth_num,depth_den\n";
  if (space.param() == 1) {
    std::vector<double> xs;
    for (const auto& p : sample) xs.push_back(p.values[0]);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const DepthValue d = tukey::depth_1d(xs, queries[i].values[0]);
      os << i << ',' << d.count << ',' << d.total << '\n';
    }
  } else {
    std::vector<Eigen::Vector2d> xs;
    for (const auto& p : sample) xs.emplace_back(p.values[0], p.values[1]);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const DepthValue d = tukey::depth_2d(xs, Eigen::Vector2d(queries[i].values[0], queries[i].values[1]));
      os << i << ',' << d.count << ',' << d.total << '\n';
    }
  }
  io::RunManifest manifest;
  manifest.command = "oracle";
  manifest.config = {{"space", space.name()}, {"data", f.data}, {"self", f.self}};
  record_input(manifest, f.data);
  emit(ctx, f.out, os.str(), manifest);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metric halfspace depth for data in metric spaces", "mhd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::library_version());
  int threads = 0;
  app.add_option("--threads", threads, "Worker thread cap (falls back to MHD_THREADS)")->check(CLI::NonNegativeNumber);

  const std::string space_help = "Space: euclidean:M, sphere:M, spd:K, spider3, product:A+B";

  DepthFlags depth;
  auto* d = app.add_subcommand("depth", "Approximate depth of query points with respect to a sample");
  d->add_option("--space", depth.space, space_help)->required();
  d->add_option("--data", depth.data, "Sample CSV")->required()->check(CLI::ExistingFile);
  auto* dq = d->add_option("--query", depth.query, "Query CSV")->check(CLI::ExistingFile);
  d->add_flag("--self", depth.self, "Evaluate at the sample points")->excludes(dq);
  d->add_option("--anchors", depth.anchors, "sample or jiggle:K")->capture_default_str();
  d->add_option("--radius-frac", depth.radius_frac, "Jiggle scale relative to the median distance")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  d->add_option("--seed", depth.seed)->capture_default_str();
  d->add_option("--out", depth.out, "Output file (default stdout)");
  d->add_option("--format", depth.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  MedianFlags median;
  auto* m = app.add_subcommand("median", "Location estimate of a sample");
  m->add_option("--space", median.space, space_help)->required();
  m->add_option("--data", median.data, "Sample CSV")->required()->check(CLI::ExistingFile);
  m->add_option("--estimator", median.estimator)->check(CLI::IsMember({"mhd", "fm", "gdd"}))->capture_default_str();
  m->add_option("--jiggle", median.jiggle, "Jiggled anchors per sample point")->capture_default_str();
  m->add_option("--budget", median.budget, "Refinement proposals")->capture_default_str();
  m->add_option("--radius-frac", median.radius_frac)->capture_default_str()->check(CLI::NonNegativeNumber);
  m->add_option("--tol", median.tol)->capture_default_str()->check(CLI::PositiveNumber);
  m->add_option("--max-iter", median.max_iter)->capture_default_str()->check(CLI::PositiveNumber);
  m->add_option("--seed", median.seed)->capture_default_str();
  m->add_option("--out", median.out, "Output file (default stdout)");

  TestFlags test;
  auto* t = app.add_subcommand("test", "Depth-based rank tests for equality of distributions");
  t->add_option("--space", test.space, space_help)->required();
  t->add_option("--groups", test.groups, "One CSV per group")->required()->check(CLI::ExistingFile);
  t->add_option("--test", test.test)->check(CLI::IsMember({"wilcoxon", "kw"}))->capture_default_str();
  t->add_option("--permutations", test.permutations)->capture_default_str();
  t->add_option("--seed", test.seed)->capture_default_str();
  t->add_option("--out", test.out, "Output file (default stdout)");

  SimulateFlags sim;
  auto* s = app.add_subcommand("simulate", "Robustness simulation under contamination");
  s->add_option("--config", sim.config, "key = value configuration file")->check(CLI::ExistingFile);
  s->add_option("--out-dir", sim.out_dir, "Directory for CSV outputs and manifest")->required();
  for (const auto& key : kSimulationKeys) sim.options[key] = s->add_option(flag_name(key), sim.values[key]);

  PlotFlags plot;
  auto* p = app.add_subcommand("plotdata", "Join points with depths into a plot-ready table");
  p->add_option("--space", plot.space, space_help)->required();
  p->add_option("--data", plot.data, "Sample CSV")->required()->check(CLI::ExistingFile);
  p->add_option("--depths", plot.depths, "Depth CSV written by 'depth'")->required()->check(CLI::ExistingFile);
  p->add_option("--out", plot.out, "Output file (default stdout)");

  OracleFlags oracle;
  auto* o = app.add_subcommand("oracle", "Exact Tukey depth in one or two dimensions");
  o->group("");
  o->add_option("--space", oracle.space)->required();
  o->add_option("--data", oracle.data)->required()->check(CLI::ExistingFile);
  auto* oq = o->add_option("--query", oracle.query)->check(CLI::ExistingFile);
  o->add_flag("--self", oracle.self)->excludes(oq);
  o->add_option("--out", oracle.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  if (threads > 0) set_thread_limit(threads);
  Context ctx{out, err};
  try {
    if (*d) return cmd_depth(ctx, depth);
    if (*m) return cmd_median(ctx, median);
    if (*t) return cmd_test(ctx, test);
    if (*s) return cmd_simulate(ctx, sim);
    if (*p) return cmd_plotdata(ctx, plot);
    if (*o) return cmd_oracle(ctx, oracle);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GeometryError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace mhd::cli
