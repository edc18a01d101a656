#include <doctest.h>

#include <json.hpp>

#include <sstream>

#include "cli.hpp"
#include "mhd/io.hpp"
#include "mhd/simgen.hpp"
#include "support.hpp"

using namespace mhd;
using namespace mhd::testing;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mhd::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string points_csv(const Space& s, const std::vector<Point>& x) {
  std::ostringstream os;
  io::write_points(s, x, os);
  return os.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("depth of a small sample") {
    TempDir dir("depth");
    const auto data = dir.file("x.csv", "1\n2\n3\n");
    const Run r = invoke({"depth", "--space", "euclidean:1", "--data", data, "--self"});
    CHECK(r.code == 0);
    CHECK(r.out == "query_index,depth_num,depth_den,anchor1_index,anchor2_index\n0,1,3,0,1\n1,2,3,0,2\n2,1,3,2,1\n");

    const Run j = invoke({"depth", "--space", "euclidean:1", "--data", data, "--self", "--format", "json"});
    CHECK(json::parse(j.out)["depths"][1]["depth_num"] == 2);
  }

  TEST_CASE("depth writes a manifest next to the output and is reproducible") {
    TempDir dir("manifest");
    Rng rng(1);
    const Space s = Space::spd(2);
    const auto data = dir.file("x.csv", points_csv(s, random_points(s, 30, rng)));
    const std::vector<std::string> base{"depth", "--space", "spd:2", "--data", data, "--self", "--anchors", "jiggle:2",
                                        "--seed", "9"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", dir / "a.csv"});
    b.insert(b.end(), {"--out", dir / "b.csv"});
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    const json m = json::parse(slurp(dir / "a.csv.manifest.json"));
    CHECK(m["command"] == "depth");
    CHECK(m["seed"] == 9);
    CHECK(m["inputs"][data] == io::sha256_file(data));
    CHECK(m["outputs"][dir / "a.csv"] == io::sha256_file(dir / "a.csv"));
    CHECK(m["config"]["anchors"] == "jiggle:2");
  }

  TEST_CASE("spider demo: the deepest tree lies on the heavy branch") {
    TempDir dir("spider");
    std::ostringstream rows;
    Rng rng(3);
    std::normal_distribution<double> z;
    // heavy center branch 1 plus lighter arms
    for (int i = 0; i < 40; ++i) rows << "1," << std::abs(1.5 + 0.5 * z(rng)) << "\n";
    for (int i = 0; i < 10; ++i) rows << "2," << std::abs(1.0 + 0.5 * z(rng)) << "\n";
    for (int i = 0; i < 10; ++i) rows << "3," << std::abs(1.0 + 0.5 * z(rng)) << "\n";
    const auto data = dir.file("t.csv", rows.str());
    const Run d = invoke({"depth", "--space", "spider3", "--data", data, "--self", "--out", dir / "d.csv"});
    REQUIRE(d.code == 0);
    const Run p = invoke({"plotdata", "--space", "spider3", "--data", data, "--depths", dir / "d.csv"});
    REQUIRE(p.code == 0);
    std::istringstream in(p.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,branch,radius,depth_num,depth_den,depth");
    int best_branch = 0;
    long best = -1;
    int count = 0;
    while (std::getline(in, line)) {
      ++count;
      int idx, branch;
      double radius;
      long num, den;
      char c;
      std::istringstream ls(line);
      ls >> idx >> c >> branch >> c >> radius >> c >> num >> c >> den;
      if (num > best) best = num, best_branch = branch;
    }
    CHECK(count == 60);
    CHECK(best_branch == 1);
  }

  TEST_CASE("missing and malformed inputs") {
    TempDir dir("errors");
    const Run missing = invoke({"depth", "--space", "euclidean:1", "--data", dir / "nope.csv", "--self"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--data") != std::string::npos);

    const auto bad = dir.file("bad.csv", "1,2\n3,abc\n");
    const Run parse = invoke({"depth", "--space", "euclidean:2", "--data", bad, "--self"});
    CHECK(parse.code == 3);
    CHECK(parse.err.find("row 2") != std::string::npos);
    CHECK(parse.err.find("column 2") != std::string::npos);

    const auto off = dir.file("off.csv", "0,0,2\n");
    const Run invalid = invoke({"depth", "--space", "sphere:2", "--data", off, "--self"});
    CHECK(invalid.code == 3);
    CHECK(invalid.err.find("norm") != std::string::npos);

    const auto ok = dir.file("ok.csv", "1\n2\n");
    CHECK(invoke({"depth", "--space", "euclidean:1", "--data", ok}).code == 2);
    CHECK(invoke({"depth", "--space", "euclidean:1", "--data", ok, "--self", "--anchors", "jiggle:x"}).code == 2);
    CHECK(invoke({"depth", "--space", "euclidean:1", "--data", ok, "--self", "--format", "xml"}).code == 2);
    CHECK(invoke({"depth", "--space", "blob:1", "--data", ok, "--self"}).code == 3);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
  }

  TEST_CASE("antipodal data is a numerical failure") {
    TempDir dir("antipodal");
    const auto data = dir.file("s.csv", "0,0,1\n0,0,-1\n");
    const Run r = invoke({"median", "--space", "sphere:2", "--data", data, "--estimator", "fm"});
    CHECK(r.code == 4);
  }

  TEST_CASE("median examples") {
    TempDir dir("median");
    const auto data = dir.file("x.csv", "1\n2\n3\n");
    const Run r = invoke({"median", "--space", "euclidean:1", "--data", data, "--jiggle", "0", "--budget", "0"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["point"] == "2");
    CHECK(j["breakdown_lower_bound"].get<double>() == doctest::Approx(0.4));

    const auto plane = dir.file("p.csv", "0,0\n2,0\n4,6\n");
    const json fm = json::parse(invoke({"median", "--space", "euclidean:2", "--data", plane, "--estimator", "fm"}).out);
    const Point m = io::decode_point(Space::euclidean(2), fm["point"].get<std::string>());
    CHECK((m.values - Eigen::Vector2d(2, 2)).norm() < 1e-10);
    CHECK_FALSE(fm.contains("breakdown_lower_bound"));

    const auto two = dir.file("t.csv", "1,0,0\n0,1,0\n");
    const Space s2 = Space::sphere(2);
    const json a = json::parse(invoke({"median", "--space", "sphere:2", "--data", two, "--estimator", "fm"}).out);
    const json b = json::parse(invoke({"median", "--space", "sphere:2", "--data", two, "--estimator", "gdd"}).out);
    const Point pa = io::decode_point(s2, a["point"].get<std::string>());
    const Point pb = io::decode_point(s2, b["point"].get<std::string>());
    const double h = std::sqrt(0.5);
    CHECK(s2.distance(pa, Point{h, h, 0}) < 1e-8);
    CHECK(s2.distance(pb, Point{h, h, 0}) < 1e-8);
  }

  TEST_CASE("test command") {
    TempDir dir("test");
    Rng rng(5);
    const Space s = Space::euclidean(2);
    std::vector<std::string> groups;
    for (int g = 0; g < 4; ++g) groups.push_back(dir.file("g" + std::to_string(g) + ".csv", points_csv(s, random_points(s, 6, rng))));

    std::vector<std::string> args{"test", "--space", "euclidean:2", "--test", "kw", "--permutations", "99", "--groups"};
    args.insert(args.end(), groups.begin(), groups.end());
    const Run r = invoke(args);
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["test"] == "kw");
    CHECK(j["group_labels"] == json({"g0", "g1", "g2", "g3"}));
    CHECK(j["pairwise"].size() == 6);

    const Run w = invoke({"test", "--space", "euclidean:2", "--test", "wilcoxon", "--permutations", "99", "--groups",
                       groups[0], groups[1]});
    REQUIRE(w.code == 0);
    CHECK(json::parse(w.out)["test"] == "wilcoxon");
    CHECK_FALSE(json::parse(w.out).contains("pairwise"));

    CHECK(invoke({"test", "--space", "euclidean:2", "--groups", groups[0]}).code == 2);
    const auto tiny = dir.file("tiny.csv", "0,0\n");
    CHECK(invoke({"test", "--space", "euclidean:2", "--permutations", "99", "--groups", groups[0], tiny}).code == 3);
  }

  TEST_CASE("simulate smoke run is reproducible") {
    TempDir dir("simulate");
    const auto config = dir.file("sim.cfg", "case = 1\nspace = euclidean:2\nn = 50\nreps = 8\nbootstrap = 50\n");
    const Run a = invoke({"simulate", "--config", config, "--out-dir", dir / "a", "--budget", "20"});
    REQUIRE(a.code == 0);
    const Run b = invoke({"simulate", "--config", config, "--out-dir", dir / "b", "--budget", "20"});
    REQUIRE(b.code == 0);
    const std::string summary = slurp(dir / "a/simulation_summary.csv");
    CHECK(summary.substr(0, summary.find('\n')) == "estimator,case,space,k,n,median_error,se");
    CHECK(summary == slurp(dir / "b/simulation_summary.csv"));
    CHECK(slurp(dir / "a/simulation_long.csv") == slurp(dir / "b/simulation_long.csv"));
    const json m = json::parse(slurp(dir / "a/manifest.json"));
    CHECK(m["config"]["budget"] == 20);
    CHECK(m["config"]["n"] == 50);
    CHECK(m["inputs"].size() == 1);

    CHECK(invoke({"simulate", "--out-dir", dir / "c", "--case", "7"}).code == 3);
    CHECK(invoke({"simulate", "--out-dir", dir / "c", "--case", "2", "--space", "sphere:2", "--offset", "4"}).code == 3);
    const auto unknown = dir.file("bad.cfg", "colour = red\n");
    CHECK(invoke({"simulate", "--config", unknown, "--out-dir", dir / "c"}).code == 3);
  }

  TEST_CASE("plot data") {
    TempDir dir("plot");
    const Space s = Space::sphere(2);
    const PopulationSpec p{s, s.reference_point(), Scatter::isotropic(0.5), "P"};
    const auto data = dir.file("s.csv", points_csv(s, sample_population(p, 25, 1)));
    REQUIRE(invoke({"depth", "--space", "sphere:2", "--data", data, "--self", "--out", dir / "d.csv"}).code == 0);
    const Run r = invoke({"plotdata", "--space", "sphere:2", "--data", data, "--depths", dir / "d.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.substr(0, r.out.find('\n')) == "index,x1,x2,x3,depth_num,depth_den,depth");
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 26);

    const auto fewer = dir.file("few.csv", points_csv(s, sample_population(p, 24, 1)));
    CHECK(invoke({"plotdata", "--space", "sphere:2", "--data", fewer, "--depths", dir / "d.csv"}).code == 3);
    const auto empty = dir.file("empty.csv", "");
    CHECK(invoke({"plotdata", "--space", "sphere:2", "--data", data, "--depths", empty}).code == 3);
  }

  TEST_CASE("hidden oracle command") {
    TempDir dir("oracle");
    const auto data = dir.file("x.csv", "0,0\n1,0\n0,1\n");
    const auto q = dir.file("q.csv", "0.3333333333333333,0.3333333333333333\n5,5\n");
    const Run r = invoke({"oracle", "--space", "euclidean:2", "--data", data, "--query", q});
    REQUIRE(r.code == 0);
    CHECK(r.out == "query_index,depth_num,depth_den\n0,1,3\n1,0,3\n");
    CHECK(invoke({"oracle", "--space", "sphere:2", "--data", data, "--self"}).code == 2);
  }
}
