#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mhd/depth.hpp"
#include "mhd/estimators.hpp"
#include "mhd/inference.hpp"
#include "mhd/simgen.hpp"
#include "mhd/space.hpp"

namespace mhd::io {

/// `euclidean:3`, `sphere:2`, `spd:10`, `spider3`, `product:spd:2+euclidean:3`.
Space parse_space(std::string_view spec);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// One CSV row: coordinates (euclidean, sphere), row-major k*k entries (spd),
/// `branch,radius` (spider3); product components joined with `|`.
std::string encode_point(const Space& space, const Point& p);
Point decode_point(const Space& space, std::string_view row, std::size_t row_number = 0);

/// Blank lines and lines starting with '#' are skipped.
std::vector<Point> read_points(const Space& space, std::istream& in);
std::vector<Point> read_points(const Space& space, const std::filesystem::path& path);
void write_points(const Space& space, std::span<const Point> points, std::ostream& out);

inline constexpr std::string_view kDepthCsvHeader = "query_index,depth_num,depth_den,anchor1_index,anchor2_index";

/// Missing anchor pairs are written as -1.
void write_depth_csv(const DepthReport& report, std::ostream& out);
DepthReport read_depth_csv(std::istream& in);
nlohmann::json depth_report_json(const DepthReport& report);

nlohmann::json estimator_json(const Space& space, const EstimatorResult& result);
nlohmann::json test_result_json(const TestResult& result);

inline constexpr std::string_view kSimulationLongHeader = "estimator,case,space,k,n,rep,error";
inline constexpr std::string_view kSimulationSummaryHeader = "estimator,case,space,k,n,median_error,se";

void write_simulation_long(const SimulationResult& result, std::ostream& out);
void write_simulation_summary(const SimulationResult& result, std::ostream& out);

/// Reads `key = value` lines ('#' starts a comment) into a map.
std::map<std::string, std::string> read_key_values(std::istream& in);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

inline constexpr int kManifestSchemaVersion = 1;

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   ///< path -> sha256
  std::map<std::string, std::string> outputs;  ///< path -> sha256
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

std::string library_version();

}  // namespace mhd::io
