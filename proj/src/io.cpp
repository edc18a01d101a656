#include "mhd/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mhd::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

double parse_double(std::string_view field, std::size_t row, std::size_t column) {
  field = trim(field);
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    std::ostringstream os;
    os << "row " << row << ", column " << column << ": cannot parse '" << field << "' as a number";
    throw ParseError(os.str(), row, column);
  }
  return v;
}

long long parse_integer(std::string_view field, std::size_t row, std::size_t column) {
  field = trim(field);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    std::ostringstream os;
    os << "row " << row << ", column " << column << ": cannot parse '" << field << "' as an integer";
    throw ParseError(os.str(), row, column);
  }
  return v;
}

int parse_positive(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v <= 0) {
    throw std::invalid_argument("space: " + std::string(what) + " needs a positive integer, got '" + std::string(s) + "'");
  }
  return v;
}

// Raw payload values of one (non-product) component, in storage order.
void decode_component(const Space& space, std::string_view text, std::size_t row, std::size_t& column,
                      std::vector<double>& raw) {
  const auto fields = split(text, ',');
  const std::size_t first_column = column + 1;
  if (space.kind() == SpaceKind::spider3) {
    if (fields.size() != 2) {
      throw ParseError("row " + std::to_string(row) + ": spider3 expects 'branch,radius'", row, first_column);
    }
    const double branch = static_cast<double>(parse_integer(fields[0], row, first_column));
    const double radius = parse_double(fields[1], row, first_column + 1);
    raw.push_back(radius);
    raw.push_back(branch);
    column += 2;
    return;
  }
  if (static_cast<int>(fields.size()) != space.point_size()) {
    std::ostringstream os;
    os << "row " << row << ": " << space.name() << " expects " << space.point_size() << " values, got "
       << fields.size();
    throw ParseError(os.str(), row, first_column);
  }
  for (auto f : fields) raw.push_back(parse_double(f, row, ++column));
}

void encode_component(const Space& space, const Eigen::VectorXd& values, Eigen::Index offset, std::string& out) {
  if (space.kind() == SpaceKind::spider3) {
    out += std::to_string(static_cast<int>(values[offset + 1]));
    out += ',';
    out += format_double(values[offset]);
    return;
  }
  for (int i = 0; i < space.point_size(); ++i) {
    if (i) out += ',';
    out += format_double(values[offset + i]);
  }
}

std::string digest_hex(const unsigned char* md, unsigned int len) {
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace

Space parse_space(std::string_view spec) {
  spec = trim(spec);
  if (spec == "spider3") return Space::spider3();
  if (spec.starts_with("product:")) {
    std::vector<Space> parts;
    for (auto p : split(spec.substr(8), '+')) parts.push_back(parse_space(p));
    return Space::product(std::move(parts));
  }
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("space: '" + std::string(spec) + "' is not of the form kind:param");
  }
  const auto kind = spec.substr(0, colon);
  const auto param = spec.substr(colon + 1);
  if (kind == "euclidean") return Space::euclidean(parse_positive(param, "euclidean"));
  if (kind == "sphere") return Space::sphere(parse_positive(param, "sphere"));
  if (kind == "spd") return Space::spd(parse_positive(param, "spd"));
  throw std::invalid_argument("space: unknown kind '" + std::string(kind) + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string encode_point(const Space& space, const Point& p) {
  if (p.values.size() != space.point_size()) throw DimensionMismatch(space.name() + ": point has wrong size");
  std::string out;
  if (space.kind() != SpaceKind::product) {
    encode_component(space, p.values, 0, out);
    return out;
  }
  Eigen::Index off = 0;
  for (std::size_t c = 0; c < space.components().size(); ++c) {
    const Space& comp = space.components()[c];
    if (c) out += '|';
    if (comp.kind() == SpaceKind::product) {
      out += encode_point(comp, Point(p.values.segment(off, comp.point_size())));
    } else {
      encode_component(comp, p.values, off, out);
    }
    off += comp.point_size();
  }
  return out;
}

Point decode_point(const Space& space, std::string_view row, std::size_t row_number) {
  std::vector<double> raw;
  std::size_t column = 0;
  if (space.kind() == SpaceKind::product) {
    const auto parts = split(row, '|');
    if (parts.size() != space.components().size()) {
      throw ParseError("row " + std::to_string(row_number) + ": expected " +
                           std::to_string(space.components().size()) + " '|'-separated components",
                       row_number);
    }
    for (std::size_t c = 0; c < parts.size(); ++c) {
      const Space& comp = space.components()[c];
      if (comp.kind() == SpaceKind::product) {
        throw ParseError("row " + std::to_string(row_number) + ": nested products are not supported", row_number);
      }
      decode_component(comp, parts[c], row_number, column, raw);
    }
  } else {
    decode_component(space, row, row_number, column, raw);
  }
  try {
    return space.validate(raw);
  } catch (const InvalidPoint& e) {
    throw InvalidPoint("row " + std::to_string(row_number) + ": " + e.what());
  }
}

std::vector<Point> read_points(const Space& space, std::istream& in) {
  std::vector<Point> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.push_back(decode_point(space, t, row));
  }
  return out;
}

std::vector<Point> read_points(const Space& space, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  return read_points(space, in);
}

void write_points(const Space& space, std::span<const Point> points, std::ostream& out) {
  for (const auto& p : points) out << encode_point(space, p) << '\n';
}

void write_depth_csv(const DepthReport& report, std::ostream& out) {
  out << kDepthCsvHeader << '\n';
  for (const auto& e : report) {
    out << e.query << ',' << e.depth.count << ',' << e.depth.total << ',';
    if (e.anchors) out << e.anchors->first << ',' << e.anchors->second;
    else out << "-1,-1";
    out << '\n';
  }
}

DepthReport read_depth_csv(std::istream& in) {
  DepthReport report;
  std::string line;
  std::size_t row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != kDepthCsvHeader) throw ParseError("row " + std::to_string(row) + ": unexpected depth file header", row);
      header = true;
      continue;
    }
    const auto f = split(t, ',');
    if (f.size() != 5) throw ParseError("row " + std::to_string(row) + ": expected 5 fields", row);
    DepthEntry e;
    const long long q = parse_integer(f[0], row, 1);
    const long long num = parse_integer(f[1], row, 2);
    const long long den = parse_integer(f[2], row, 3);
    const long long a1 = parse_integer(f[3], row, 4);
    const long long a2 = parse_integer(f[4], row, 5);
    if (q < 0 || num < 0 || den <= 0 || num > den) {
      throw ParseError("row " + std::to_string(row) + ": depth must satisfy 0 <= num <= den, den > 0", row);
    }
    e.query = static_cast<std::size_t>(q);
    e.depth = {static_cast<std::uint32_t>(num), static_cast<std::uint32_t>(den)};
    if (a1 >= 0 && a2 >= 0) e.anchors = AnchorPair{static_cast<std::size_t>(a1), static_cast<std::size_t>(a2)};
    report.push_back(e);
  }
  if (!header) throw ParseError("depth file is empty", 0);
  return report;
}

nlohmann::json depth_report_json(const DepthReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report) {
    nlohmann::json r{{"query_index", e.query},
                     {"depth_num", e.depth.count},
                     {"depth_den", e.depth.total},
                     {"depth", e.depth.value()}};
    if (e.anchors) {
      r["anchor1_index"] = e.anchors->first;
      r["anchor2_index"] = e.anchors->second;
    } else {
      r["anchor1_index"] = -1;
      r["anchor2_index"] = -1;
    }
    rows.push_back(std::move(r));
  }
  return {{"depths", rows}};
}

nlohmann::json estimator_json(const Space& space, const EstimatorResult& result) {
  return {{"point", encode_point(space, result.point)},
          {"objective", result.objective},
          {"iterations", result.iterations},
          {"converged", result.converged}};
}

nlohmann::json test_result_json(const TestResult& result) {
  return {{"test", result.test},
          {"statistic", result.statistic},
          {"p_value", result.p_value},
          {"n_permutations", result.n_permutations},
          {"seed", result.seed},
          {"group_labels", result.group_labels}};
}

namespace {

std::pair<std::string, int> space_columns(const Space& space) {
  switch (space.kind()) {
    case SpaceKind::euclidean: return {"euclidean", space.param()};
    case SpaceKind::sphere: return {"sphere", space.param()};
    case SpaceKind::spd: return {"spd", space.param()};
    case SpaceKind::spider3: return {"spider3", 3};
    case SpaceKind::product: return {space.name(), space.intrinsic_dim()};
  }
  return {};
}

}  // namespace

void write_simulation_long(const SimulationResult& result, std::ostream& out) {
  const auto [name, k] = space_columns(result.config.space);
  out << kSimulationLongHeader << '\n';
  for (const auto& s : result.summaries) {
    for (std::size_t r = 0; r < s.errors.size(); ++r) {
      out << to_string(s.estimator) << ',' << result.config.case_id << ',' << name << ',' << k << ','
          << result.config.n << ',' << r << ',' << (std::isfinite(s.errors[r]) ? format_double(s.errors[r]) : "NA")
          << '\n';
    }
  }
}

void write_simulation_summary(const SimulationResult& result, std::ostream& out) {
  const auto [name, k] = space_columns(result.config.space);
  out << kSimulationSummaryHeader << '\n';
  for (const auto& s : result.summaries) {
    out << to_string(s.estimator) << ',' << result.config.case_id << ',' << name << ',' << k << ','
        << result.config.n << ',' << (std::isfinite(s.median_error) ? format_double(s.median_error) : "NA") << ','
        << format_double(s.se) << '\n';
  }
}

std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    std::string_view t = line;
    if (const auto hash = t.find('#'); hash != std::string_view::npos) t = t.substr(0, hash);
    t = trim(t);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("row " + std::to_string(row) + ": expected key = value", row);
    const auto key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("row " + std::to_string(row) + ": empty key", row);
    out[std::string(key)] = std::string(trim(t.substr(eq + 1)));
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  return digest_hex(md, len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

nlohmann::json RunManifest::to_json() const {
  return {{"schema_version", kManifestSchemaVersion},
          {"command", command},
          {"config", config},
          {"seed", seed},
          {"library_version", library_version()},
          {"inputs", inputs},
          {"outputs", outputs},
          {"wall_seconds", wall_seconds}};
}

std::string library_version() { return MHD_VERSION; }

}  // namespace mhd::io
