#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "mhd/rng.hpp"
#include "mhd/space.hpp"

namespace mhd::testing {

inline std::vector<Point> reals(std::initializer_list<double> xs) {
  std::vector<Point> out;
  for (double x : xs) out.push_back(Point{x});
  return out;
}

inline std::vector<Point> reals(const std::vector<double>& xs) {
  std::vector<Point> out;
  for (double x : xs) out.push_back(Point{x});
  return out;
}

inline Eigen::VectorXd unit(int size, int i) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(size);
  e[i] = 1.0;
  return e;
}

/// A spread-out random point: Gaussian around the reference point for
/// manifolds, uniform on the sphere, uniform radius on a random branch.
inline Point random_point(const Space& space, Rng& rng) {
  std::normal_distribution<double> z;
  switch (space.kind()) {
    case SpaceKind::sphere: {
      Eigen::VectorXd v(space.point_size());
      for (auto& x : v) x = z(rng);
      return Point(v.normalized());
    }
    case SpaceKind::spider3: {
      std::uniform_real_distribution<double> r(0.0, 3.0);
      std::uniform_int_distribution<int> b(1, 3);
      const double radius = r(rng);
      return spider::make(radius, b(rng));
    }
    case SpaceKind::product: {
      Eigen::VectorXd v(space.point_size());
      Eigen::Index off = 0;
      for (const auto& c : space.components()) {
        const Point p = random_point(c, rng);
        v.segment(off, p.values.size()) = p.values;
        off += p.values.size();
      }
      return Point(v);
    }
    default: {
      const Point o = space.reference_point();
      return space.exp_map(o, space.random_tangent(o, Scatter::isotropic(1.0), rng));
    }
  }
}

inline std::vector<Point> random_points(const Space& space, std::size_t n, Rng& rng) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_point(space, rng));
  return out;
}

inline Eigen::MatrixXd random_orthogonal(int m, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = z(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ();
}

inline Eigen::MatrixXd random_invertible(int k, Rng& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = z(rng);
  return a + 3.0 * Eigen::MatrixXd::Identity(k, k);
}

inline Point congruence(const Point& p, const Eigen::MatrixXd& a) {
  const int k = static_cast<int>(a.rows());
  const Eigen::MatrixXd m = a * spd::as_matrix(p, k) * a.transpose();
  return spd::from_matrix(0.5 * (m + m.transpose()));
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("mhd_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k < j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j + 1);
      i = j;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += ra[i], mb += rb[i];
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace mhd::testing
