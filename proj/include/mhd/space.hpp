#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mhd/errors.hpp"
#include "mhd/rng.hpp"

namespace mhd {

enum class SpaceKind { euclidean, sphere, spd, spider3, product };

/// A point stored as a flat payload whose layout is fixed by its space:
///   euclidean:m  m coordinates
///   sphere:m     m+1 ambient coordinates, unit norm
///   spd:k        k*k entries, row-major (equal to column-major by symmetry)
///   spider3      (radius, branch) with branch in {1,2,3}; radius 0 is the
///                origin, always stored with branch 1
///   product      concatenated component payloads
struct Point {
  Eigen::VectorXd values;

  Point() = default;
  explicit Point(Eigen::VectorXd v) : values(std::move(v)) {}
  Point(std::initializer_list<double> v);
};

/// Tangent vector at some base point, in ambient form:
///   euclidean, sphere  ambient vector (orthogonal to the base on a sphere)
///   spd                symmetric k*k matrix, row-major
///   spider3            (signed displacement, direction branch, alternate branch);
///                      a displacement that drives the radius below zero
///                      continues on the alternate branch
///   product            concatenated component tangents
struct Tangent {
  Eigen::VectorXd values;

  Tangent() = default;
  explicit Tangent(Eigen::VectorXd v) : values(std::move(v)) {}
};

/// Covariance of a tangent Gaussian in an orthonormal chart of the tangent
/// space. An empty matrix means isotropic with the given variance.
class Scatter {
 public:
  static Scatter isotropic(double variance);
  static Scatter full(Eigen::MatrixXd covariance);

  bool is_isotropic() const { return covariance_.size() == 0; }
  double variance() const { return variance_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  Scatter scaled(double factor) const;

  /// Draw z ~ N(0, Sigma) of length dim.
  Eigen::VectorXd draw(int dim, Rng& rng) const;

 private:
  double variance_ = 0.0;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;
};

class Space {
 public:
  static Space euclidean(int m);
  static Space sphere(int m);
  static Space spd(int k);
  static Space spider3();
  static Space product(std::vector<Space> components);

  SpaceKind kind() const { return kind_; }
  /// m for euclidean and sphere, k for spd, 0 otherwise.
  int param() const { return param_; }
  const std::vector<Space>& components() const { return components_; }

  int intrinsic_dim() const;
  int point_size() const;
  int tangent_size() const;
  std::string name() const;

  double distance(const Point& x, const Point& y) const;
  Point exp_map(const Point& x, const Tangent& v) const;
  Tangent log_map(const Point& x, const Point& y) const;
  Point geodesic_point(const Point& x, const Point& y, double t) const;

  double tangent_norm(const Point& x, const Tangent& v) const;
  Tangent scale_tangent(const Tangent& v, double factor) const;
  Tangent zero_tangent(const Point& x) const;

  /// Weighted average of tangents based at x. On the spider this is the
  /// one-sided directional derivative of sum_i w_i d^2/2 and picks the
  /// branch of steepest descent at the origin.
  Tangent weighted_tangent_mean(const Point& x, std::span<const Tangent> tangents,
                                std::span<const double> weights) const;

  /// Maps orthonormal chart coordinates (length intrinsic_dim) at x to a
  /// tangent. On the spider the alternate branch is drawn from rng when
  /// given, otherwise the lowest-numbered other branch is used.
  Tangent chart_to_tangent(const Point& x, const Eigen::VectorXd& coords,
                           Rng* rng = nullptr) const;

  Tangent random_tangent(const Point& x, const Scatter& scatter, Rng& rng) const;

  /// Checks and normalizes raw payload values. Sphere points within 1e-6 of
  /// unit norm are renormalized; SPD matrices within 1e-6 of symmetric are
  /// symmetrized; spider origins are canonicalized to branch 1.
  Point validate(std::span<const double> raw) const;

  /// A canonical base point (origin, north pole, identity, spider origin).
  Point reference_point() const;

  bool operator==(const Space& other) const;

 private:
  Space(SpaceKind kind, int param, std::vector<Space> components = {});

  void check_point(const Point& x) const;
  void check_tangent(const Tangent& v) const;

  SpaceKind kind_;
  int param_;
  std::vector<Space> components_;
};

/// Dense row-major distance matrix d(rows[i], cols[j]).
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  DistanceMatrix transposed() const;
  /// Sub-matrix restricted to the given row and column indices.
  DistanceMatrix gather(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// All distances between two point lists. Parallel over rows; the values are
/// bit-identical to Space::distance(rows[i], cols[j]).
DistanceMatrix pairwise_distances(const Space& space, std::span<const Point> rows,
                                  std::span<const Point> cols);

namespace spd {

/// f applied to the eigenvalues of a symmetric matrix.
template <typename F>
Eigen::MatrixXd apply(const Eigen::MatrixXd& m, F f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd d = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd as_matrix(const Point& p, int k);
Eigen::MatrixXd as_matrix(const Tangent& v, int k);
Point from_matrix(const Eigen::MatrixXd& m);

}  // namespace spd

namespace spider {

inline double radius(const Point& p) { return p.values[0]; }
inline int branch(const Point& p) { return static_cast<int>(p.values[1]); }
Point make(double radius, int branch);

}  // namespace spider

}  // namespace mhd
