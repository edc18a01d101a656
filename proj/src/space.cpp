#include "mhd/space.hpp"

#include "mhd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace mhd {

namespace {

constexpr double kSphereNormTolerance = 1e-6;
constexpr double kSymmetryTolerance = 1e-6;
constexpr double kAntipodalTolerance = 1e-9;

// Cholesky factor inverse L^{-1} with P = L L^T.
Eigen::MatrixXd inverse_cholesky(const Eigen::MatrixXd& p) {
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) {
    throw InvalidPoint("spd: matrix is not positive definite");
  }
  return llt.matrixL().solve(Eigen::MatrixXd::Identity(p.rows(), p.cols()));
}

// sum of log^2 of the eigenvalues of L^{-1} Q L^{-T}, i.e. of P^{-1} Q.
double spd_distance_prepared(const Eigen::MatrixXd& linv, const double* q, int k) {
  Eigen::Map<const Eigen::MatrixXd> qm(q, k, k);
  if (k == 2) {
    const double l00 = linv(0, 0), l10 = linv(1, 0), l11 = linv(1, 1);
    const double q00 = qm(0, 0), q01 = qm(0, 1), q11 = qm(1, 1);
    // C = L^{-1} Q L^{-T} for lower-triangular L^{-1}.
    const double c00 = l00 * l00 * q00;
    const double c01 = l00 * (l10 * q00 + l11 * q01);
    const double c11 = l10 * l10 * q00 + 2.0 * l10 * l11 * q01 + l11 * l11 * q11;
    const double half_trace = 0.5 * (c00 + c11);
    const double half_gap = std::hypot(0.5 * (c00 - c11), c01);
    const double lambda_max = half_trace + half_gap;
    // product of eigenvalues = det(C); avoids cancellation in the smaller root
    const double lambda_min = (c00 * c11 - c01 * c01) / lambda_max;
    if (!(lambda_min > 0.0)) throw GeometryError("spd: non-positive generalized eigenvalue");
    const double a = std::log(lambda_max), b = std::log(lambda_min);
    return std::sqrt(a * a + b * b);
  }
  Eigen::MatrixXd c = linv * qm * linv.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (c + c.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw GeometryError("spd: eigendecomposition failed");
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lambda = es.eigenvalues()[i];
    if (!(lambda > 0.0)) throw GeometryError("spd: non-positive generalized eigenvalue");
    const double l = std::log(lambda);
    s += l * l;
  }
  return std::sqrt(s);
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& p) {
  return spd::apply(p, [](double v) { return std::sqrt(v); });
}

Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& p) {
  return spd::apply(p, [](double v) { return 1.0 / std::sqrt(v); });
}

// Orthonormal basis of the tangent space x^perp of the unit sphere, as the
// trailing columns of the Householder reflection taking e_0 to x.
Eigen::MatrixXd sphere_tangent_basis(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd w = x;
  w[0] -= 1.0;
  const double ww = w.squaredNorm();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  if (ww > 0.0) h -= (2.0 / ww) * w * w.transpose();
  return h.rightCols(n - 1);
}

int other_branch(int branch, int which) {
  // which in {0,1}: the two branches different from `branch`, ascending
  int out = 0;
  for (int b = 1; b <= 3; ++b) {
    if (b == branch) continue;
    if (which-- == 0) {
      out = b;
      break;
    }
  }
  return out;
}

int draw_alternate(int branch, Rng* rng) {
  if (!rng) return other_branch(branch, 0);
  return other_branch(branch, static_cast<int>((*rng)() >> 63));
}

}  // namespace

Point::Point(std::initializer_list<double> v) : values(static_cast<Eigen::Index>(v.size())) {
  std::copy(v.begin(), v.end(), values.data());
}

// ---------------------------------------------------------------- Scatter

Scatter Scatter::isotropic(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("scatter: variance must be finite and non-negative");
  }
  Scatter s;
  s.variance_ = variance;
  return s;
}

Scatter Scatter::full(Eigen::MatrixXd covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw DimensionMismatch("scatter: covariance must be square and non-empty");
  }
  Scatter s;
  s.covariance_ = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.covariance_);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
    throw std::invalid_argument("scatter: covariance must be positive semi-definite");
  }
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  s.factor_ = es.eigenvectors() * root.asDiagonal();
  s.variance_ = s.covariance_.trace() / static_cast<double>(s.covariance_.rows());
  return s;
}

Scatter Scatter::scaled(double factor) const {
  if (is_isotropic()) return isotropic(variance_ * factor);
  return full(covariance_ * factor);
}

Eigen::VectorXd Scatter::draw(int dim, Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(dim);
  for (int i = 0; i < dim; ++i) g[i] = normal(rng);
  if (is_isotropic()) return std::sqrt(variance_) * g;
  if (factor_.rows() != dim) throw DimensionMismatch("scatter: covariance size differs from intrinsic dimension");
  return factor_ * g;
}

// ---------------------------------------------------------------- Space

Space::Space(SpaceKind kind, int param, std::vector<Space> components)
    : kind_(kind), param_(param), components_(std::move(components)) {}

Space Space::euclidean(int m) {
  if (m <= 0) throw std::invalid_argument("euclidean: dimension must be positive");
  return Space(SpaceKind::euclidean, m);
}

Space Space::sphere(int m) {
  if (m <= 0) throw std::invalid_argument("sphere: dimension must be positive");
  return Space(SpaceKind::sphere, m);
}

Space Space::spd(int k) {
  if (k <= 0) throw std::invalid_argument("spd: matrix size must be positive");
  return Space(SpaceKind::spd, k);
}

Space Space::spider3() { return Space(SpaceKind::spider3, 0); }

Space Space::product(std::vector<Space> components) {
  if (components.size() < 2) throw std::invalid_argument("product: needs at least two components");
  return Space(SpaceKind::product, 0, std::move(components));
}

bool Space::operator==(const Space& other) const {
  return kind_ == other.kind_ && param_ == other.param_ && components_ == other.components_;
}

int Space::intrinsic_dim() const {
  switch (kind_) {
    case SpaceKind::euclidean:
    case SpaceKind::sphere: return param_;
    case SpaceKind::spd: return param_ * (param_ + 1) / 2;
    case SpaceKind::spider3: return 1;
    case SpaceKind::product: {
      int s = 0;
      for (const auto& c : components_) s += c.intrinsic_dim();
      return s;
    }
  }
  return 0;
}

int Space::point_size() const {
  switch (kind_) {
    case SpaceKind::euclidean: return param_;
    case SpaceKind::sphere: return param_ + 1;
    case SpaceKind::spd: return param_ * param_;
    case SpaceKind::spider3: return 2;
    case SpaceKind::product: {
      int s = 0;
      for (const auto& c : components_) s += c.point_size();
      return s;
    }
  }
  return 0;
}

int Space::tangent_size() const {
  switch (kind_) {
    case SpaceKind::spider3: return 3;
    case SpaceKind::product: {
      int s = 0;
      for (const auto& c : components_) s += c.tangent_size();
      return s;
    }
    default: return point_size();
  }
}

std::string Space::name() const {
  switch (kind_) {
    case SpaceKind::euclidean: return "euclidean:" + std::to_string(param_);
    case SpaceKind::sphere: return "sphere:" + std::to_string(param_);
    case SpaceKind::spd: return "spd:" + std::to_string(param_);
    case SpaceKind::spider3: return "spider3";
    case SpaceKind::product: {
      std::string s = "product:";
      for (std::size_t i = 0; i < components_.size(); ++i) {
        if (i) s += '+';
        s += components_[i].name();
      }
      return s;
    }
  }
  return {};
}

void Space::check_point(const Point& x) const {
  if (x.values.size() != point_size()) {
    std::ostringstream os;
    os << name() << ": point has " << x.values.size() << " values, expected " << point_size();
    throw DimensionMismatch(os.str());
  }
}

void Space::check_tangent(const Tangent& v) const {
  if (v.values.size() != tangent_size()) {
    std::ostringstream os;
    os << name() << ": tangent has " << v.values.size() << " values, expected " << tangent_size();
    throw DimensionMismatch(os.str());
  }
}

Point Space::reference_point() const {
  switch (kind_) {
    case SpaceKind::euclidean: return Point(Eigen::VectorXd::Zero(param_));
    case SpaceKind::sphere: {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(param_ + 1);
      v[param_] = 1.0;
      return Point(v);
    }
    case SpaceKind::spd: return spd::from_matrix(Eigen::MatrixXd::Identity(param_, param_));
    case SpaceKind::spider3: return spider::make(0.0, 1);
    case SpaceKind::product: {
      Eigen::VectorXd v(point_size());
      Eigen::Index off = 0;
      for (const auto& c : components_) {
        const Point p = c.reference_point();
        v.segment(off, p.values.size()) = p.values;
        off += p.values.size();
      }
      return Point(v);
    }
  }
  return {};
}

double Space::distance(const Point& x, const Point& y) const {
  check_point(x);
  check_point(y);
  if (x.values == y.values) return 0.0;
  switch (kind_) {
    case SpaceKind::euclidean: return (x.values - y.values).norm();
    case SpaceKind::sphere:
      // 2 atan2(|x-y|, |x+y|) equals arccos(<x,y>) on the unit sphere and
      // keeps full precision for nearby and for nearly antipodal points.
      return 2.0 * std::atan2((x.values - y.values).norm(), (x.values + y.values).norm());
    case SpaceKind::spd: {
      const Eigen::MatrixXd linv = inverse_cholesky(spd::as_matrix(x, param_));
      return spd_distance_prepared(linv, y.values.data(), param_);
    }
    case SpaceKind::spider3: {
      const double a = spider::radius(x), b = spider::radius(y);
      if (a == 0.0 || b == 0.0 || spider::branch(x) == spider::branch(y)) return std::abs(a - b);
      return a + b;
    }
    case SpaceKind::product: {
      double s = 0.0;
      Eigen::Index off = 0;
      for (const auto& c : components_) {
        const int sz = c.point_size();
        const double d = c.distance(Point(x.values.segment(off, sz)), Point(y.values.segment(off, sz)));
        s += d * d;
        off += sz;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

Point Space::exp_map(const Point& x, const Tangent& v) const {
  check_point(x);
  check_tangent(v);
  switch (kind_) {
    case SpaceKind::euclidean: return Point(x.values + v.values);
    case SpaceKind::sphere: {
      const Eigen::VectorXd u = v.values - v.values.dot(x.values) * x.values;
      const double nu = u.norm();
      if (nu == 0.0) return x;
      Eigen::VectorXd y = std::cos(nu) * x.values + (std::sin(nu) / nu) * u;
      y.normalize();
      return Point(y);
    }
    case SpaceKind::spd: {
      const Eigen::MatrixXd p = spd::as_matrix(x, param_);
      const Eigen::MatrixXd s = spd_sqrt(p);
      const Eigen::MatrixXd is = spd_inv_sqrt(p);
      const Eigen::MatrixXd inner = spd::apply(is * spd::as_matrix(v, param_) * is, [](double l) { return std::exp(l); });
      const Eigen::MatrixXd q = s * inner * s;
      return spd::from_matrix(0.5 * (q + q.transpose()));
    }
    case SpaceKind::spider3: {
      const double r = spider::radius(x);
      const int dir = (r == 0.0) ? static_cast<int>(v.values[1]) : spider::branch(x);
      const double s = r + v.values[0];
      if (s >= 0.0) return spider::make(s, dir);
      return spider::make(-s, static_cast<int>(v.values[2]));
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(point_size());
      Eigen::Index po = 0, to = 0;
      for (const auto& c : components_) {
        const int ps = c.point_size(), ts = c.tangent_size();
        const Point y = c.exp_map(Point(x.values.segment(po, ps)), Tangent(v.values.segment(to, ts)));
        out.segment(po, ps) = y.values;
        po += ps;
        to += ts;
      }
      return Point(out);
    }
  }
  return x;
}

Tangent Space::log_map(const Point& x, const Point& y) const {
  check_point(x);
  check_point(y);
  switch (kind_) {
    case SpaceKind::euclidean: return Tangent(y.values - x.values);
    case SpaceKind::sphere: {
      const double d = distance(x, y);
      if (std::numbers::pi - d <= kAntipodalTolerance) {
        throw GeometryError("sphere: log map undefined for antipodal points");
      }
      const Eigen::VectorXd u = y.values - x.values.dot(y.values) * x.values;
      const double nu = u.norm();
      if (nu == 0.0 || d == 0.0) return Tangent(Eigen::VectorXd::Zero(x.values.size()));
      return Tangent((d / nu) * u);
    }
    case SpaceKind::spd: {
      const Eigen::MatrixXd p = spd::as_matrix(x, param_);
      const Eigen::MatrixXd s = spd_sqrt(p);
      const Eigen::MatrixXd is = spd_inv_sqrt(p);
      const Eigen::MatrixXd inner = spd::apply(is * spd::as_matrix(y, param_) * is, [](double l) { return std::log(l); });
      const Eigen::MatrixXd t = s * inner * s;
      return Tangent(spd::from_matrix(0.5 * (t + t.transpose())).values);
    }
    case SpaceKind::spider3: {
      const double a = spider::radius(x), b = spider::radius(y);
      const int bx = spider::branch(x), by = spider::branch(y);
      Eigen::VectorXd t(3);
      if (a == 0.0) {
        t << b, (b == 0.0 ? 1 : by), other_branch(b == 0.0 ? 1 : by, 0);
      } else if (b == 0.0 || bx == by) {
        t << b - a, bx, other_branch(bx, 0);
      } else {
        t << -(a + b), bx, by;
      }
      return Tangent(t);
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(tangent_size());
      Eigen::Index po = 0, to = 0;
      for (const auto& c : components_) {
        const int ps = c.point_size(), ts = c.tangent_size();
        out.segment(to, ts) = c.log_map(Point(x.values.segment(po, ps)), Point(y.values.segment(po, ps))).values;
        po += ps;
        to += ts;
      }
      return Tangent(out);
    }
  }
  return {};
}

Point Space::geodesic_point(const Point& x, const Point& y, double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("geodesic_point: t must lie in [0,1]");
  Tangent v;
  try {
    v = log_map(x, y);
  } catch (const GeometryError&) {
    throw GeometryError(name() + ": geodesic between the points is not unique");
  }
  if (t == 1.0) return y;
  return exp_map(x, scale_tangent(v, t));
}

double Space::tangent_norm(const Point& x, const Tangent& v) const {
  check_point(x);
  check_tangent(v);
  switch (kind_) {
    case SpaceKind::euclidean:
    case SpaceKind::sphere: return v.values.norm();
    case SpaceKind::spd: {
      const Eigen::MatrixXd is = spd_inv_sqrt(spd::as_matrix(x, param_));
      return (is * spd::as_matrix(v, param_) * is).norm();
    }
    case SpaceKind::spider3: return std::abs(v.values[0]);
    case SpaceKind::product: {
      double s = 0.0;
      Eigen::Index po = 0, to = 0;
      for (const auto& c : components_) {
        const int ps = c.point_size(), ts = c.tangent_size();
        const double n = c.tangent_norm(Point(x.values.segment(po, ps)), Tangent(v.values.segment(to, ts)));
        s += n * n;
        po += ps;
        to += ts;
      }
      return std::sqrt(s);
    }
  }
  return 0.0;
}

Tangent Space::scale_tangent(const Tangent& v, double factor) const {
  check_tangent(v);
  switch (kind_) {
    case SpaceKind::spider3: {
      Tangent out = v;
      out.values[0] *= factor;
      return out;
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(v.values.size());
      Eigen::Index to = 0;
      for (const auto& c : components_) {
        const int ts = c.tangent_size();
        out.segment(to, ts) = c.scale_tangent(Tangent(v.values.segment(to, ts)), factor).values;
        to += ts;
      }
      return Tangent(out);
    }
    default: return Tangent(factor * v.values);
  }
}

Tangent Space::zero_tangent(const Point& x) const {
  check_point(x);
  switch (kind_) {
    case SpaceKind::spider3: {
      const int b = spider::branch(x);
      return Tangent(Eigen::Vector3d(0.0, b, other_branch(b, 0)));
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(tangent_size());
      Eigen::Index po = 0, to = 0;
      for (const auto& c : components_) {
        const int ps = c.point_size(), ts = c.tangent_size();
        out.segment(to, ts) = c.zero_tangent(Point(x.values.segment(po, ps))).values;
        po += ps;
        to += ts;
      }
      return Tangent(out);
    }
    default: return Tangent(Eigen::VectorXd::Zero(tangent_size()));
  }
}

Tangent Space::weighted_tangent_mean(const Point& x, std::span<const Tangent> tangents,
                                     std::span<const double> weights) const {
  if (tangents.size() != weights.size()) throw DimensionMismatch("weighted_tangent_mean: size mismatch");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (tangents.empty() || !(total > 0.0)) return zero_tangent(x);
  for (const auto& t : tangents) check_tangent(t);

  switch (kind_) {
    case SpaceKind::spider3: {
      const double r = spider::radius(x);
      if (r == 0.0) {
        // Descent direction at the origin: the branch whose points pull harder
        // than all the others combined.
        double mass[4] = {0, 0, 0, 0};
        double all = 0.0;
        for (std::size_t i = 0; i < tangents.size(); ++i) {
          const double t = tangents[i].values[0];
          mass[static_cast<int>(tangents[i].values[1])] += weights[i] * t;
          all += weights[i] * t;
        }
        int best = 1;
        for (int b = 2; b <= 3; ++b) {
          if (mass[b] > mass[best]) best = b;
        }
        const double pull = 2.0 * mass[best] - all;
        if (pull <= 0.0) return zero_tangent(x);
        return Tangent(Eigen::Vector3d(pull / total, best, other_branch(best, 0)));
      }
      const int b = spider::branch(x);
      double sum = 0.0;
      double beyond[4] = {0, 0, 0, 0};
      for (std::size_t i = 0; i < tangents.size(); ++i) {
        const double t = tangents[i].values[0];
        sum += weights[i] * t;
        const int alt = static_cast<int>(tangents[i].values[2]);
        if (-t > r && alt != b) beyond[alt] += weights[i] * (-t - r);
      }
      int alt = other_branch(b, 0);
      const int second = other_branch(b, 1);
      if (beyond[second] > beyond[alt]) alt = second;
      return Tangent(Eigen::Vector3d(sum / total, b, alt));
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(tangent_size());
      Eigen::Index po = 0, to = 0;
      std::vector<Tangent> parts(tangents.size());
      for (const auto& c : components_) {
        const int ps = c.point_size(), ts = c.tangent_size();
        for (std::size_t i = 0; i < tangents.size(); ++i) parts[i] = Tangent(tangents[i].values.segment(to, ts));
        out.segment(to, ts) = c.weighted_tangent_mean(Point(x.values.segment(po, ps)), parts, weights).values;
        po += ps;
        to += ts;
      }
      return Tangent(out);
    }
    default: {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(tangent_size());
      for (std::size_t i = 0; i < tangents.size(); ++i) acc += weights[i] * tangents[i].values;
      return Tangent(acc / total);
    }
  }
}

Tangent Space::chart_to_tangent(const Point& x, const Eigen::VectorXd& coords, Rng* rng) const {
  check_point(x);
  if (coords.size() != intrinsic_dim()) throw DimensionMismatch(name() + ": chart coordinates have wrong length");
  switch (kind_) {
    case SpaceKind::euclidean: return Tangent(coords);
    case SpaceKind::sphere: return Tangent(sphere_tangent_basis(x.values) * coords);
    case SpaceKind::spd: {
      const int k = param_;
      Eigen::MatrixXd s(k, k);
      Eigen::Index idx = 0;
      for (int i = 0; i < k; ++i) {
        s(i, i) = coords[idx++];
        for (int j = i + 1; j < k; ++j) {
          s(i, j) = s(j, i) = coords[idx++] / std::numbers::sqrt2;
        }
      }
      const Eigen::MatrixXd root = spd_sqrt(spd::as_matrix(x, k));
      const Eigen::MatrixXd v = root * s * root;
      return Tangent(spd::from_matrix(0.5 * (v + v.transpose())).values);
    }
    case SpaceKind::spider3: {
      double t = coords[0];
      int b = spider::branch(x);
      if (spider::radius(x) == 0.0) {
        b = rng ? static_cast<int>(1 + (*rng)() % 3) : 1;
        t = std::abs(t);
      }
      return Tangent(Eigen::Vector3d(t, b, draw_alternate(b, rng)));
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(tangent_size());
      Eigen::Index po = 0, to = 0, co = 0;
      for (const auto& c : components_) {
        const int ps = c.point_size(), ts = c.tangent_size(), cs = c.intrinsic_dim();
        out.segment(to, ts) =
            c.chart_to_tangent(Point(x.values.segment(po, ps)), coords.segment(co, cs), rng).values;
        po += ps;
        to += ts;
        co += cs;
      }
      return Tangent(out);
    }
  }
  return {};
}

Tangent Space::random_tangent(const Point& x, const Scatter& scatter, Rng& rng) const {
  const Eigen::VectorXd z = scatter.draw(intrinsic_dim(), rng);
  return chart_to_tangent(x, z, &rng);
}

Point Space::validate(std::span<const double> raw) const {
  if (static_cast<int>(raw.size()) != point_size()) {
    std::ostringstream os;
    os << name() << ": expected " << point_size() << " values, got " << raw.size();
    throw DimensionMismatch(os.str());
  }
  for (double v : raw) {
    if (!std::isfinite(v)) throw InvalidPoint(name() + ": non-finite coordinate");
  }
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
  switch (kind_) {
    case SpaceKind::euclidean: return Point(v);
    case SpaceKind::sphere: {
      const double norm = v.norm();
      if (std::abs(norm - 1.0) > kSphereNormTolerance) {
        std::ostringstream os;
        os << name() << ": point norm " << norm << " is not within 1e-6 of 1";
        throw InvalidPoint(os.str());
      }
      return Point(v / norm);
    }
    case SpaceKind::spd: {
      const Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(v.data(), param_, param_);
      const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
      if (asym > kSymmetryTolerance) throw InvalidPoint(name() + ": matrix is not symmetric");
      const Eigen::MatrixXd s = 0.5 * (m + m.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
      if (!(es.eigenvalues().minCoeff() > 0.0)) {
        std::ostringstream os;
        os << name() << ": smallest eigenvalue " << es.eigenvalues().minCoeff() << " is not positive";
        throw InvalidPoint(os.str());
      }
      return spd::from_matrix(s);
    }
    case SpaceKind::spider3: {
      const double r = v[0], b = v[1];
      if (r < 0.0) throw InvalidPoint("spider3: radius must be non-negative");
      if (b != std::round(b) || b < 1.0 || b > 3.0) throw InvalidPoint("spider3: branch must be 1, 2 or 3");
      return spider::make(r, static_cast<int>(b));
    }
    case SpaceKind::product: {
      Eigen::VectorXd out(point_size());
      Eigen::Index off = 0;
      for (const auto& c : components_) {
        const int ps = c.point_size();
        out.segment(off, ps) = c.validate(raw.subspan(static_cast<std::size_t>(off), static_cast<std::size_t>(ps))).values;
        off += ps;
      }
      return Point(out);
    }
  }
  return Point(v);
}

// ---------------------------------------------------------------- helpers

namespace spd {

Eigen::MatrixXd as_matrix(const Point& p, int k) {
  return Eigen::Map<const Eigen::MatrixXd>(p.values.data(), k, k);
}

Eigen::MatrixXd as_matrix(const Tangent& v, int k) {
  return Eigen::Map<const Eigen::MatrixXd>(v.values.data(), k, k);
}

Point from_matrix(const Eigen::MatrixXd& m) {
  return Point(Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()));
}

}  // namespace spd

namespace spider {

Point make(double radius, int branch) {
  if (radius == 0.0) branch = 1;
  return Point(Eigen::Vector2d(radius, branch));
}

}  // namespace spider

// ---------------------------------------------------------------- matrices

DistanceMatrix DistanceMatrix::transposed() const {
  DistanceMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DistanceMatrix DistanceMatrix::gather(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
  DistanceMatrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = data_.data() + rows[i] * cols_;
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = src[cols[j]];
  }
  return out;
}

DistanceMatrix pairwise_distances(const Space& space, std::span<const Point> rows, std::span<const Point> cols) {
  DistanceMatrix out(rows.size(), cols.size());
  const auto nr = static_cast<std::ptrdiff_t>(rows.size());
  const bool prepared = space.kind() == SpaceKind::spd;
  for (const auto& p : cols) {
    if (p.values.size() != space.point_size()) throw DimensionMismatch(space.name() + ": point has wrong size");
  }

  parallel_for(nr, [&](std::ptrdiff_t ii) {
    const auto i = static_cast<std::size_t>(ii);
    const Point& x = rows[i];
    if (prepared) {
      const Eigen::MatrixXd linv = inverse_cholesky(spd::as_matrix(x, space.param()));
      for (std::size_t j = 0; j < cols.size(); ++j) {
        out(i, j) = (x.values == cols[j].values) ? 0.0 : spd_distance_prepared(linv, cols[j].values.data(), space.param());
      }
    } else {
      for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = space.distance(x, cols[j]);
    }
  }, nr * static_cast<std::ptrdiff_t>(cols.size()) > 4096);
  return out;
}

}  // namespace mhd
