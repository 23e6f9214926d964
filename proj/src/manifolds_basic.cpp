// Sphere, Euclidean, Stiefel / SO(d), SPD and positive simplex.
#include <algorithm>
#include <cmath>
#include <limits>

#include "rdsopt/manifold.hpp"

namespace rdsopt {

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidDimension, msg);
}

VectorXd flatten(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

class Sphere final : public Manifold {
 public:
  Sphere(Index n, double tol) : Manifold(n, n - 1, tol) {
    require(n >= 1, "sphere dimension must be >= 1");
  }

  std::string kind() const override { return "sphere"; }
  std::string describe() const override {
    return "sphere(" + std::to_string(ambient_dim()) + ")";
  }

  VectorXd project(const Point& x, const VectorXd& v) const override {
    return v - x.coords.dot(v) * x.coords;
  }

  Point retract(const Point& x, const VectorXd& d) const override {
    VectorXd y = x.coords + d;
    y /= y.norm();
    return Point{std::move(y), std::nullopt};
  }

  double residual(const VectorXd& a) const override { return std::abs(a.norm() - 1.0); }

  double tangency_residual(const Point& x, const VectorXd& v) const override {
    return std::abs(x.coords.dot(v));
  }

  Point sample(Rng& rng) const override {
    VectorXd v;
    do {
      v = random_normal(rng, ambient_dim());
    } while (v.norm() == 0.0);
    return Point{v / v.norm(), std::nullopt};
  }
};

class Euclidean final : public Manifold {
 public:
  Euclidean(Index n, double tol) : Manifold(n, n, tol) {
    require(n >= 1, "euclidean dimension must be >= 1");
  }

  std::string kind() const override { return "euclidean"; }
  std::string describe() const override {
    return "euclidean(" + std::to_string(ambient_dim()) + ")";
  }
  VectorXd project(const Point&, const VectorXd& v) const override { return v; }
  Point retract(const Point& x, const VectorXd& d) const override {
    return Point{x.coords + d, std::nullopt};
  }
  double residual(const VectorXd& a) const override { return a.allFinite() ? 0.0 : 1.0; }
  Point sample(Rng& rng) const override {
    return Point{random_normal(rng, ambient_dim()), std::nullopt};
  }
};

/// St(n,p) = {X : X^T X = I}; with `special`, SO(n) (p = n, det X = +1).
class Stiefel final : public Manifold {
 public:
  Stiefel(Index n, Index p, bool special, double tol)
      : Manifold(n * p, special ? n * (n - 1) / 2 : n * p - p * (p + 1) / 2, tol),
        n_(n),
        p_(p),
        special_(special) {
    require(n >= 1 && p >= 1 && p <= n, "stiefel requires 1 <= p <= n");
  }

  std::string kind() const override { return special_ ? "so" : "stiefel"; }
  std::string describe() const override {
    if (special_) return "so(" + std::to_string(n_) + ")";
    return "stiefel(" + std::to_string(n_) + "," + std::to_string(p_) + ")";
  }

  VectorXd project(const Point& x, const VectorXd& v) const override {
    ConstMap X(x.coords.data(), n_, p_);
    ConstMap V(v.data(), n_, p_);
    const MatrixXd xtv = X.transpose() * V;
    if (special_) {
      // X * skew(X^T V)
      return flatten(X * (0.5 * (xtv - xtv.transpose())));
    }
    return flatten(V - X * (0.5 * (xtv + xtv.transpose())));
  }

  Point retract(const Point& x, const VectorXd& d) const override {
    ConstMap X(x.coords.data(), n_, p_);
    ConstMap D(d.data(), n_, p_);
    MatrixXd q = qf_positive(X + D);
    if (special_ && q.determinant() < 0.0) {
      // Only reachable through non-tangent input; keep the iterate in SO(d).
      q.col(0) = -q.col(0);
    }
    return Point{flatten(q), std::nullopt};
  }

  double residual(const VectorXd& a) const override {
    ConstMap A(a.data(), n_, p_);
    double r = (A.transpose() * A - MatrixXd::Identity(p_, p_)).norm();
    if (special_) r += std::abs(A.determinant() - 1.0);
    return r;
  }

  double tangency_residual(const Point& x, const VectorXd& v) const override {
    ConstMap X(x.coords.data(), n_, p_);
    ConstMap V(v.data(), n_, p_);
    const MatrixXd xtv = X.transpose() * V;
    if (special_) {
      // v = X S with S skew  <=>  X^T v + (X^T v)^T = 0 for square orthogonal X
      return (xtv + xtv.transpose()).norm() * 0.5;
    }
    return (0.5 * (xtv + xtv.transpose())).norm();
  }

  Point sample(Rng& rng) const override {
    MatrixXd q = qf_positive(random_normal(rng, n_, p_));
    if (special_ && q.determinant() < 0.0) q.col(0) = -q.col(0);
    return Point{flatten(q), std::nullopt};
  }

 private:
  Index n_;
  Index p_;
  bool special_;
};

/// Symmetric positive definite d x d matrices, affine-invariant metric.
class Spd final : public Manifold {
 public:
  Spd(Index d, double tol) : Manifold(d * d, d * (d + 1) / 2, tol), d_(d) {
    require(d >= 1, "spd dimension must be >= 1");
  }

  std::string kind() const override { return "spd"; }
  std::string describe() const override { return "spd(" + std::to_string(d_) + ")"; }

  VectorXd project(const Point&, const VectorXd& v) const override {
    ConstMap V(v.data(), d_, d_);
    return flatten(0.5 * (V + V.transpose()));
  }

  Point retract(const Point& x, const VectorXd& d) const override {
    ConstMap X(x.coords.data(), d_, d_);
    ConstMap D(d.data(), d_, d_);
    const MatrixXd xinv_d = Eigen::LLT<MatrixXd>(X).solve(D);
    MatrixXd y = X + D + 0.5 * D * xinv_d;
    y = 0.5 * (y + y.transpose());
    return Point{flatten(y), std::nullopt};
  }

  double inner(const Point& x, const VectorXd& u, const VectorXd& v) const override {
    ConstMap X(x.coords.data(), d_, d_);
    Eigen::LLT<MatrixXd> llt(X);
    const MatrixXd a = llt.solve(ConstMap(u.data(), d_, d_));
    const MatrixXd b = llt.solve(ConstMap(v.data(), d_, d_));
    return (a.array() * b.transpose().array()).sum();
  }

  double residual(const VectorXd& a) const override {
    ConstMap A(a.data(), d_, d_);
    const double asym = (A - A.transpose()).norm();
    const MatrixXd s = 0.5 * (A + A.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(s, Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .minCoeff();
    return asym + (lmin > 0.0 ? 0.0 : 1.0 - lmin);
  }

  double tangency_residual(const Point&, const VectorXd& v) const override {
    ConstMap V(v.data(), d_, d_);
    return (0.5 * (V - V.transpose())).norm();
  }

  Point sample(Rng& rng) const override {
    const MatrixXd a = random_normal(rng, d_, d_);
    MatrixXd x = a * a.transpose() + MatrixXd::Identity(d_, d_);
    x = 0.5 * (x + x.transpose());
    return Point{flatten(x), std::nullopt};
  }

 private:
  Index d_;
};

/// Relative interior of the probability simplex with the Fisher metric.
class PositiveSimplex final : public Manifold {
 public:
  PositiveSimplex(Index k, double tol) : Manifold(k, k - 1, tol) {
    require(k >= 2, "simplex needs at least 2 weights");
  }

  std::string kind() const override { return "simplex"; }
  std::string describe() const override {
    return "simplex(" + std::to_string(ambient_dim()) + ")";
  }

  VectorXd project(const Point&, const VectorXd& v) const override {
    return v.array() - v.mean();
  }

  Point retract(const Point& x, const VectorXd& d) const override {
    const auto& w = x.coords;
    // w .* exp(d ./ w), normalized; evaluated in log space.
    VectorXd z = w.array().log() + d.array() / w.array();
    const double zmax = z.maxCoeff();
    VectorXd y = (z.array() - zmax).exp();
    y /= y.sum();
    // Guard against underflow to exactly zero.
    for (Index i = 0; i < y.size(); ++i)
      y(i) = std::max(y(i), std::numeric_limits<double>::min());
    return Point{std::move(y), std::nullopt};
  }

  double inner(const Point& x, const VectorXd& u, const VectorXd& v) const override {
    return (u.array() * v.array() / x.coords.array()).sum();
  }

  double residual(const VectorXd& a) const override {
    double r = std::abs(a.sum() - 1.0);
    for (Index i = 0; i < a.size(); ++i)
      if (!(a(i) > 0.0)) r += 1.0 + std::abs(a(i));
    return r;
  }

  double tangency_residual(const Point&, const VectorXd& v) const override {
    return std::abs(v.sum());
  }

  /// Distance to the boundary in the sup norm.
  double step_radius(const Point& x) const override { return x.coords.minCoeff(); }

  Point sample(Rng& rng) const override {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    VectorXd w(ambient_dim());
    for (Index i = 0; i < w.size(); ++i) {
      double u;
      do {
        u = uni(rng);
      } while (u == 0.0);
      w(i) = u;
    }
    return Point{w / w.sum(), std::nullopt};
  }
};

}  // namespace

ManifoldHandle make_sphere(Index n, double tol) { return std::make_shared<Sphere>(n, tol); }

ManifoldHandle make_euclidean(Index n, double tol) {
  return std::make_shared<Euclidean>(n, tol);
}

ManifoldHandle make_stiefel(Index n, Index p, double tol) {
  return std::make_shared<Stiefel>(n, p, false, tol);
}

ManifoldHandle make_special_orthogonal(Index d, double tol) {
  return std::make_shared<Stiefel>(d, d, true, tol);
}

ManifoldHandle make_spd(Index d, double tol) { return std::make_shared<Spd>(d, tol); }

ManifoldHandle make_simplex(Index k, double tol) {
  return std::make_shared<PositiveSimplex>(k, tol);
}

}  // namespace rdsopt
