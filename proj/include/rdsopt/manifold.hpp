#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdsopt/error.hpp"
#include "rdsopt/random.hpp"

namespace rdsopt {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Thin SVD-like storage X = u * diag(s) * v^T of a fixed-rank point.
struct LowRankFactors {
  MatrixXd u;  // m x r, orthonormal columns
  VectorXd s;  // r, positive
  MatrixXd v;  // h x r, orthonormal columns
};

/// A point on a manifold. Matrices are flattened column-major into
/// `coords`; fixed-rank points keep `coords` empty and carry `factors`.
struct Point {
  VectorXd coords;
  std::optional<LowRankFactors> factors;
};

/// Content hash of a point, used to tag tangent vectors with their base.
std::uint64_t fingerprint(const Point& x);

/// Ambient-coordinate vector tagged with the fingerprint of its base point.
struct TangentVector {
  VectorXd v;
  std::uint64_t base = 0;
};

/// Embedded Riemannian manifold. The raw interface works on ambient
/// Eigen vectors; the free functions below add the tangent-vector
/// bookkeeping and shape checks.
class Manifold {
 public:
  virtual ~Manifold() = default;

  /// Stable kind string ("sphere", "stiefel", ...).
  virtual std::string kind() const = 0;
  /// Kind with shape parameters, e.g. "stiefel(5,2)".
  virtual std::string describe() const = 0;

  Index ambient_dim() const { return ambient_dim_; }
  Index intrinsic_dim() const { return intrinsic_dim_; }
  double feasibility_tol() const { return tol_; }

  /// Orthogonal projection of an ambient vector onto T_x M.
  virtual VectorXd project(const Point& x, const VectorXd& v) const = 0;
  virtual Point retract(const Point& x, const VectorXd& d) const = 0;
  /// Riemannian metric; defaults to the ambient Euclidean one.
  virtual double inner(const Point& x, const VectorXd& u, const VectorXd& v) const;

  /// Distance-to-manifold diagnostic for an arbitrary ambient vector.
  virtual double residual(const VectorXd& a) const = 0;
  /// Same diagnostic for a stored point (checks factor structure too).
  virtual double point_residual(const Point& x) const { return residual(ambient(x)); }
  virtual double tangency_residual(const Point& x, const VectorXd& v) const;
  /// Radius of a tangent ball at x on which the retraction moves at most
  /// a fixed multiple of the step. Unbounded unless the manifold is open.
  virtual double step_radius(const Point&) const {
    return std::numeric_limits<double>::infinity();
  }

  Point random_point(std::uint64_t seed) const;
  virtual Point sample(Rng& rng) const = 0;

  virtual VectorXd ambient(const Point& x) const { return x.coords; }
  /// Point from ambient coordinates assumed to be (numerically) on M.
  virtual Point from_ambient(const VectorXd& a) const { return Point{a, std::nullopt}; }

  void check_ambient(const VectorXd& v, const char* what) const;

 protected:
  Manifold(Index ambient_dim, Index intrinsic_dim, double tol)
      : ambient_dim_(ambient_dim), intrinsic_dim_(intrinsic_dim), tol_(tol) {}

 private:
  Index ambient_dim_;
  Index intrinsic_dim_;
  double tol_;
};

using ManifoldHandle = std::shared_ptr<const Manifold>;

inline constexpr double kDefaultFeasibilityTol = 1e-10;

ManifoldHandle make_sphere(Index n, double tol = kDefaultFeasibilityTol);
ManifoldHandle make_product_spheres(const std::vector<Index>& dims,
                                    double tol = kDefaultFeasibilityTol);
ManifoldHandle make_stiefel(Index n, Index p, double tol = kDefaultFeasibilityTol);
ManifoldHandle make_special_orthogonal(Index d, double tol = kDefaultFeasibilityTol);
ManifoldHandle make_fixed_rank(Index m, Index h, Index r,
                               double tol = kDefaultFeasibilityTol);
ManifoldHandle make_spd(Index d, double tol = kDefaultFeasibilityTol);
ManifoldHandle make_simplex(Index k, double tol = kDefaultFeasibilityTol);
ManifoldHandle make_euclidean(Index n, double tol = kDefaultFeasibilityTol);
ManifoldHandle make_product(std::vector<ManifoldHandle> components,
                            double tol = kDefaultFeasibilityTol);

/// Inverse of Manifold::describe(), e.g. "product(sphere(3),spd(2))".
ManifoldHandle parse_manifold(const std::string& text);

/// Component access for product manifolds (nullptr-free; throws otherwise).
struct ProductLayout {
  std::vector<ManifoldHandle> components;
  std::vector<Index> offsets;
};
const ProductLayout* product_layout(const Manifold& m);
Point component_point(const ProductLayout& layout, const Point& x, std::size_t i);

// Typed operations.
TangentVector project_tangent(const Manifold& m, const Point& x, const VectorXd& v);
Point retract(const Manifold& m, const Point& x, const TangentVector& d);
double inner(const Manifold& m, const Point& x, const TangentVector& u,
             const TangentVector& v);
double norm(const Manifold& m, const Point& x, const TangentVector& u);
double constraint_residual(const Manifold& m, const VectorXd& a);
Point random_point(const Manifold& m, std::uint64_t seed);
TangentVector zero_tangent(const Manifold& m, const Point& x);

/// Seeded random tangent direction with unit Riemannian norm.
VectorXd random_unit_tangent(const Manifold& m, const Point& x, Rng& rng);

/// Q factor of a thin QR with the R diagonal forced positive.
MatrixXd qf_positive(const MatrixXd& a);

}  // namespace rdsopt
