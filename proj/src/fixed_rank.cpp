// Manifold of m x h matrices of rank r, embedded in R^{m x h}.
#include <algorithm>
#include <cmath>

#include "rdsopt/manifold.hpp"

namespace rdsopt {

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;

VectorXd flatten(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

/// Thin Q and R of a (possibly wide or rank-deficient) matrix; Q always has
/// orthonormal columns.
void thin_qr(const MatrixXd& a, MatrixXd& q, MatrixXd& r) {
  const Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<MatrixXd> qr(a);
  q = qr.householderQ() * MatrixXd::Identity(a.rows(), k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

class FixedRank final : public Manifold {
 public:
  FixedRank(Index m, Index h, Index r, double tol)
      : Manifold(m * h, (m + h - r) * r, tol), m_(m), h_(h), r_(r) {
    if (m < 1 || h < 1 || r < 1 || r > std::min(m, h))
      throw Error(ErrorCode::InvalidDimension, "fixed-rank requires 1 <= r <= min(m,h)");
  }

  std::string kind() const override { return "fixed-rank"; }
  std::string describe() const override {
    return "fixed-rank(" + std::to_string(m_) + "," + std::to_string(h_) + "," +
           std::to_string(r_) + ")";
  }

  VectorXd project(const Point& x, const VectorXd& v) const override {
    const auto& f = factors(x);
    ConstMap Z(v.data(), m_, h_);
    const MatrixXd zv = Z * f.v;                       // m x r
    const MatrixXd utz = f.u.transpose() * Z;          // r x h
    const MatrixXd utzv = f.u.transpose() * zv;        // r x r
    const MatrixXd p = f.u * utz + zv * f.v.transpose() - f.u * utzv * f.v.transpose();
    return flatten(p);
  }

  Point retract(const Point& x, const VectorXd& d) const override {
    const auto& f = factors(x);
    ConstMap D(d.data(), m_, h_);
    // Tangent parametrization D = U M V^T + Up V^T + U Vp^T.
    const MatrixXd dv = D * f.v;
    const MatrixXd mcore = f.u.transpose() * dv;
    const MatrixXd up = dv - f.u * mcore;
    const MatrixXd vp = D.transpose() * f.u - f.v * mcore.transpose();

    // X + D = [U Up] [[S + M, I], [I, 0]] [V Vp]^T, reduced to a 2r x 2r core.
    MatrixXd left(m_, 2 * r_), right(h_, 2 * r_);
    left << f.u, up;
    right << f.v, vp;
    MatrixXd c = MatrixXd::Zero(2 * r_, 2 * r_);
    c.topLeftCorner(r_, r_) = mcore;
    c.topLeftCorner(r_, r_).diagonal() += f.s;
    c.topRightCorner(r_, r_).setIdentity();
    c.bottomLeftCorner(r_, r_).setIdentity();

    MatrixXd ql, rl, qr, rr;
    thin_qr(left, ql, rl);
    thin_qr(right, qr, rr);
    const MatrixXd core = rl * c * rr.transpose();
    Eigen::JacobiSVD<MatrixXd> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);

    LowRankFactors out;
    out.u = ql * svd.matrixU().leftCols(r_);
    out.v = qr * svd.matrixV().leftCols(r_);
    out.s = svd.singularValues().head(r_);
    for (Index i = 0; i < r_; ++i) out.s(i) = std::max(out.s(i), feasibility_tol());
    return Point{VectorXd(), std::move(out)};
  }

  double residual(const VectorXd& a) const override {
    ConstMap A(a.data(), m_, h_);
    const VectorXd sv = Eigen::JacobiSVD<MatrixXd>(A).singularValues();
    const double tail = sv.tail(sv.size() - r_).norm();
    return tail + (sv(r_ - 1) > 0.0 ? 0.0 : 1.0);
  }

  double point_residual(const Point& x) const override {
    if (!x.factors) return residual(x.coords);
    const auto& f = *x.factors;
    if (f.u.rows() != m_ || f.u.cols() != r_ || f.v.rows() != h_ || f.v.cols() != r_ ||
        f.s.size() != r_)
      return 1.0;
    double r = (f.u.transpose() * f.u - MatrixXd::Identity(r_, r_)).norm() +
               (f.v.transpose() * f.v - MatrixXd::Identity(r_, r_)).norm();
    if (!(f.s.minCoeff() > 0.0)) r += 1.0;
    return r;
  }

  Point sample(Rng& rng) const override {
    LowRankFactors f;
    f.u = qf_positive(random_normal(rng, m_, r_));
    f.v = qf_positive(random_normal(rng, h_, r_));
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    f.s.resize(r_);
    for (Index i = 0; i < r_; ++i) f.s(i) = uni(rng);
    std::sort(f.s.data(), f.s.data() + r_, std::greater<>());
    return Point{VectorXd(), std::move(f)};
  }

  VectorXd ambient(const Point& x) const override {
    const auto& f = factors(x);
    return flatten(f.u * f.s.asDiagonal() * f.v.transpose());
  }

  Point from_ambient(const VectorXd& a) const override {
    ConstMap A(a.data(), m_, h_);
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    LowRankFactors f;
    f.u = svd.matrixU().leftCols(r_);
    f.v = svd.matrixV().leftCols(r_);
    f.s = svd.singularValues().head(r_);
    for (Index i = 0; i < r_; ++i) f.s(i) = std::max(f.s(i), feasibility_tol());
    return Point{VectorXd(), std::move(f)};
  }

 private:
  const LowRankFactors& factors(const Point& x) const {
    if (!x.factors) throw Error(ErrorCode::InvalidShape, describe() + ": point is not factored");
    return *x.factors;
  }

  Index m_;
  Index h_;
  Index r_;
};

}  // namespace

ManifoldHandle make_fixed_rank(Index m, Index h, Index r, double tol) {
  return std::make_shared<FixedRank>(m, h, r, tol);
}

}  // namespace rdsopt
