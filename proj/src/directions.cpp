#include "rdsopt/directions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rdsopt {

LazyBasis::LazyBasis(const Manifold& m, const Point& x, double drop_tol)
    : m_(&m),
      x_(&x),
      drop_tol_(drop_tol),
      n_(m.ambient_dim()),
      plus_(static_cast<std::size_t>(n_)),
      minus_(static_cast<std::size_t>(n_)),
      minus_ready_(static_cast<std::size_t>(n_), 0) {}

const VectorXd* LazyBasis::direction(Index slot) {
  const Index i = slot % n_;
  auto& p = plus_[static_cast<std::size_t>(i)];
  if (!p) p = m_->project(*x_, VectorXd::Unit(n_, i));
  if (p->norm() <= drop_tol_) return nullptr;
  if (slot < n_) return &*p;
  auto k = static_cast<std::size_t>(i);
  if (!minus_ready_[k]) {
    minus_[k] = -*p;
    minus_ready_[k] = 1;
  }
  return &minus_[k];
}

std::vector<Index> LazyBasis::active_slots() {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(2 * n_));
  for (Index s = 0; s < 2 * n_; ++s)
    if (direction(s) != nullptr) out.push_back(s);
  return out;
}

SpanningBasis spanning_basis(const Manifold& m, const Point& x, double drop_tol) {
  if (!(drop_tol > 0.0 && drop_tol < 1.0))
    throw Error(ErrorCode::InvalidConfig, "spanning_basis: drop_tol must lie in (0,1)");
  SpanningBasis b;
  b.base = x;
  b.drop_tol = drop_tol;
  const auto tag = fingerprint(x);
  LazyBasis lazy(m, x, drop_tol);
  for (Index s = 0; s < lazy.slot_count(); ++s) {
    if (const VectorXd* v = lazy.direction(s)) {
      b.vectors.push_back(TangentVector{*v, tag});
      b.slots.push_back(s);
      b.measured_b = std::max(b.measured_b, v->norm());
    }
  }
  if (b.vectors.empty())
    throw Error(ErrorCode::DegenerateBasis,
                "every projected coordinate direction vanished on " + m.describe());
  return b;
}

double measure_tau(const Manifold& m, const SpanningBasis& basis, int trials,
                   std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::InvalidConfig, "measure_tau: trials must be >= 1");
  Rng rng(mix64(seed));
  double tau = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const VectorXd r = random_unit_tangent(m, basis.base, rng);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : basis.vectors) best = std::max(best, m.inner(basis.base, r, p.v));
    tau = std::min(tau, best);
  }
  return tau;
}

DenseDirectionStream::DenseDirectionStream(std::uint64_t seed, Index ambient_dim,
                                           double drop_tol)
    : seed_(seed), ambient_dim_(ambient_dim), drop_tol_(drop_tol) {
  if (ambient_dim < 1) throw Error(ErrorCode::InvalidShape, "dense stream: empty ambient space");
}

VectorXd DenseDirectionStream::ambient_direction(std::uint64_t k) const {
  Rng rng(combine_seed(seed_, k));
  for (;;) {
    VectorXd v = random_normal(rng, ambient_dim_);
    const double n = v.norm();
    if (n > 0.0) return v / n;
  }
}

TangentVector normalized_projection(const Manifold& m, const Point& x, const VectorXd& dbar,
                                    double drop_tol) {
  m.check_ambient(dbar, "normalized_projection");
  const VectorXd p = m.project(x, dbar);
  TangentVector out{VectorXd::Zero(m.ambient_dim()), fingerprint(x)};
  if (p.norm() <= drop_tol) return out;
  const double rn = std::sqrt(m.inner(x, p, p));
  if (!(rn > 0.0)) return out;
  out.v = p / rn;
  return out;
}

TangentVector dense_direction(DenseDirectionStream& stream, const Manifold& m,
                              const Point& x) {
  if (stream.ambient_dim() != m.ambient_dim())
    throw Error(ErrorCode::InvalidShape, "dense_direction: stream dimension mismatch");
  return normalized_projection(m, x, stream.next_ambient(), stream.drop_tol());
}

}  // namespace rdsopt
