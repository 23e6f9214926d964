#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rdsopt/manifold.hpp"

namespace rdsopt {

inline constexpr double kDefaultDropTol = 1e-12;

/// Projections P_x(+-e_i) of the ambient coordinate basis, near-zero ones
/// dropped. `slots[j]` names the generator of `vectors[j]`: i for +e_i and
/// n + i for -e_i.
struct SpanningBasis {
  Point base;
  std::vector<TangentVector> vectors;
  std::vector<Index> slots;
  double measured_b = 0.0;
  double drop_tol = kDefaultDropTol;

  std::size_t size() const { return vectors.size(); }
};

SpanningBasis spanning_basis(const Manifold& m, const Point& x,
                             double drop_tol = kDefaultDropTol);

/// Lower estimate of the cosine measure: min over `trials` random unit
/// tangent r of max_j <r, p_j>.
double measure_tau(const Manifold& m, const SpanningBasis& basis, int trials,
                   std::uint64_t seed);

/// On-demand view of the projected coordinate basis. Solvers that stop
/// polling at the first success never pay for the remaining projections.
class LazyBasis {
 public:
  LazyBasis(const Manifold& m, const Point& x, double drop_tol);

  Index slot_count() const { return 2 * n_; }
  /// Projected direction for `slot`, or nullptr when it was dropped.
  const VectorXd* direction(Index slot);
  /// Slots that survive the drop test, in polling order. Forces every
  /// projection.
  std::vector<Index> active_slots();

 private:
  const Manifold* m_;
  const Point* x_;
  double drop_tol_;
  Index n_;
  std::vector<std::optional<VectorXd>> plus_;
  std::vector<VectorXd> minus_;
  std::vector<char> minus_ready_;
};

/// Deterministic unit-norm ambient sequence d_bar_k keyed on (seed, k).
class DenseDirectionStream {
 public:
  DenseDirectionStream(std::uint64_t seed, Index ambient_dim,
                       double drop_tol = kDefaultDropTol);

  VectorXd ambient_direction(std::uint64_t k) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  Index ambient_dim() const { return ambient_dim_; }
  double drop_tol() const { return drop_tol_; }

  /// Emits d_bar_{counter} and advances.
  VectorXd next_ambient() { return ambient_direction(counter_++); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  Index ambient_dim_;
  double drop_tol_;
};

/// P_x(dbar) scaled to unit Riemannian norm; zero when ||P_x(dbar)|| <= drop_tol.
TangentVector normalized_projection(const Manifold& m, const Point& x, const VectorXd& dbar,
                                    double drop_tol = kDefaultDropTol);

/// P_x(d_bar_k) scaled to unit Riemannian norm, or zero if the projection
/// is negligible.
TangentVector dense_direction(DenseDirectionStream& stream, const Manifold& m,
                              const Point& x);

}  // namespace rdsopt
