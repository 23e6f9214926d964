#include "rdsopt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/MatrixFunctions>

namespace rdsopt {

namespace {

using ConstMap = Eigen::Map<const MatrixXd>;
constexpr double kInf = std::numeric_limits<double>::infinity();

VectorXd flatten(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

ConstMap block(const Point& x, Index offset, Index rows, Index cols) {
  return ConstMap(x.coords.data() + offset, rows, cols);
}

Index ceil_div(Index a, Index b) { return (a + b - 1) / b; }

}  // namespace

Problem::Problem(std::string name, ManifoldHandle manifold, Index n_p, std::uint64_t seed,
                 bool smooth)
    : name_(std::move(name)),
      manifold_(std::move(manifold)),
      n_p_(n_p),
      seed_(seed),
      smooth_(smooth),
      start_(manifold_->random_point(seed)) {}

VectorXd Problem::euclidean_gradient(const Point&) const {
  throw Error(ErrorCode::Unsupported, name_ + " has no analytic gradient (nonsmooth)");
}

double smooth_l1(const MatrixXd& c, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidConfig, "smooth_l1: eps must be positive");
  return (c.array().square() + eps * eps).sqrt().sum();
}

namespace {

// ---------------------------------------------------------------------------

class LargestEig final : public Problem {
 public:
  LargestEig(MatrixXd a, Index n_p, std::uint64_t seed)
      : Problem("largest-eig", make_sphere(a.rows()), n_p, seed, true), a_(std::move(a)) {
    set_known_opt(-Eigen::SelfAdjointEigenSolver<MatrixXd>(a_).eigenvalues().maxCoeff());
  }
  double value(const Point& x) const override { return -x.coords.dot(a_ * x.coords); }
  VectorXd euclidean_gradient(const Point& x) const override {
    return -(a_ + a_.transpose()) * x.coords;
  }

 private:
  MatrixXd a_;
};

class LargestSv final : public Problem {
 public:
  LargestSv(MatrixXd a, Index n_p, std::uint64_t seed)
      : Problem("largest-sv", make_product_spheres({a.rows(), a.cols()}), n_p, seed, true),
        a_(std::move(a)) {
    set_known_opt(-Eigen::JacobiSVD<MatrixXd>(a_).singularValues()(0));
  }
  double value(const Point& p) const override {
    return -x(p).dot(a_ * y(p));
  }
  VectorXd euclidean_gradient(const Point& p) const override {
    VectorXd g(a_.rows() + a_.cols());
    g << -(a_ * y(p)), -(a_.transpose() * x(p));
    return g;
  }

 private:
  VectorXd x(const Point& p) const { return p.coords.head(a_.rows()); }
  VectorXd y(const Point& p) const { return p.coords.tail(a_.cols()); }
  MatrixXd a_;
};

class TopSv final : public Problem {
 public:
  TopSv(MatrixXd a, Index r, Index n_p, std::uint64_t seed)
      : Problem("top-sv",
                make_product({make_stiefel(a.rows(), r), make_stiefel(a.cols(), r)}), n_p,
                seed, true),
        a_(std::move(a)),
        r_(r) {
    set_known_opt(-Eigen::JacobiSVD<MatrixXd>(a_).singularValues().head(r_).sum());
  }
  double value(const Point& p) const override {
    return -(x(p).transpose() * a_ * y(p)).trace();
  }
  VectorXd euclidean_gradient(const Point& p) const override {
    VectorXd g(p.coords.size());
    g << flatten(-(a_ * y(p))), flatten(-(a_.transpose() * x(p)));
    return g;
  }

 private:
  ConstMap x(const Point& p) const { return block(p, 0, a_.rows(), r_); }
  ConstMap y(const Point& p) const { return block(p, a_.rows() * r_, a_.cols(), r_); }
  MatrixXd a_;
  Index r_;
};

/// min ||Y - D C||_F^2 + lambda ||C||_{1,eps}, unit-norm columns of D.
class DictLearning final : public Problem {
 public:
  static constexpr double kLambda = 0.01;
  static constexpr double kEps = 0.001;

  DictLearning(MatrixXd y, Index atoms, Index n_p, std::uint64_t seed)
      : Problem("dict-learning", manifold_for(y.rows(), atoms, y.cols()), n_p, seed, true),
        y_(std::move(y)),
        atoms_(atoms) {}

  static ManifoldHandle manifold_for(Index d, Index atoms, Index k) {
    return make_product({make_product_spheres(std::vector<Index>(atoms, d)),
                         make_euclidean(atoms * k)});
  }

  double value(const Point& p) const override {
    const auto dm = dict(p);
    const auto c = codes(p);
    return (y_ - dm * c).squaredNorm() + kLambda * smooth_l1(c, kEps);
  }

  VectorXd euclidean_gradient(const Point& p) const override {
    const auto dm = dict(p);
    const auto c = codes(p);
    const MatrixXd resid = y_ - dm * c;
    const MatrixXd gc = -2.0 * dm.transpose() * resid +
                        kLambda * (c.array() / (c.array().square() + kEps * kEps).sqrt()).matrix();
    VectorXd g(p.coords.size());
    g << flatten(-2.0 * resid * c.transpose()), flatten(gc);
    return g;
  }

 private:
  ConstMap dict(const Point& p) const { return block(p, 0, y_.rows(), atoms_); }
  ConstMap codes(const Point& p) const {
    return block(p, y_.rows() * atoms_, atoms_, y_.cols());
  }
  MatrixXd y_;
  Index atoms_;
};

/// Two rotations, one noisy relative measurement H ~ R1 R2^T.
class SyncRotations final : public Problem {
 public:
  SyncRotations(MatrixXd h, Index n_p, std::uint64_t seed)
      : Problem("sync-rotations",
                make_product({make_special_orthogonal(h.rows()),
                              make_special_orthogonal(h.rows())}),
                n_p, seed, true),
        h_(std::move(h)) {
    set_known_opt(0.0);
  }
  double value(const Point& p) const override { return (r1(p) - h_ * r2(p)).squaredNorm(); }
  VectorXd euclidean_gradient(const Point& p) const override {
    const MatrixXd e = r1(p) - h_ * r2(p);
    VectorXd g(p.coords.size());
    g << flatten(2.0 * e), flatten(-2.0 * h_.transpose() * e);
    return g;
  }

 private:
  Index d() const { return h_.rows(); }
  ConstMap r1(const Point& p) const { return block(p, 0, d(), d()); }
  ConstMap r2(const Point& p) const { return block(p, d() * d(), d(), d()); }
  MatrixXd h_;
};

class MatrixCompletion final : public Problem {
 public:
  MatrixCompletion(MatrixXd m, const MatrixXd& mask, Index rank, bool nonsmooth, Index n_p,
                   std::uint64_t seed)
      : Problem(nonsmooth ? "nonsmooth-mc" : "matrix-completion",
                make_fixed_rank(m.rows(), m.cols(), rank), n_p, seed, !nonsmooth),
        m_(std::move(m)),
        nonsmooth_(nonsmooth) {
    if (mask.rows() != m_.rows() || mask.cols() != m_.cols())
      throw Error(ErrorCode::InvalidShape, "matrix completion: mask shape mismatch");
    for (Index j = 0; j < m_.cols(); ++j)
      for (Index i = 0; i < m_.rows(); ++i)
        if (mask(i, j) != 0.0) omega_.emplace_back(i, j);
    set_known_opt(0.0);
  }

  double value(const Point& p) const override {
    double s = 0.0;
    if (p.factors) {
      const auto& f = *p.factors;
      const MatrixXd us = f.u * f.s.asDiagonal();
      for (const auto& [i, j] : omega_) {
        const double r = us.row(i).dot(f.v.row(j)) - m_(i, j);
        s += nonsmooth_ ? std::abs(r) : r * r;
      }
    } else {
      const ConstMap x(p.coords.data(), m_.rows(), m_.cols());
      for (const auto& [i, j] : omega_) {
        const double r = x(i, j) - m_(i, j);
        s += nonsmooth_ ? std::abs(r) : r * r;
      }
    }
    return s;
  }

  VectorXd euclidean_gradient(const Point& p) const override {
    if (nonsmooth_) return Problem::euclidean_gradient(p);
    const VectorXd x = manifold()->ambient(p);
    const ConstMap xm(x.data(), m_.rows(), m_.cols());
    MatrixXd g = MatrixXd::Zero(m_.rows(), m_.cols());
    for (const auto& [i, j] : omega_) g(i, j) = 2.0 * (xm(i, j) - m_(i, j));
    return flatten(g);
  }

 private:
  MatrixXd m_;
  bool nonsmooth_;
  std::vector<std::pair<Index, Index>> omega_;
};

/// Two-component GMM in the augmented (mean-free) reformulation:
/// observations y = (x; 1), variables S_1, S_2 in SPD(q) and w in the simplex.
class Gmm final : public Problem {
 public:
  Gmm(MatrixXd obs, Index n_p, std::uint64_t seed)
      : Problem("gmm",
                make_product({make_spd(obs.rows()), make_spd(obs.rows()), make_simplex(2)}),
                n_p, seed, true),
        obs_(std::move(obs)) {}

  double value(const Point& p) const override {
    Component c[2];
    if (!factor(p, c)) return kInf;
    const VectorXd w = weights(p);
    double total = 0.0;
    for (Index i = 0; i < obs_.cols(); ++i) {
      const double a = std::log(w(0)) + c[0].log_density(obs_.col(i));
      const double b = std::log(w(1)) + c[1].log_density(obs_.col(i));
      const double m = std::max(a, b);
      total -= m + std::log(std::exp(a - m) + std::exp(b - m));
    }
    return total;
  }

  VectorXd euclidean_gradient(const Point& p) const override {
    Component c[2];
    if (!factor(p, c)) throw Error(ErrorCode::Unsupported, "gmm gradient outside SPD cone");
    const VectorXd w = weights(p);
    const Index q = obs_.rows();
    MatrixXd gs[2] = {MatrixXd::Zero(q, q), MatrixXd::Zero(q, q)};
    VectorXd gw = VectorXd::Zero(2);
    MatrixXd inv[2] = {c[0].llt.solve(MatrixXd::Identity(q, q)),
                       c[1].llt.solve(MatrixXd::Identity(q, q))};
    for (Index i = 0; i < obs_.cols(); ++i) {
      const VectorXd y = obs_.col(i);
      double lp[2];
      for (int k = 0; k < 2; ++k) lp[k] = std::log(w(k)) + c[k].log_density(y);
      const double m = std::max(lp[0], lp[1]);
      const double z = std::exp(lp[0] - m) + std::exp(lp[1] - m);
      for (int k = 0; k < 2; ++k) {
        const double resp = std::exp(lp[k] - m) / z;
        const VectorXd sy = inv[k] * y;
        gs[k] -= resp * 0.5 * (sy * sy.transpose() - inv[k]);
        gw(k) -= resp / w(k);
      }
    }
    VectorXd g(p.coords.size());
    g << flatten(gs[0]), flatten(gs[1]), gw;
    return g;
  }

 private:
  struct Component {
    Eigen::LLT<MatrixXd> llt;
    double log_norm = 0.0;
    double log_density(const VectorXd& y) const {
      return log_norm - 0.5 * y.dot(llt.solve(y));
    }
  };

  bool factor(const Point& p, Component* c) const {
    const Index q = obs_.rows();
    for (int k = 0; k < 2; ++k) {
      const auto s = block(p, k * q * q, q, q);
      c[k].llt.compute(0.5 * (s + s.transpose()));
      if (c[k].llt.info() != Eigen::Success) return false;
      const double logdet = 2.0 * c[k].llt.matrixLLT().diagonal().array().log().sum();
      // log of sqrt(2 pi) e^{1/2} N(y; 0, S) without the quadratic term.
      c[k].log_norm = 0.5 * std::log(2.0 * M_PI) + 0.5 -
                      0.5 * static_cast<double>(q) * std::log(2.0 * M_PI) - 0.5 * logdet;
    }
    return weights(p).minCoeff() > 0.0;
  }

  VectorXd weights(const Point& p) const { return p.coords.tail(2); }

  MatrixXd obs_;
};

class Procrustes final : public Problem {
 public:
  Procrustes(MatrixXd a, MatrixXd b, Index n_p, std::uint64_t seed, bool planted)
      : Problem("procrustes", make_stiefel(a.cols(), b.cols()), n_p, seed, true),
        a_(std::move(a)),
        b_(std::move(b)) {
    if (a_.rows() != b_.rows()) throw Error(ErrorCode::InvalidShape, "procrustes: row mismatch");
    if (planted) set_known_opt(0.0);
  }
  double value(const Point& p) const override { return (a_ * x(p) - b_).squaredNorm(); }
  VectorXd euclidean_gradient(const Point& p) const override {
    return flatten(2.0 * a_.transpose() * (a_ * x(p) - b_));
  }

 private:
  ConstMap x(const Point& p) const { return block(p, 0, a_.cols(), b_.cols()); }
  MatrixXd a_;
  MatrixXd b_;
};

class SparsestVector final : public Problem {
 public:
  SparsestVector(MatrixXd q, Index n_p, std::uint64_t seed)
      : Problem("sparsest-vector", make_sphere(q.cols()), n_p, seed, false), q_(std::move(q)) {}
  double value(const Point& p) const override { return (q_ * p.coords).lpNorm<1>(); }

 private:
  MatrixXd q_;
};

class Custom final : public Problem {
 public:
  Custom(std::string name, ManifoldHandle m, std::function<double(const Point&)> f, bool smooth,
         std::uint64_t seed, std::optional<Point> start)
      : Problem(std::move(name), m, m->ambient_dim(), seed, smooth), f_(std::move(f)) {
    if (start) set_start(std::move(*start));
  }
  double value(const Point& x) const override { return f_(x); }

 private:
  std::function<double(const Point&)> f_;
};

// ---------------------------------------------------------------------------
// Seeded payload generators. Shapes follow kShapeScheduleVersion.

Rng payload_rng(const std::string& name, Index n_p, std::uint64_t seed) {
  return Rng(combine_seed(combine_seed(stable_hash(name), static_cast<std::uint64_t>(n_p)), seed));
}

MatrixXd symmetric_normal(Rng& rng, Index n) {
  const MatrixXd b = random_normal(rng, n, n);
  return 0.5 * (b + b.transpose());
}

MatrixXd random_mask(Rng& rng, Index m, Index h, double density) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  MatrixXd mask(m, h);
  for (Index j = 0; j < h; ++j)
    for (Index i = 0; i < m; ++i) mask(i, j) = uni(rng) < density ? 1.0 : 0.0;
  if (mask.sum() == 0.0) mask(0, 0) = 1.0;
  return mask;
}

/// Exactly round(density * size) nonzeros with uniform(0,1) values.
MatrixXd sparse_uniform(Rng& rng, Index rows, Index cols, double density) {
  const Index total = rows * cols;
  const auto nnz = std::max<Index>(1, static_cast<Index>(std::lround(density * total)));
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates with the payload generator (std::shuffle's
  // algorithm is implementation-defined).
  for (Index i = 0; i < nnz; ++i) {
    std::uniform_int_distribution<Index> pick(i, total - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  MatrixXd c = MatrixXd::Zero(rows, cols);
  for (Index i = 0; i < nnz; ++i) c.data()[idx[static_cast<std::size_t>(i)]] = uni(rng);
  return c;
}

MatrixXd random_rotation(Rng& rng, Index d) {
  MatrixXd q = qf_positive(random_normal(rng, d, d));
  if (q.determinant() < 0.0) q.col(0) = -q.col(0);
  return q;
}

void mc_shape(Index n_p, Index& m, Index& h, Index& r) {
  m = std::max<Index>(2, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n_p)))));
  h = std::max<Index>(2, static_cast<Index>(std::lround(static_cast<double>(n_p) / m)));
  r = std::min(m, h) >= 3 ? 2 : 1;
}

ProblemHandle build_matrix_completion(Index n_p, std::uint64_t seed, bool nonsmooth) {
  Rng rng = payload_rng(nonsmooth ? "nonsmooth-mc" : "matrix-completion", n_p, seed);
  Index m, h, r;
  mc_shape(n_p, m, h, r);
  const MatrixXd u = qf_positive(random_normal(rng, m, r));
  const MatrixXd v = qf_positive(random_normal(rng, h, r));
  VectorXd s(r);
  std::uniform_real_distribution<double> uni(1.0, 2.0);
  for (Index i = 0; i < r; ++i) s(i) = uni(rng);
  const MatrixXd truth = u * s.asDiagonal() * v.transpose();
  const MatrixXd mask = random_mask(rng, m, h, 0.5);
  return std::make_shared<MatrixCompletion>(truth, mask, r, nonsmooth, n_p, seed);
}

}  // namespace

const std::vector<std::string>& smooth_problem_names() {
  static const std::vector<std::string> names{
      "largest-eig", "largest-sv", "top-sv",      "dict-learning",
      "sync-rotations", "matrix-completion", "gmm", "procrustes"};
  return names;
}

const std::vector<std::string>& nonsmooth_problem_names() {
  static const std::vector<std::string> names{"sparsest-vector", "nonsmooth-mc"};
  return names;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = [] {
    auto all = smooth_problem_names();
    for (const auto& n : nonsmooth_problem_names()) all.push_back(n);
    return all;
  }();
  return names;
}

ProblemHandle build_instance(const std::string& name, Index n_p, std::uint64_t seed) {
  const auto& names = problem_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw Error(ErrorCode::UnknownProblem, "unknown problem '" + name + "'");
  if (n_p < kMinProblemDim || n_p > kMaxProblemDim)
    throw Error(ErrorCode::InvalidDimension,
                name + ": n_p=" + std::to_string(n_p) + " outside [" +
                    std::to_string(kMinProblemDim) + "," + std::to_string(kMaxProblemDim) + "]");

  Rng rng = payload_rng(name, n_p, seed);

  if (name == "largest-eig") {
    return std::make_shared<LargestEig>(symmetric_normal(rng, n_p), n_p, seed);
  }
  if (name == "largest-sv") {
    const Index m = std::max<Index>(2, ceil_div(n_p, 2));
    const Index h = std::max<Index>(2, n_p / 2);
    return std::make_shared<LargestSv>(random_normal(rng, m, h), n_p, seed);
  }
  if (name == "top-sv") {
    Index r = 2, m = ceil_div(n_p, 4), h = n_p / 4;
    if (std::min(m, h) < 3) {
      r = 1;
      m = std::max<Index>(2, ceil_div(n_p, 2));
      h = std::max<Index>(2, n_p / 2);
    }
    return std::make_shared<TopSv>(random_normal(rng, m, h), r, n_p, seed);
  }
  if (name == "dict-learning") {
    const Index s = std::max<Index>(
        2, static_cast<Index>(std::lround(std::sqrt(static_cast<double>(n_p) / 3.0))));
    const Index d = s, atoms = s, k = 2 * s;
    MatrixXd dict = random_normal(rng, d, atoms);
    dict.colwise().normalize();
    const MatrixXd codes = sparse_uniform(rng, atoms, k, 0.3);
    return std::make_shared<DictLearning>(dict * codes, atoms, n_p, seed);
  }
  if (name == "sync-rotations") {
    const Index d = std::max<Index>(
        2, static_cast<Index>(std::lround(std::sqrt(static_cast<double>(n_p) / 2.0))));
    const MatrixXd r1 = random_rotation(rng, d);
    const MatrixXd r2 = random_rotation(rng, d);
    const MatrixXd b = random_normal(rng, d, d);
    const MatrixXd skew = 0.5 * (b - b.transpose());
    const MatrixXd noise = (0.1 * skew).exp();
    return std::make_shared<SyncRotations>(r1 * r2.transpose() * noise, n_p, seed);
  }
  if (name == "matrix-completion") return build_matrix_completion(n_p, seed, false);
  if (name == "nonsmooth-mc") return build_matrix_completion(n_p, seed, true);
  if (name == "gmm") {
    const Index q = std::max<Index>(
        2, static_cast<Index>(std::lround(std::sqrt(static_cast<double>(n_p - 2) / 2.0))));
    const Index d = q - 1;
    const Index count = 20 * q;
    MatrixXd obs(q, count);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    MatrixXd mean(d, 2);
    Eigen::LLT<MatrixXd> chol[2];
    for (int k = 0; k < 2; ++k) {
      mean.col(k) = 2.0 * random_normal(rng, d) / std::sqrt(static_cast<double>(d));
      const MatrixXd b = random_normal(rng, d, d);
      chol[k].compute(b * b.transpose() / static_cast<double>(d) +
                      0.5 * MatrixXd::Identity(d, d));
    }
    for (Index i = 0; i < count; ++i) {
      const int k = uni(rng) < 0.6 ? 0 : 1;
      const VectorXd z = random_normal(rng, d);
      obs.col(i).head(d) = mean.col(k) + chol[k].matrixL() * z;
      obs(d, i) = 1.0;
    }
    return std::make_shared<Gmm>(std::move(obs), n_p, seed);
  }
  if (name == "procrustes") {
    const Index p = 2;
    const Index n = std::max<Index>(p, static_cast<Index>(std::lround(n_p / 2.0)));
    const Index l = n + 5;
    const MatrixXd a = random_normal(rng, l, n);
    const MatrixXd planted = qf_positive(random_normal(rng, n, p));
    return std::make_shared<Procrustes>(a, a * planted, n_p, seed, true);
  }
  // sparsest-vector
  const MatrixXd q = qf_positive(random_normal(rng, 2 * n_p, n_p));
  return std::make_shared<SparsestVector>(q, n_p, seed);
}

ProblemHandle make_largest_eig(MatrixXd a, std::uint64_t seed) {
  if (a.rows() != a.cols() || !a.isApprox(a.transpose()))
    throw Error(ErrorCode::InvalidShape, "largest-eig: matrix must be square symmetric");
  const Index n = a.rows();
  return std::make_shared<LargestEig>(std::move(a), n, seed);
}

ProblemHandle make_sparsest_vector(MatrixXd q, std::uint64_t seed) {
  const Index n = q.cols();
  return std::make_shared<SparsestVector>(std::move(q), n, seed);
}

ProblemHandle make_matrix_completion(MatrixXd m, const MatrixXd& mask, Index rank,
                                     bool nonsmooth, std::uint64_t seed) {
  const Index n_p = m.size();
  return std::make_shared<MatrixCompletion>(std::move(m), mask, rank, nonsmooth, n_p, seed);
}

ProblemHandle make_procrustes(MatrixXd a, MatrixXd b, std::uint64_t seed) {
  const Index n_p = a.cols() * b.cols();
  return std::make_shared<Procrustes>(std::move(a), std::move(b), n_p, seed, false);
}

ProblemHandle make_custom(std::string name, ManifoldHandle manifold,
                          std::function<double(const Point&)> objective, bool smooth,
                          std::uint64_t seed, std::optional<Point> start) {
  return std::make_shared<Custom>(std::move(name), std::move(manifold), std::move(objective),
                                  smooth, seed, std::move(start));
}

// ---------------------------------------------------------------------------

ProblemInstance::ProblemInstance(ProblemHandle problem, long budget)
    : problem_(std::move(problem)), budget_(budget) {
  if (budget_ < 1) throw Error(ErrorCode::InvalidConfig, "budget must be >= 1");
}

double ProblemInstance::evaluate(const Point& x) {
  if (evals_ >= budget_)
    throw Error(ErrorCode::BudgetExhausted,
                problem_->name() + ": budget of " + std::to_string(budget_) + " evaluations spent");
  const double f = problem_->value(x);
  ++evals_;
  if (f < best_) best_ = f;
  history_.push_back(TraceEntry{evals_, best_});
  return f;
}

}  // namespace rdsopt
