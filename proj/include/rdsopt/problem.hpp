#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdsopt/manifold.hpp"

namespace rdsopt {

/// Immutable benchmark problem: manifold, seeded payload, objective.
class Problem {
 public:
  virtual ~Problem() = default;

  const std::string& name() const { return name_; }
  const ManifoldHandle& manifold() const { return manifold_; }
  /// Nominal problem dimension n_p (drives budgets and data profiles).
  Index n_p() const { return n_p_; }
  std::uint64_t seed() const { return seed_; }
  bool smooth() const { return smooth_; }
  const Point& start() const { return start_; }
  /// Objective at the start point (not counted against any budget).
  double f0() const { return value(start_); }
  const std::optional<double>& known_opt() const { return known_opt_; }

  /// Objective value; every problem is posed as a minimization.
  virtual double value(const Point& x) const = 0;
  /// Ambient gradient for smooth problems; test support only.
  virtual VectorXd euclidean_gradient(const Point& x) const;

 protected:
  Problem(std::string name, ManifoldHandle manifold, Index n_p, std::uint64_t seed,
          bool smooth);

  void set_known_opt(double v) { known_opt_ = v; }
  void set_start(Point p) { start_ = std::move(p); }

 private:
  std::string name_;
  ManifoldHandle manifold_;
  Index n_p_;
  std::uint64_t seed_;
  bool smooth_;
  Point start_;
  std::optional<double> known_opt_;
};

using ProblemHandle = std::shared_ptr<const Problem>;

/// Stable names of the benchmark problems, smooth ones first.
const std::vector<std::string>& problem_names();
const std::vector<std::string>& smooth_problem_names();
const std::vector<std::string>& nonsmooth_problem_names();

inline constexpr Index kMinProblemDim = 2;
inline constexpr Index kMaxProblemDim = 200;
/// Version tag of the n_p -> shape rule; written next to result tables.
inline constexpr const char* kShapeScheduleVersion = "shape-v1";

/// Seeded instance of a named benchmark problem. The start point is
/// random_point(manifold, seed).
ProblemHandle build_instance(const std::string& name, Index n_p, std::uint64_t seed);

/// Sum_ij sqrt(C_ij^2 + eps^2).
double smooth_l1(const MatrixXd& c, double eps);

// Explicit-payload constructors (tests, examples, custom grids).
ProblemHandle make_largest_eig(MatrixXd a, std::uint64_t seed = 0);
ProblemHandle make_sparsest_vector(MatrixXd q, std::uint64_t seed = 0);
/// `mask` is m x h with nonzero entries marking observed positions.
ProblemHandle make_matrix_completion(MatrixXd m, const MatrixXd& mask, Index rank,
                                     bool nonsmooth, std::uint64_t seed = 0);
ProblemHandle make_procrustes(MatrixXd a, MatrixXd b, std::uint64_t seed = 0);
ProblemHandle make_custom(std::string name, ManifoldHandle manifold,
                          std::function<double(const Point&)> objective, bool smooth,
                          std::uint64_t seed = 0, std::optional<Point> start = std::nullopt);

/// One entry per objective evaluation: (1-based eval index, best value so far).
struct TraceEntry {
  long eval_index;
  double best_f;
};

/// Per-run evaluator: shares the immutable problem, owns the evaluation
/// counter, budget and best-value history.
class ProblemInstance {
 public:
  explicit ProblemInstance(ProblemHandle problem,
                           long budget = std::numeric_limits<long>::max());

  const Problem& problem() const { return *problem_; }
  const ProblemHandle& handle() const { return problem_; }
  const Manifold& manifold() const { return *problem_->manifold(); }

  /// Counted evaluation; throws BudgetExhausted past the budget.
  double evaluate(const Point& x);

  long evals() const { return evals_; }
  long budget() const { return budget_; }
  bool exhausted() const { return evals_ >= budget_; }
  double best_f() const { return best_; }
  const std::vector<TraceEntry>& history() const { return history_; }

 private:
  ProblemHandle problem_;
  long budget_;
  long evals_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> history_;
};

}  // namespace rdsopt
