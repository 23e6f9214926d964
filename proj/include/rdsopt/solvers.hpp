#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdsopt/directions.hpp"
#include "rdsopt/problem.hpp"

namespace rdsopt {

/// Parameters shared by every solver. `gamma` is the sufficient-decrease
/// coefficient of the test f(trial) <= f(x) - gamma * alpha^2.
struct SolverConfig {
  double gamma = 0.77;
  double gamma1 = 0.61;  // shrink
  double gamma2 = 1.0;   // expand
  double alpha0 = 1.0;
  /// Optional per-slot initial tentative stepsizes for RDSE-SB (length
  /// 2 * ambient_dim); empty means alpha0 everywhere.
  std::vector<double> alpha0_per_direction;
  long budget = 1000;
  double alpha_eps = 1e-3;  // switching threshold
  std::uint64_t seed = 0;
  double drop_tol = kDefaultDropTol;
  double stepsize_floor = 1e-16;

  /// Throws InvalidConfig. `linesearch` requires gamma2 > 1; `switching`
  /// requires alpha_eps > 0.
  void validate(bool linesearch = false, bool switching = false) const;
};

/// Tuned defaults: RDS-SB, RDSE-SB and the dense-direction phase.
SolverConfig rds_sb_defaults();
SolverConfig rdse_sb_defaults();
SolverConfig dense_defaults();

inline constexpr double kZoStepScale = 1.64;  // eta = 1.64 / ambient_dim
inline constexpr double kZoDefaultMu = 1e-6;

struct LinesearchResult {
  double alpha = 0.0;       // accepted step (0 on failure)
  double alpha_next = 0.0;  // tentative step for the next round
  bool truncated = false;   // budget ran out inside the search
  Point point;              // R(x, alpha d), or x when alpha = 0
  double value = 0.0;       // f(point)
};

struct StepEvent {
  long iteration;
  double alpha;
  double f_before;
  double f_after;
  bool accepted;
};

struct LinesearchEvent {
  Point x;
  double fx;
  VectorXd d;
  double alpha;
  double alpha_next;
  bool truncated;
};

/// Optional hooks; the solvers never depend on them.
struct RunObserver {
  std::function<void(const StepEvent&)> on_step;
  std::function<void(const LinesearchEvent&)> on_linesearch;
};

struct RunTrace {
  std::string solver;
  std::vector<TraceEntry> history;  // one entry per evaluation
  Point final_point;                // last iterate
  long evals_used = 0;
  long iterations = 0;
  long success_count = 0;
  double f0 = 0.0;
  double best_f = 0.0;
  /// Eval index at which a switching solver entered its dense phase.
  std::optional<long> switch_eval;
  /// Per iteration: the stepsize (or tentative stepsize) in effect.
  std::vector<double> stepsizes;
  /// Per iteration: the accepted step (0 when unsuccessful).
  std::vector<double> accepted;
  /// Final per-slot tentative stepsizes (RDSE-SB family only).
  std::vector<double> tentative;
};

/// Extrapolation linesearch along d from x (with known fx = f(x)).
LinesearchResult linesearch_extrapolate(ProblemInstance& f, const Point& x, double fx,
                                        double alpha_tilde, const TangentVector& d,
                                        const SolverConfig& cfg);

RunTrace run_rds_sb(const ProblemHandle& p, const SolverConfig& cfg,
                    const RunObserver& obs = {});
RunTrace run_rdse_sb(const ProblemHandle& p, const SolverConfig& cfg,
                     const RunObserver& obs = {});
RunTrace run_rds_dd(const ProblemHandle& p, const SolverConfig& cfg,
                    const RunObserver& obs = {});
RunTrace run_rdse_dd(const ProblemHandle& p, const SolverConfig& cfg,
                     const RunObserver& obs = {});

enum class SwitchVariant { Plain, Extrapolated };

/// Spanning-basis phase until the stepsize drops to alpha_eps, then the
/// dense-direction phase. Budget, seed and alpha_eps come from `smooth`.
RunTrace run_switching(const ProblemHandle& p, const SolverConfig& smooth,
                       const SolverConfig& dense, SwitchVariant variant,
                       const RunObserver& obs = {});

/// Two-point zeroth-order Riemannian gradient descent baseline.
RunTrace run_zo_rgd(const ProblemHandle& p, const SolverConfig& cfg, double mu = kZoDefaultMu);

/// Stable solver names.
const std::vector<std::string>& solver_names();

/// Per-solver overrides applied on top of the tuned defaults.
struct SolverOverrides {
  std::optional<double> gamma, gamma1, gamma2, alpha0, alpha_eps, mu;
  std::optional<double> dense_gamma, dense_gamma1, dense_gamma2;
};

/// Throws InvalidConfig when the overrides make the named solver's
/// configuration invalid.
void validate_named_solver(const std::string& name, const SolverOverrides& overrides);

/// Runs a named solver with tuned defaults, the given budget and seed.
RunTrace run_named_solver(const std::string& name, const ProblemHandle& p, long budget,
                          std::uint64_t seed, const SolverOverrides& overrides = {},
                          const RunObserver& obs = {});

}  // namespace rdsopt
