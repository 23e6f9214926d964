#include "rdsopt/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace rdsopt {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, msg);
}

/// Mutable state of one run, shared by the phases of switching solvers.
struct RunState {
  ProblemInstance& inst;
  const RunObserver& obs;
  Point x;
  double fx = 0.0;
  long iterations = 0;
  long successes = 0;
  std::vector<double> stepsizes;
  std::vector<double> accepted;
  std::vector<double> tentative;

  const Manifold& manifold() const { return inst.manifold(); }

  void record(double step, double taken) {
    ++iterations;
    stepsizes.push_back(step);
    accepted.push_back(taken);
    if (taken > 0.0) ++successes;
  }

  void step_event(double alpha, double f_before, double f_after, bool ok) const {
    if (obs.on_step) obs.on_step(StepEvent{iterations, alpha, f_before, f_after, ok});
  }
};

/// Sufficient decrease, also requiring a strict drop so that steps whose
/// gamma * alpha^2 vanishes below the rounding of fx are never accepted.
bool sufficient(double ft, double fx, double gamma, double alpha) {
  return ft < fx && ft <= fx - gamma * alpha * alpha;
}

enum class PhaseEnd { Exhausted, Floor, Switch };

RunState start_run(ProblemInstance& inst, const RunObserver& obs) {
  RunState st{inst, obs, inst.problem().start(), 0.0, 0, 0, {}, {}, {}};
  st.fx = inst.evaluate(st.x);
  return st;
}

RunTrace finish_run(std::string solver, RunState& st) {
  RunTrace t;
  t.solver = std::move(solver);
  t.history = st.inst.history();
  t.final_point = st.x;
  t.evals_used = st.inst.evals();
  t.iterations = st.iterations;
  t.success_count = st.successes;
  t.f0 = st.inst.problem().f0();
  t.best_f = st.inst.best_f();
  t.stepsizes = std::move(st.stepsizes);
  t.accepted = std::move(st.accepted);
  t.tentative = std::move(st.tentative);
  return t;
}

// Algorithm: direct search on projected coordinate bases, opportunistic poll.
PhaseEnd rds_sb_phase(RunState& st, const SolverConfig& cfg, std::optional<double> switch_at) {
  const Manifold& m = st.manifold();
  double alpha = cfg.alpha0;
  while (alpha >= cfg.stepsize_floor) {
    if (st.inst.exhausted()) return PhaseEnd::Exhausted;
    LazyBasis basis(m, st.x, cfg.drop_tol);
    bool any = false;
    bool success = false;
    for (Index slot = 0; slot < basis.slot_count(); ++slot) {
      const VectorXd* p = basis.direction(slot);
      if (p == nullptr) continue;
      any = true;
      if (st.inst.exhausted()) return PhaseEnd::Exhausted;
      Point trial = m.retract(st.x, alpha * *p);
      const double ft = st.inst.evaluate(trial);
      if (sufficient(ft, st.fx, cfg.gamma, alpha)) {
        st.step_event(alpha, st.fx, ft, true);
        st.x = std::move(trial);
        st.fx = ft;
        success = true;
        break;
      }
    }
    if (!any)
      throw Error(ErrorCode::DegenerateBasis,
                  "every projected coordinate direction vanished on " + m.describe());
    if (!success) st.step_event(alpha, st.fx, st.fx, false);
    st.record(alpha, success ? alpha : 0.0);
    alpha = success ? cfg.gamma2 * alpha : cfg.gamma1 * alpha;
    if (switch_at && alpha <= *switch_at) return PhaseEnd::Switch;
  }
  return PhaseEnd::Floor;
}

// Algorithm: one linesearch per iteration along the cycled basis direction.
PhaseEnd rdse_sb_phase(RunState& st, const SolverConfig& cfg, std::optional<double> switch_at) {
  const Manifold& m = st.manifold();
  const Index slots = 2 * m.ambient_dim();
  if (!cfg.alpha0_per_direction.empty()) {
    st.tentative = cfg.alpha0_per_direction;
  } else {
    st.tentative.assign(static_cast<std::size_t>(slots), cfg.alpha0);
  }
  for (long k = 0;; ++k) {
    if (st.inst.exhausted()) return PhaseEnd::Exhausted;
    LazyBasis basis(m, st.x, cfg.drop_tol);
    const std::vector<Index> active = basis.active_slots();
    if (active.empty())
      throw Error(ErrorCode::DegenerateBasis,
                  "every projected coordinate direction vanished on " + m.describe());
    const Index slot = active[static_cast<std::size_t>(k % static_cast<long>(active.size()))];
    double& tentative = st.tentative[static_cast<std::size_t>(slot)];
    const TangentVector d{*basis.direction(slot), fingerprint(st.x)};
    const double step = tentative;
    const LinesearchResult ls = linesearch_extrapolate(st.inst, st.x, st.fx, step, d, cfg);
    if (st.obs.on_linesearch)
      st.obs.on_linesearch(
          LinesearchEvent{st.x, st.fx, d.v, ls.alpha, ls.alpha_next, ls.truncated});
    tentative = ls.alpha_next;
    st.step_event(ls.alpha, st.fx, ls.value, ls.alpha > 0.0);
    if (ls.alpha > 0.0) {
      st.x = ls.point;
      st.fx = ls.value;
    }
    st.record(step, ls.alpha);
    if (ls.truncated) return PhaseEnd::Exhausted;

    double largest = 0.0;
    for (Index s : active) largest = std::max(largest, st.tentative[static_cast<std::size_t>(s)]);
    if (switch_at && largest <= *switch_at) return PhaseEnd::Switch;
    if (largest < cfg.stepsize_floor) return PhaseEnd::Floor;
  }
}

// Algorithm: direct search along projected dense directions.
PhaseEnd rds_dd_phase(RunState& st, const SolverConfig& cfg) {
  const Manifold& m = st.manifold();
  DenseDirectionStream stream(cfg.seed, m.ambient_dim(), cfg.drop_tol);
  double alpha = cfg.alpha0;
  while (alpha >= cfg.stepsize_floor) {
    if (st.inst.exhausted()) return PhaseEnd::Exhausted;
    const TangentVector d = dense_direction(stream, m, st.x);
    bool success = false;
    if (d.v.squaredNorm() > 0.0) {
      Point trial = m.retract(st.x, alpha * d.v);
      const double ft = st.inst.evaluate(trial);
      if (sufficient(ft, st.fx, cfg.gamma, alpha)) {
        st.step_event(alpha, st.fx, ft, true);
        st.x = std::move(trial);
        st.fx = ft;
        success = true;
      }
    }
    if (!success) st.step_event(alpha, st.fx, st.fx, false);
    st.record(alpha, success ? alpha : 0.0);
    alpha = success ? cfg.gamma2 * alpha : cfg.gamma1 * alpha;
  }
  return PhaseEnd::Floor;
}

// Algorithm: extrapolation linesearch along projected dense directions.
PhaseEnd rdse_dd_phase(RunState& st, const SolverConfig& cfg) {
  const Manifold& m = st.manifold();
  DenseDirectionStream stream(cfg.seed, m.ambient_dim(), cfg.drop_tol);
  double tentative = cfg.alpha0;
  while (tentative >= cfg.stepsize_floor) {
    if (st.inst.exhausted()) return PhaseEnd::Exhausted;
    const TangentVector d = dense_direction(stream, m, st.x);
    const double step = tentative;
    if (d.v.squaredNorm() == 0.0) {
      // Zero direction: unsuccessful, no evaluation spent.
      st.step_event(0.0, st.fx, st.fx, false);
      st.record(step, 0.0);
      tentative = cfg.gamma1 * tentative;
      continue;
    }
    const LinesearchResult ls = linesearch_extrapolate(st.inst, st.x, st.fx, step, d, cfg);
    if (st.obs.on_linesearch)
      st.obs.on_linesearch(
          LinesearchEvent{st.x, st.fx, d.v, ls.alpha, ls.alpha_next, ls.truncated});
    tentative = ls.alpha_next;
    st.step_event(ls.alpha, st.fx, ls.value, ls.alpha > 0.0);
    if (ls.alpha > 0.0) {
      st.x = ls.point;
      st.fx = ls.value;
    }
    st.record(step, ls.alpha);
    if (ls.truncated) return PhaseEnd::Exhausted;
  }
  return PhaseEnd::Floor;
}

}  // namespace

void SolverConfig::validate(bool linesearch, bool switching) const {
  require(gamma > 0.0, "gamma must be > 0");
  require(gamma1 > 0.0 && gamma1 < 1.0, "gamma1 must lie in (0,1)");
  require(gamma2 >= 1.0, "gamma2 must be >= 1");
  if (linesearch) require(gamma2 > 1.0, "the extrapolation linesearch needs gamma2 > 1");
  require(alpha0 > 0.0, "alpha0 must be > 0");
  for (double a : alpha0_per_direction) require(a > 0.0, "per-direction alpha0 must be > 0");
  require(budget >= 1, "budget must be >= 1");
  if (switching) require(alpha_eps > 0.0, "alpha_eps must be > 0");
  require(drop_tol > 0.0 && drop_tol < 1.0, "drop_tol must lie in (0,1)");
  require(stepsize_floor >= 0.0, "stepsize_floor must be >= 0");
}

SolverConfig rds_sb_defaults() {
  SolverConfig c;
  c.gamma1 = 0.61;
  c.gamma2 = 1.0;
  c.gamma = 0.77;
  return c;
}

SolverConfig rdse_sb_defaults() {
  SolverConfig c;
  c.gamma1 = 0.81;
  c.gamma2 = 3.12;
  c.gamma = 0.11;
  return c;
}

SolverConfig dense_defaults() {
  SolverConfig c;
  c.gamma1 = 0.95;
  c.gamma2 = 2.0;
  c.gamma = 1.0;
  return c;
}

LinesearchResult linesearch_extrapolate(ProblemInstance& f, const Point& x, double fx,
                                        double alpha_tilde, const TangentVector& d,
                                        const SolverConfig& cfg) {
  require(alpha_tilde > 0.0, "linesearch: alpha_tilde must be > 0");
  const Manifold& m = f.manifold();
  m.check_ambient(d.v, "linesearch_extrapolate");
  if (d.base != fingerprint(x))
    throw Error(ErrorCode::BaseMismatch, "linesearch: direction not tangent at x");

  LinesearchResult out{0.0, alpha_tilde, true, x, fx};
  if (f.exhausted()) return out;

  double alpha = alpha_tilde;
  Point trial = m.retract(x, alpha * d.v);
  double ft = f.evaluate(trial);
  if (!sufficient(ft, fx, cfg.gamma, alpha)) {
    return LinesearchResult{0.0, cfg.gamma1 * alpha_tilde, false, x, fx};
  }
  out = LinesearchResult{alpha, alpha, false, std::move(trial), ft};
  if (cfg.gamma2 <= 1.0) return out;
  for (;;) {
    if (f.exhausted()) {
      out.truncated = true;
      return out;
    }
    const double next = cfg.gamma2 * alpha;
    Point y = m.retract(x, next * d.v);
    const double fy = f.evaluate(y);
    if (!(fy < fx && fy < fx - cfg.gamma * next * next)) break;
    alpha = next;
    out = LinesearchResult{alpha, alpha, false, std::move(y), fy};
  }
  return out;
}

RunTrace run_rds_sb(const ProblemHandle& p, const SolverConfig& cfg, const RunObserver& obs) {
  cfg.validate();
  ProblemInstance inst(p, cfg.budget);
  RunState st = start_run(inst, obs);
  rds_sb_phase(st, cfg, std::nullopt);
  return finish_run("rds-sb", st);
}

RunTrace run_rdse_sb(const ProblemHandle& p, const SolverConfig& cfg, const RunObserver& obs) {
  cfg.validate(true);
  const Index slots = 2 * p->manifold()->ambient_dim();
  require(cfg.alpha0_per_direction.empty() ||
              static_cast<Index>(cfg.alpha0_per_direction.size()) == slots,
          "per-direction alpha0 needs one entry per coordinate slot (2 * ambient_dim)");
  ProblemInstance inst(p, cfg.budget);
  RunState st = start_run(inst, obs);
  rdse_sb_phase(st, cfg, std::nullopt);
  return finish_run("rdse-sb", st);
}

RunTrace run_rds_dd(const ProblemHandle& p, const SolverConfig& cfg, const RunObserver& obs) {
  cfg.validate();
  ProblemInstance inst(p, cfg.budget);
  RunState st = start_run(inst, obs);
  rds_dd_phase(st, cfg);
  return finish_run("rds-dd", st);
}

RunTrace run_rdse_dd(const ProblemHandle& p, const SolverConfig& cfg, const RunObserver& obs) {
  cfg.validate(true);
  ProblemInstance inst(p, cfg.budget);
  RunState st = start_run(inst, obs);
  rdse_dd_phase(st, cfg);
  return finish_run("rdse-dd", st);
}

RunTrace run_switching(const ProblemHandle& p, const SolverConfig& smooth,
                       const SolverConfig& dense, SwitchVariant variant,
                       const RunObserver& obs) {
  const bool extrapolated = variant == SwitchVariant::Extrapolated;
  smooth.validate(extrapolated, true);
  dense.validate(extrapolated);
  ProblemInstance inst(p, smooth.budget);
  RunState st = start_run(inst, obs);
  const PhaseEnd end = extrapolated ? rdse_sb_phase(st, smooth, smooth.alpha_eps)
                                    : rds_sb_phase(st, smooth, smooth.alpha_eps);
  std::optional<long> switched;
  if (end == PhaseEnd::Switch) {
    switched = inst.evals();
    if (extrapolated) {
      rdse_dd_phase(st, dense);
    } else {
      rds_dd_phase(st, dense);
    }
  }
  RunTrace t = finish_run(extrapolated ? "rdse-dd-plus" : "rds-dd-plus", st);
  t.switch_eval = switched;
  return t;
}

RunTrace run_zo_rgd(const ProblemHandle& p, const SolverConfig& cfg, double mu) {
  require(mu > 0.0, "zo-rgd: mu must be > 0");
  require(cfg.budget >= 1, "budget must be >= 1");
  if (!p->smooth())
    throw Error(ErrorCode::Unsupported, "zo-rgd expects a smooth problem, got " + p->name());
  ProblemInstance inst(p, cfg.budget);
  RunObserver none;
  RunState st = start_run(inst, none);
  const Manifold& m = inst.manifold();
  const double eta = kZoStepScale / static_cast<double>(m.ambient_dim());
  Rng rng(mix64(cfg.seed));
  while (!inst.exhausted()) {
    const VectorXd u = random_unit_tangent(m, st.x, rng);
    const double fp = inst.evaluate(m.retract(st.x, mu * u));
    const VectorXd g = ((fp - st.fx) / mu) * u;
    if (inst.exhausted()) break;
    Point next = m.retract(st.x, -eta * g);
    st.fx = inst.evaluate(next);
    st.x = std::move(next);
    st.record(eta, eta * g.norm());
  }
  return finish_run("zo-rgd", st);
}

const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names{"rds-sb",      "rdse-sb",      "rds-dd", "rdse-dd",
                                              "rds-dd-plus", "rdse-dd-plus", "zo-rgd"};
  return names;
}

namespace {

SolverConfig primary_config(SolverConfig c, long budget, std::uint64_t seed,
                            const SolverOverrides& o) {
  c.budget = budget;
  c.seed = seed;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.gamma1) c.gamma1 = *o.gamma1;
  if (o.gamma2) c.gamma2 = *o.gamma2;
  if (o.alpha0) c.alpha0 = *o.alpha0;
  if (o.alpha_eps) c.alpha_eps = *o.alpha_eps;
  return c;
}

SolverConfig dense_phase_config(long budget, std::uint64_t seed, const SolverOverrides& o) {
  SolverConfig c = dense_defaults();
  c.budget = budget;
  c.seed = seed;
  if (o.alpha0) c.alpha0 = *o.alpha0;
  if (o.dense_gamma) c.gamma = *o.dense_gamma;
  if (o.dense_gamma1) c.gamma1 = *o.dense_gamma1;
  if (o.dense_gamma2) c.gamma2 = *o.dense_gamma2;
  return c;
}

}  // namespace

void validate_named_solver(const std::string& name, const SolverOverrides& o) {
  const auto primary = [&](const SolverConfig& d) { return primary_config(d, 1, 0, o); };
  if (name == "rds-sb") return primary(rds_sb_defaults()).validate();
  if (name == "rdse-sb") return primary(rdse_sb_defaults()).validate(true);
  if (name == "rds-dd") return primary(dense_defaults()).validate();
  if (name == "rdse-dd") return primary(dense_defaults()).validate(true);
  if (name == "rds-dd-plus" || name == "rdse-dd-plus") {
    const bool ext = name == "rdse-dd-plus";
    primary(ext ? rdse_sb_defaults() : rds_sb_defaults()).validate(ext, true);
    return dense_phase_config(1, 0, o).validate(ext);
  }
  if (name == "zo-rgd") {
    if (o.mu && !(*o.mu > 0.0)) throw Error(ErrorCode::InvalidConfig, "zo-rgd: mu must be > 0");
    return;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown solver '" + name + "'");
}

RunTrace run_named_solver(const std::string& name, const ProblemHandle& p, long budget,
                          std::uint64_t seed, const SolverOverrides& o,
                          const RunObserver& obs) {
  auto apply = [&](const SolverConfig& d) { return primary_config(d, budget, seed, o); };
  auto dense = [&] { return dense_phase_config(budget, seed, o); };
  if (name == "rds-sb") return run_rds_sb(p, apply(rds_sb_defaults()), obs);
  if (name == "rdse-sb") return run_rdse_sb(p, apply(rdse_sb_defaults()), obs);
  if (name == "rds-dd") return run_rds_dd(p, apply(dense_defaults()), obs);
  if (name == "rdse-dd") return run_rdse_dd(p, apply(dense_defaults()), obs);
  if (name == "rds-dd-plus")
    return run_switching(p, apply(rds_sb_defaults()), dense(), SwitchVariant::Plain, obs);
  if (name == "rdse-dd-plus")
    return run_switching(p, apply(rdse_sb_defaults()), dense(), SwitchVariant::Extrapolated,
                         obs);
  if (name == "zo-rgd") return run_zo_rgd(p, apply(SolverConfig{}), o.mu.value_or(kZoDefaultMu));
  throw Error(ErrorCode::InvalidConfig, "unknown solver '" + name + "'");
}

}  // namespace rdsopt
