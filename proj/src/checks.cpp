#include "rdsopt/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "rdsopt/bench.hpp"
#include "rdsopt/directions.hpp"
#include "rdsopt/problem.hpp"
#include "rdsopt/solvers.hpp"

namespace rdsopt {

namespace {

/// Sphere whose retraction forgets to normalize; mutation target.
class FaultySphere final : public Manifold {
 public:
  explicit FaultySphere(Index n) : Manifold(n, n - 1, kDefaultFeasibilityTol), base_(make_sphere(n)) {}
  std::string kind() const override { return "sphere"; }
  std::string describe() const override { return base_->describe() + "[faulty]"; }
  VectorXd project(const Point& x, const VectorXd& v) const override { return base_->project(x, v); }
  Point retract(const Point& x, const VectorXd& d) const override {
    return Point{x.coords + d, std::nullopt};
  }
  double residual(const VectorXd& a) const override { return base_->residual(a); }
  Point sample(Rng& rng) const override { return base_->sample(rng); }

 private:
  ManifoldHandle base_;
};

/// Running worst value of a nonnegative error against a fixed limit.
struct Worst {
  double value = 0.0;
  std::string where;

  void see(double v, const std::string& at) {
    if (where.empty() || std::isnan(v) || v > value) {
      value = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      where = at;
    }
  }
};

CheckResult upper(const char* suite, const std::string& name, const std::string& subject,
                  const Worst& w, double limit) {
  CheckResult r{suite, name, subject, w.value <= limit, limit - w.value, ""};
  char buf[160];
  std::snprintf(buf, sizeof buf, "worst %.3e (limit %.1e)%s%s", w.value, limit,
                w.where.empty() ? "" : " at ", w.where.c_str());
  r.detail = buf;
  return r;
}

CheckResult flag(const char* suite, const std::string& name, const std::string& subject, bool ok,
                 std::string detail) {
  return CheckResult{suite, name, subject, ok, ok ? 1.0 : -1.0, std::move(detail)};
}

std::uint64_t case_seed(const CheckOptions& opt, const std::string& subject, int i) {
  return combine_seed(combine_seed(opt.seed, stable_hash(subject)), static_cast<std::uint64_t>(i));
}

VectorXd scaled_tangent(const Manifold& m, const Point& x, Rng& rng, double len) {
  for (;;) {
    VectorXd v = m.project(x, random_normal(rng, m.ambient_dim()));
    const double n = v.norm();
    if (n > 1e-12) return v * (len / n);
  }
}

bool same(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

bool same_point(const Point& a, const Point& b) { return fingerprint(a) == fingerprint(b); }

// --- geometry ---------------------------------------------------------------

void geometry_for(const Manifold& m, const CheckOptions& opt, std::vector<CheckResult>& out) {
  const std::string subj = m.describe();
  Worst idem, adj, tang, feas, zero, bound;
  double ratio_lo = 4.0, ratio_hi = 4.0;
  std::string ratio_where;
  bool deterministic = true;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int i = 0; i < opt.geometry_cases; ++i) {
    const std::uint64_t s = case_seed(opt, subj, i);
    const std::string at = "case " + std::to_string(i);
    const Point x = m.random_point(s);
    if (!same_point(x, m.random_point(s))) deterministic = false;
    Rng rng(mix64(s ^ 0xabcdefULL));
    const VectorXd v = random_normal(rng, m.ambient_dim());
    const VectorXd w = random_normal(rng, m.ambient_dim());
    const VectorXd pv = m.project(x, v);

    idem.see((m.project(x, pv) - pv).norm() / (1.0 + v.norm()), at);
    adj.see(std::abs(pv.dot(w) - v.dot(m.project(x, w))), at);
    tang.see(m.tangency_residual(x, pv) / (1.0 + v.norm()), at);

    const VectorXd d10 = scaled_tangent(m, x, rng, 10.0 * (unit(rng) + 1e-3) / 1.001);
    feas.see(m.point_residual(m.retract(x, d10)), at);
    feas.see(m.point_residual(x), at + " (start)");

    const VectorXd ax = m.ambient(x);
    zero.see((m.ambient(m.retract(x, VectorXd::Zero(m.ambient_dim()))) - ax).norm(), at);

    const double radius = std::min(1.0, m.step_radius(x));
    const VectorXd d1 = scaled_tangent(m, x, rng, radius * (unit(rng) + 1e-6) / (1.0 + 1e-6));
    bound.see((m.ambient(m.retract(x, d1)) - ax).norm() / d1.norm(), at);

    const VectorXd u = random_unit_tangent(m, x, rng);
    auto err = [&](double t) { return (m.ambient(m.retract(x, t * u)) - (ax + t * u)).norm(); };
    for (double t : {1e-2, 1e-3}) {
      const double et = err(t);
      if (et < 1e-14) continue;
      const double r = et / err(t / 2.0);
      if (r < ratio_lo || r > ratio_hi) ratio_where = at;
      ratio_lo = std::min(ratio_lo, r);
      ratio_hi = std::max(ratio_hi, r);
    }
  }
  out.push_back(upper("geometry", "idempotence", subj, idem, 1e-10));
  out.push_back(upper("geometry", "self-adjointness", subj, adj, 1e-10));
  out.push_back(upper("geometry", "tangency", subj, tang, 1e-10));
  out.push_back(upper("geometry", "feasibility", subj, feas, 1e-8));
  out.push_back(upper("geometry", "zero-retraction", subj, zero, 1e-12));
  out.push_back(upper("geometry", "boundedness", subj, bound, 2.0));
  {
    const bool ok = ratio_lo >= 3.5 && ratio_hi <= 4.5;
    char buf[160];
    std::snprintf(buf, sizeof buf, "ratios in [%.4f, %.4f]%s%s", ratio_lo, ratio_hi,
                  ratio_where.empty() ? "" : ", extreme at ", ratio_where.c_str());
    out.push_back(CheckResult{"geometry", "first-order", subj, ok,
                              std::min(ratio_lo - 3.5, 4.5 - ratio_hi), buf});
  }
  out.push_back(flag("geometry", "sampling-determinism", subj, deterministic,
                     deterministic ? "equal seeds give equal points" : "sampling not repeatable"));

  if (const ProductLayout* lay = product_layout(m)) {
    bool exact = true;
    for (int i = 0; i < std::min(opt.geometry_cases, 20); ++i) {
      const std::uint64_t s = case_seed(opt, subj + "/blocks", i);
      const Point x = m.random_point(s);
      Rng rng(mix64(s));
      const VectorXd v = random_normal(rng, m.ambient_dim());
      const VectorXd pv = m.project(x, v);
      const VectorXd pw = m.project(x, random_normal(rng, m.ambient_dim()));
      const Point rx = m.retract(x, pv);
      double ip = 0.0;
      for (std::size_t c = 0; c < lay->components.size(); ++c) {
        const Manifold& part = *lay->components[c];
        const Point xc = component_point(*lay, x, c);
        const Index off = lay->offsets[c], len = part.ambient_dim();
        const VectorXd vc = v.segment(off, len);
        if (!same(part.project(xc, vc), pv.segment(off, len))) exact = false;
        if (!same(part.retract(xc, pv.segment(off, len)).coords, rx.coords.segment(off, len)))
          exact = false;
        ip += part.inner(xc, pv.segment(off, len), pw.segment(off, len));
      }
      if (ip != m.inner(x, pv, pw)) exact = false;
    }
    out.push_back(flag("geometry", "product-blockwise", subj, exact,
                       exact ? "bitwise equal to componentwise operations"
                             : "product differs from componentwise operations"));
  }
}

// --- spanning ---------------------------------------------------------------

void spanning_for(const Manifold& m, const CheckOptions& opt, std::vector<CheckResult>& out) {
  const std::string subj = m.describe();
  Worst tang, len, dense;
  double tau_min = std::numeric_limits<double>::infinity();
  std::size_t k_min = std::numeric_limits<std::size_t>::max();
  for (int i = 0; i < opt.spanning_points; ++i) {
    const std::uint64_t s = case_seed(opt, subj + "/span", i);
    const std::string at = "point " + std::to_string(i);
    const Point x = m.random_point(s);
    const SpanningBasis b = spanning_basis(m, x);
    k_min = std::min(k_min, b.size());
    for (const auto& p : b.vectors) {
      tang.see(m.tangency_residual(x, p.v), at);
      len.see(std::max(0.0, p.v.norm() - 1.0), at);
    }
    tau_min = std::min(tau_min, measure_tau(m, b, opt.tau_trials, s));
    DenseDirectionStream stream(s, m.ambient_dim());
    for (int k = 0; k < 5; ++k) {
      const TangentVector d = dense_direction(stream, m, x);
      const double n = std::sqrt(m.inner(x, d.v, d.v));
      dense.see(n == 0.0 ? 0.0 : std::abs(n - 1.0), at);
    }
  }
  out.push_back(upper("spanning", "basis-tangency", subj, tang, 1e-10));
  out.push_back(upper("spanning", "basis-norm", subj, len, 1e-12));
  {
    char buf[96];
    std::snprintf(buf, sizeof buf, "min tau %.4f over %d points, min K %zu", tau_min,
                  opt.spanning_points, k_min);
    out.push_back(CheckResult{"spanning", "cosine-measure", subj, tau_min > 0.0, tau_min, buf});
  }
  out.push_back(upper("spanning", "dense-unit-norm", subj, dense, 1e-10));

  DenseDirectionStream a(opt.seed, m.ambient_dim()), b(opt.seed, m.ambient_dim());
  bool equal = true;
  for (int k = 0; k < 10; ++k) equal = equal && same(a.next_ambient(), b.next_ambient());
  out.push_back(flag("spanning", "stream-determinism", subj, equal,
                     equal ? "equal seeds give equal streams" : "streams diverge"));
}

// --- solvers ----------------------------------------------------------------

ProblemHandle constant_problem(const ManifoldHandle& m, std::uint64_t seed) {
  return make_custom("constant", m, [](const Point&) { return 1.0; }, true, seed);
}

/// Wraps a problem so every evaluated point has its feasibility recorded.
ProblemHandle watched(const ProblemHandle& p, double* worst) {
  const ManifoldHandle m = p->manifold();
  return make_custom(
      p->name(), m,
      [p, m, worst](const Point& x) {
        *worst = std::max(*worst, m->point_residual(x));
        return p->value(x);
      },
      p->smooth(), p->seed(), p->start());
}

bool same_trace(const RunTrace& a, const RunTrace& b) {
  if (a.history.size() != b.history.size()) return false;
  for (std::size_t i = 0; i < a.history.size(); ++i)
    if (a.history[i].eval_index != b.history[i].eval_index ||
        a.history[i].best_f != b.history[i].best_f)
      return false;
  return same_point(a.final_point, b.final_point) && a.evals_used == b.evals_used;
}

double gamma_for(const std::string& solver, bool dense_phase) {
  if (dense_phase || solver == "rds-dd" || solver == "rdse-dd") return dense_defaults().gamma;
  if (solver == "rdse-sb" || solver == "rdse-dd-plus") return rdse_sb_defaults().gamma;
  return rds_sb_defaults().gamma;
}

void stepsize_decay(const CheckOptions& opt, std::vector<CheckResult>& out) {
  const ManifoldHandle m = make_sphere(4);
  const ProblemHandle p = constant_problem(m, opt.seed);

  auto geometric = [](const RunTrace& t, double g1, double a0, long per) {
    double a = a0;
    for (std::size_t k = 0; k < t.stepsizes.size(); ++k) {
      if (t.stepsizes[k] != a || t.accepted[k] != 0.0) return false;
      if ((static_cast<long>(k) + 1) % per == 0) a *= g1;
    }
    return !t.stepsizes.empty();
  };

  SolverConfig c = rds_sb_defaults();
  c.budget = 1000000;
  c.seed = opt.seed;
  RunTrace t = run_rds_sb(p, c);
  out.push_back(flag("solvers", "constant-decay", "rds-sb", geometric(t, c.gamma1, c.alpha0, 1),
                     std::to_string(t.iterations) + " iterations, alpha_k = gamma1^k alpha0"));

  c = dense_defaults();
  c.budget = 1000000;
  c.seed = opt.seed;
  t = run_rds_dd(p, c);
  out.push_back(flag("solvers", "constant-decay", "rds-dd", geometric(t, c.gamma1, c.alpha0, 1),
                     std::to_string(t.iterations) + " iterations, alpha_k = gamma1^k alpha0"));
  t = run_rdse_dd(p, c);
  out.push_back(flag("solvers", "constant-decay", "rdse-dd", geometric(t, c.gamma1, c.alpha0, 1),
                     std::to_string(t.iterations) + " iterations, tentative shrinks every step"));

  c = rdse_sb_defaults();
  c.budget = 1000000;
  c.seed = opt.seed;
  t = run_rdse_sb(p, c);
  const Point x0 = p->start();
  const long k = static_cast<long>(spanning_basis(*m, x0).size());
  out.push_back(flag("solvers", "constant-decay", "rdse-sb", geometric(t, c.gamma1, c.alpha0, k),
                     "each of " + std::to_string(k) + " slots shrinks once per sweep"));
}

void solver_runs(const CheckOptions& opt, std::vector<CheckResult>& out) {
  struct Case {
    const char* problem;
    Index n_p;
  };
  const Case cases[] = {{"largest-eig", 6},       {"procrustes", 8}, {"gmm", 12},
                        {"matrix-completion", 9}, {"sparsest-vector", 6}, {"nonsmooth-mc", 9}};
  for (const auto& name : solver_names()) {
    Worst feas;
    Worst decrease;
    long budget_violations = 0, monotone_violations = 0, replay_violations = 0, replays = 0;
    bool deterministic = true;
    for (const auto& cs : cases) {
      const ProblemHandle base = build_instance(cs.problem, cs.n_p, opt.seed);
      if (name == "zo-rgd" && !base->smooth()) continue;
      const long budget = 40 * (cs.n_p + 1);
      double worst = 0.0;
      const ProblemHandle p = watched(base, &worst);
      const std::uint64_t seed = combine_seed(opt.seed, stable_hash(name));
      const std::string at = std::string(cs.problem) + "(" + std::to_string(cs.n_p) + ")";

      bool dense_phase = false;
      RunObserver obs;
      obs.on_step = [&](const StepEvent& e) {
        if (!e.accepted) return;
        const double g = gamma_for(name, dense_phase);
        decrease.see(std::max(0.0, g * e.alpha * e.alpha - (e.f_before - e.f_after)) /
                         (1.0 + std::abs(e.f_before)),
                     at);
      };
      obs.on_linesearch = [&](const LinesearchEvent& e) {
        if (e.alpha <= 0.0) return;
        ++replays;
        const double g = gamma_for(name, dense_phase);
        const double f = base->value(base->manifold()->retract(e.x, e.alpha * e.d));
        if (!(f <= e.fx - g * e.alpha * e.alpha)) ++replay_violations;
      };
      // Switching runs change gamma at the switch; follow it through the eval count.
      long switch_at = -1;
      if (name == "rds-dd-plus" || name == "rdse-dd-plus") {
        switch_at = run_named_solver(name, base, budget, seed).switch_eval.value_or(-1);
        long evals_seen = 0;
        const ProblemHandle counting = make_custom(
            base->name(), base->manifold(),
            [&, p](const Point& x) {
              ++evals_seen;
              if (switch_at >= 0 && evals_seen > switch_at) dense_phase = true;
              return p->value(x);
            },
            base->smooth(), base->seed(), base->start());
        const RunTrace t = run_named_solver(name, counting, budget, seed, {}, obs);
        deterministic = deterministic && same_trace(t, run_named_solver(name, base, budget, seed));
        if (t.evals_used > budget) ++budget_violations;
        for (std::size_t i = 1; i < t.history.size(); ++i)
          if (t.history[i].best_f > t.history[i - 1].best_f) ++monotone_violations;
        feas.see(worst, at);
        continue;
      }
      const RunTrace t = run_named_solver(name, p, budget, seed, {}, obs);
      const RunTrace again = run_named_solver(name, base, budget, seed);
      deterministic = deterministic && same_trace(t, again);
      if (t.evals_used > budget || static_cast<long>(t.history.size()) != t.evals_used)
        ++budget_violations;
      for (std::size_t i = 0; i < t.history.size(); ++i) {
        if (t.history[i].eval_index != static_cast<long>(i) + 1) ++budget_violations;
        if (i > 0 && t.history[i].best_f > t.history[i - 1].best_f) ++monotone_violations;
      }
      feas.see(std::max(worst, base->manifold()->point_residual(t.final_point)), at);
    }
    out.push_back(flag("solvers", "monotone-trace", name, monotone_violations == 0,
                       std::to_string(monotone_violations) + " increases in best_f"));
    out.push_back(flag("solvers", "budget", name, budget_violations == 0,
                       std::to_string(budget_violations) + " budget or indexing violations"));
    out.push_back(flag("solvers", "determinism", name, deterministic,
                       deterministic ? "reruns identical" : "reruns differ"));
    out.push_back(upper("solvers", "feasibility", name, feas, 1e-8));
    if (name != "zo-rgd")
      out.push_back(upper("solvers", "sufficient-decrease", name, decrease, 1e-12));
    if (replays > 0)
      out.push_back(flag("solvers", "linesearch-replay", name, replay_violations == 0,
                         std::to_string(replay_violations) + " of " + std::to_string(replays) +
                             " accepted steps fail on replay"));
  }

  SolverConfig bad = rds_sb_defaults();
  bad.alpha_eps = 0.0;
  bool rejected = false;
  try {
    run_switching(build_instance("largest-eig", 4, opt.seed), bad, dense_defaults(),
                  SwitchVariant::Plain);
  } catch (const Error& e) {
    rejected = e.code() == ErrorCode::InvalidConfig;
  }
  out.push_back(flag("solvers", "switch-threshold-validation", "rds-dd-plus", rejected,
                     rejected ? "alpha_eps = 0 rejected" : "alpha_eps = 0 accepted"));
}

// --- problems ---------------------------------------------------------------

void problems_for(const std::string& name, const CheckOptions& opt, std::vector<CheckResult>& out) {
  const Index n_p = 10;
  const ProblemHandle p = build_instance(name, n_p, opt.seed);
  const Manifold& m = *p->manifold();
  bool stable = true;
  Worst grad, taylor, opt_gap;
  for (int i = 0; i < 5; ++i) {
    const std::uint64_t s = case_seed(opt, name + "/grad", i);
    const Point x = m.random_point(s);
    const std::string at = "point " + std::to_string(i);
    stable = stable && p->value(x) == p->value(x);
    if (!p->smooth()) continue;
    const VectorXd g = p->euclidean_gradient(x);
    const VectorXd a = m.ambient(x);
    VectorXd fd(a.size());
    const double h = 1e-6;
    for (Index j = 0; j < a.size(); ++j) {
      VectorXd plus = a, minus = a;
      plus(j) += h;
      minus(j) -= h;
      fd(j) = (p->value(Point{plus, std::nullopt}) - p->value(Point{minus, std::nullopt})) / (2 * h);
    }
    grad.see((g - fd).norm() / (1.0 + g.norm()), at);

    Rng rng(mix64(s));
    const VectorXd d = scaled_tangent(m, x, rng, 1.0);
    const double t = 1e-6;
    const double slope = m.project(x, g).dot(d);
    const double quotient = (p->value(m.retract(x, t * d)) - p->value(x)) / t;
    taylor.see(std::abs(quotient - slope) / (1.0 + g.norm()), at);
  }
  out.push_back(flag("problems", "re-evaluation", name, stable,
                     stable ? "bitwise-equal repeated values" : "values differ on re-evaluation"));
  if (p->smooth()) {
    out.push_back(upper("problems", "gradient-fd", name, grad, 1e-5));
    out.push_back(upper("problems", "riemannian-slope", name, taylor, 1e-3));
  } else {
    bool unsupported = false;
    try {
      p->euclidean_gradient(p->start());
    } catch (const Error& e) {
      unsupported = e.code() == ErrorCode::Unsupported;
    }
    out.push_back(flag("problems", "gradient-unsupported", name, unsupported,
                       unsupported ? "nonsmooth gradient refused" : "gradient unexpectedly returned"));
  }
  if (p->known_opt()) {
    Rng rng(mix64(combine_seed(opt.seed, stable_hash(name))));
    for (int i = 0; i < 1000; ++i)
      opt_gap.see(std::max(0.0, *p->known_opt() - p->value(m.sample(rng))), "sample " + std::to_string(i));
    out.push_back(upper("problems", "known-opt-bound", name, opt_gap, 1e-12));
  }
}

// --- bench ------------------------------------------------------------------

ResultTable random_table(Rng& rng, int solvers, int problems, double tau) {
  std::uniform_int_distribution<int> t(1, 40), dim(2, 30);
  std::bernoulli_distribution unsolved(0.2);
  ResultTable table;
  for (int p = 0; p < problems; ++p) {
    const Index n_p = dim(rng);
    for (int s = 0; s < solvers; ++s) {
      ResultRow r;
      r.problem = "p" + std::to_string(p);
      r.n_p = n_p;
      r.solver = "s" + std::to_string(s);
      r.tau = tau;
      if (!unsolved(rng)) r.t_ps = t(rng);
      table.rows.push_back(r);
    }
  }
  return table;
}

bool curves_equal(const std::vector<ProfileCurve>& a, const std::vector<ProfileCurve>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].solver != b[i].solver || a[i].points != b[i].points) return false;
  return true;
}

void bench_checks(const CheckOptions& opt, std::vector<CheckResult>& out) {
  Rng rng(mix64(combine_seed(opt.seed, stable_hash("bench"))));
  long mismatches = 0, shape_violations = 0, permutation_diffs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ResultTable table = random_table(rng, 3, 6, 0.1);
    const auto perf = performance_profile(table, 0.1);
    const auto data = data_profile(table, 0.1, 15.0);
    std::map<std::string, std::map<std::string, std::optional<long>>> t;
    std::map<std::string, Index> dims;
    for (const auto& r : table.rows) {
      t[r.problem][r.solver] = r.t_ps;
      dims[r.problem] = r.n_p;
    }
    for (const auto& c : perf) {
      for (const auto& [alpha, value] : c.points) {
        int count = 0;
        for (const auto& [prob, row] : t) {
          std::optional<long> best;
          for (const auto& [s, v] : row)
            if (v && (!best || *v < *best)) best = v;
          const auto mine = row.at(c.solver);
          if (mine && static_cast<double>(*mine) / static_cast<double>(*best) <= alpha) ++count;
        }
        if (value != static_cast<double>(count) / static_cast<double>(t.size())) ++mismatches;
      }
    }
    for (const auto& c : data) {
      for (const auto& [kappa, value] : c.points) {
        int count = 0;
        for (const auto& [prob, row] : t) {
          const auto mine = row.at(c.solver);
          if (mine && static_cast<double>(*mine) <= kappa * static_cast<double>(dims[prob] + 1)) ++count;
        }
        if (value != static_cast<double>(count) / static_cast<double>(t.size())) ++mismatches;
      }
    }
    for (const auto* curves : {&perf, &data}) {
      for (const auto& c : *curves) {
        for (std::size_t i = 0; i < c.points.size(); ++i) {
          const auto [x, y] = c.points[i];
          if (y < 0.0 || y > 1.0) ++shape_violations;
          if (i > 0 && (x <= c.points[i - 1].first || y < c.points[i - 1].second)) ++shape_violations;
        }
      }
    }
    std::shuffle(table.rows.begin(), table.rows.end(), rng);
    if (!curves_equal(perf, performance_profile(table, 0.1)) ||
        !curves_equal(data, data_profile(table, 0.1, 15.0)))
      ++permutation_diffs;
  }
  out.push_back(flag("bench", "brute-force-equivalence", "profiles", mismatches == 0,
                     std::to_string(mismatches) + " breakpoint mismatches over 50 tables"));
  out.push_back(flag("bench", "monotone-bounded", "profiles", shape_violations == 0,
                     std::to_string(shape_violations) + " shape violations"));
  out.push_back(flag("bench", "order-independence", "profiles", permutation_diffs == 0,
                     std::to_string(permutation_diffs) + " tables changed under permutation"));

  // f_L consistency on a small real grid.
  std::vector<RunRecord> runs;
  for (const char* s : {"rds-sb", "rdse-sb"}) {
    const ProblemHandle p = build_instance("largest-eig", 5, opt.seed);
    const RunTrace tr = run_named_solver(s, p, 60, opt.seed);
    runs.push_back(RunRecord{"largest-eig", 5, opt.seed, s, tr.f0, tr.history, tr.evals_used});
  }
  const ResultTable table = build_result_table(runs, {0.1});
  double f_low = std::numeric_limits<double>::infinity();
  for (const auto& r : table.rows) f_low = std::min(f_low, r.f_best);
  bool consistent = true;
  for (const auto& r : table.rows)
    consistent = consistent && f_low <= r.f_best && converged(f_low, r.f0, f_low, 0.1) && r.t_ps;
  out.push_back(flag("bench", "f_L-consistency", "largest-eig(5)", consistent,
                     consistent ? "f_L below every f_best and converged" : "f_L inconsistent"));
}

}  // namespace

std::vector<ManifoldHandle> desk_manifolds(const CheckOptions& opt) {
  std::vector<ManifoldHandle> ms;
  if (opt.inject_faulty_retraction) {
    ms.push_back(std::make_shared<FaultySphere>(5));
  } else {
    ms.push_back(make_sphere(5));
  }
  ms.push_back(make_product_spheres({3, 4}));
  ms.push_back(make_stiefel(5, 2));
  ms.push_back(make_special_orthogonal(3));
  ms.push_back(make_fixed_rank(6, 5, 2));
  ms.push_back(make_spd(3));
  ms.push_back(make_simplex(4));
  ms.push_back(make_euclidean(4));
  ms.push_back(make_product({make_spd(2), make_spd(2), make_simplex(2)}));
  ms.push_back(make_product({make_special_orthogonal(2), make_special_orthogonal(2)}));
  return ms;
}

std::vector<CheckResult> check_geometry(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (const auto& m : desk_manifolds(opt)) geometry_for(*m, opt, out);
  return out;
}

std::vector<CheckResult> check_spanning(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (const auto& m : desk_manifolds(opt)) spanning_for(*m, opt, out);
  return out;
}

std::vector<CheckResult> check_solvers(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  stepsize_decay(opt, out);
  solver_runs(opt, out);
  return out;
}

std::vector<CheckResult> check_problems(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (const auto& name : problem_names()) problems_for(name, opt, out);
  return out;
}

std::vector<CheckResult> check_bench(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  bench_checks(opt, out);
  return out;
}

std::vector<CheckResult> check_all(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (auto* suite : {&check_geometry, &check_spanning, &check_solvers, &check_problems,
                      &check_bench}) {
    auto part = suite(opt);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

void print_report(std::ostream& os, const std::vector<CheckResult>& results) {
  std::size_t failed = 0;
  for (const auto& r : results) {
    char margin[32];
    std::snprintf(margin, sizeof margin, "%+.3e", r.margin);
    os << (r.passed ? "PASS " : "FAIL ") << r.suite << '/' << r.name << " [" << r.subject
       << "] margin " << margin << "  " << r.detail << '\n';
    if (!r.passed) ++failed;
  }
  os << results.size() - failed << " passed, " << failed << " failed\n";
}

}  // namespace rdsopt
