#include <cmath>

#include <gtest/gtest.h>

#include "rdsopt/solvers.hpp"

using namespace rdsopt;

namespace {

Point pt(std::initializer_list<double> v) {
  VectorXd x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x(i++) = d;
  return Point{x, std::nullopt};
}

ProblemHandle circle_problem() {
  return make_custom(
      "minus-x1", make_sphere(2), [](const Point& x) { return -x.coords(0); }, true, 0,
      pt({0, 1}));
}

ProblemHandle constant_problem(ManifoldHandle m) {
  return make_custom(
      "constant", std::move(m), [](const Point&) { return 2.5; }, true);
}

ProblemHandle diag_sphere() {
  return make_largest_eig(VectorXd::LinSpaced(5, 1, 5).asDiagonal().toDenseMatrix());
}

ProblemHandle l1_sphere(Index n, std::uint64_t seed) {
  return make_sparsest_vector(MatrixXd::Identity(n, n), seed);
}

SolverConfig with(SolverConfig c, long budget, std::uint64_t seed = 0) {
  c.budget = budget;
  c.seed = seed;
  return c;
}

/// First evaluation index whose best value reaches the target.
long evals_to_reach(const RunTrace& t, double target) {
  for (const auto& e : t.history)
    if (e.best_f <= target) return e.eval_index;
  return t.evals_used + 1;
}

}  // namespace

TEST(Linesearch, ExpandsOnceThenStops) {
  ProblemInstance inst(circle_problem());
  const Point x = pt({0, 1});
  const LinesearchResult r = linesearch_extrapolate(
      inst, x, 0.0, 1.0, TangentVector{pt({1, 0}).coords, fingerprint(x)}, rdse_sb_defaults());
  EXPECT_DOUBLE_EQ(r.alpha, 1.0);
  EXPECT_DOUBLE_EQ(r.alpha_next, 1.0);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(inst.evals(), 2);
  // Hand oracle: R(x, a d) = (a, 1)/sqrt(1 + a^2).
  EXPECT_NEAR(r.value, -1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(inst.history()[1].best_f, std::min(-1 / std::sqrt(2.0), -3.12 / std::sqrt(1 + 3.12 * 3.12)), 1e-15);
  EXPECT_GE(-3.12 / std::sqrt(1 + 3.12 * 3.12), -0.11 * 3.12 * 3.12);
}

TEST(Linesearch, AscentDirectionExitsEarly) {
  ProblemInstance inst(circle_problem());
  const Point x = pt({0, 1});
  const LinesearchResult r = linesearch_extrapolate(
      inst, x, 0.0, 1.0, TangentVector{pt({-1, 0}).coords, fingerprint(x)}, rdse_sb_defaults());
  EXPECT_EQ(r.alpha, 0.0);
  EXPECT_DOUBLE_EQ(r.alpha_next, 0.81);
  EXPECT_EQ(inst.evals(), 1);
  EXPECT_EQ(fingerprint(r.point), fingerprint(x));
}

TEST(Linesearch, ConstantObjectiveShrinks) {
  for (double a : {1e-8, 0.3, 1.0, 50.0}) {
    ProblemInstance inst(constant_problem(make_sphere(2)));
    const Point x = pt({0, 1});
    const LinesearchResult r = linesearch_extrapolate(
        inst, x, 2.5, a, TangentVector{pt({1, 0}).coords, fingerprint(x)}, rdse_sb_defaults());
    EXPECT_EQ(r.alpha, 0.0);
    EXPECT_DOUBLE_EQ(r.alpha_next, 0.81 * a);
    EXPECT_EQ(inst.evals(), 1);
  }
}

TEST(Linesearch, UnitExpansionReturnsTentative) {
  ProblemInstance inst(circle_problem());
  const Point x = pt({0, 1});
  const LinesearchResult r = linesearch_extrapolate(
      inst, x, 0.0, 0.5, TangentVector{pt({1, 0}).coords, fingerprint(x)}, rds_sb_defaults());
  EXPECT_EQ(r.alpha, 0.5);
  EXPECT_EQ(r.alpha_next, 0.5);
  EXPECT_EQ(inst.evals(), 1);
}

TEST(Linesearch, RejectsForeignDirection) {
  ProblemInstance inst(circle_problem());
  try {
    linesearch_extrapolate(inst, pt({0, 1}), 0.0, 1.0, TangentVector{pt({1, 0}).coords, 12345},
                           rdse_sb_defaults());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BaseMismatch);
  }
}

TEST(Linesearch, TruncatesWhenBudgetRunsOut) {
  ProblemInstance inst(circle_problem(), 2);
  const Point x = pt({0, 1});
  inst.evaluate(x);
  const LinesearchResult r = linesearch_extrapolate(
      inst, x, 0.0, 0.01, TangentVector{pt({1, 0}).coords, fingerprint(x)}, rdse_sb_defaults());
  EXPECT_TRUE(r.truncated);
  EXPECT_DOUBLE_EQ(r.alpha, 0.01);
  EXPECT_EQ(inst.evals(), 2);
}

TEST(RdsSb, ConstantObjectiveDecaysGeometrically) {
  const RunTrace t = run_rds_sb(constant_problem(make_stiefel(4, 2)), with(rds_sb_defaults(), 400));
  ASSERT_FALSE(t.stepsizes.empty());
  double expected = 1.0;
  for (std::size_t k = 0; k < t.stepsizes.size(); ++k, expected *= 0.61) {
    EXPECT_EQ(t.stepsizes[k], expected);
    EXPECT_EQ(t.accepted[k], 0.0);
  }
  EXPECT_EQ(t.success_count, 0);
  EXPECT_EQ(t.best_f, 2.5);
  EXPECT_EQ(fingerprint(t.final_point), fingerprint(make_stiefel(4, 2)->random_point(0)));
  for (const auto& e : t.history) EXPECT_EQ(e.best_f, 2.5);
}

TEST(RdsSb, BudgetCapsEvaluations) {
  const RunTrace t = run_rds_sb(diag_sphere(), with(rds_sb_defaults(), 3));
  EXPECT_EQ(t.evals_used, 3);
  EXPECT_EQ(t.history.size(), 3u);
}

TEST(RdsSb, FindsLargestEigenvalue) {
  const RunTrace t = run_rds_sb(diag_sphere(), with(rds_sb_defaults(), 5000));
  EXPECT_LE(t.best_f, -5 + 1e-3);
  EXPECT_LE(t.evals_used, 5000);
}

TEST(RdseSb, ConstantObjectiveShrinksOncePerSweep) {
  const auto m = make_sphere(3);
  const Point x0 = m->random_point(0);
  const RunTrace t = run_rdse_sb(constant_problem(m), with(rdse_sb_defaults(), 61));
  const std::size_t k = 2 * 3;  // generic point: every slot active
  ASSERT_EQ(t.stepsizes.size(), 60u);
  for (std::size_t i = 0; i < t.stepsizes.size(); ++i)
    EXPECT_DOUBLE_EQ(t.stepsizes[i], std::pow(0.81, static_cast<double>(i / k)));
  ASSERT_EQ(t.tentative.size(), k);
  for (double a : t.tentative) EXPECT_DOUBLE_EQ(a, std::pow(0.81, 10.0));
  EXPECT_EQ(fingerprint(t.final_point), fingerprint(x0));
}

TEST(RdseSb, FindsLargestEigenvalueAndBeatsRdsSb) {
  int fewer = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = make_largest_eig(VectorXd::LinSpaced(5, 1, 5).asDiagonal().toDenseMatrix(), s);
    const RunTrace e = run_rdse_sb(p, with(rdse_sb_defaults(), 5000, s));
    const RunTrace b = run_rds_sb(p, with(rds_sb_defaults(), 5000, s));
    EXPECT_LE(e.best_f, -5 + 1e-3) << "seed " << s;
    EXPECT_LE(b.best_f, -5 + 1e-3) << "seed " << s;
    if (evals_to_reach(e, -5 + 1e-3) <= evals_to_reach(b, -5 + 1e-3)) ++fewer;
  }
  EXPECT_GE(fewer, 7);
}

TEST(RdseSb, AcceptedStepsDecreaseSufficiently) {
  const SolverConfig cfg = with(rdse_sb_defaults(), 2000);
  RunObserver obs;
  long accepted = 0;
  obs.on_step = [&](const StepEvent& e) {
    if (!e.accepted) return;
    ++accepted;
    EXPECT_LE(e.f_after, e.f_before - cfg.gamma * e.alpha * e.alpha);
  };
  run_rdse_sb(build_instance("largest-sv", 12, 3), cfg, obs);
  EXPECT_GT(accepted, 0);
}

TEST(RdsDd, ConstantObjectiveDecaysGeometrically) {
  const RunTrace t = run_rds_dd(constant_problem(make_spd(2)), with(dense_defaults(), 200, 9));
  ASSERT_EQ(t.stepsizes.size(), 199u);
  double expected = 1.0;
  for (std::size_t k = 0; k < t.stepsizes.size(); ++k, expected *= 0.95)
    EXPECT_EQ(t.stepsizes[k], expected);
}

TEST(RdsDd, ZeroDirectionSpendsNoEvaluation) {
  // On the 1-point sphere S^0 in R^1 every projected direction vanishes.
  const auto m = make_sphere(1);
  const RunTrace t = run_rds_dd(constant_problem(m), with(dense_defaults(), 5, 0));
  EXPECT_EQ(t.evals_used, 1);
  ASSERT_GT(t.stepsizes.size(), 10u);
  EXPECT_DOUBLE_EQ(t.stepsizes[1], 0.95);
}

TEST(RdsDd, SparsestToy) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const RunTrace t = run_rds_dd(l1_sphere(4, s), with(dense_defaults(), 4000, s));
    EXPECT_LE(t.best_f, 1 + 1e-2) << "seed " << s;
  }
}

TEST(RdseDd, SparsestToy) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const RunTrace t = run_rdse_dd(l1_sphere(4, s), with(dense_defaults(), 4000, s));
    EXPECT_LE(t.best_f, 1 + 1e-2) << "seed " << s;
  }
}

TEST(RdseDd, ConstantObjectiveNeverMoves) {
  const RunTrace t = run_rdse_dd(constant_problem(make_sphere(3)), with(dense_defaults(), 50, 1));
  double expected = 1.0;
  for (std::size_t k = 0; k < t.stepsizes.size(); ++k, expected *= 0.95) {
    EXPECT_EQ(t.accepted[k], 0.0);
    EXPECT_EQ(t.stepsizes[k], expected);
  }
}

TEST(RdseDd, FirstIterationOnCircle) {
  // On S^1 at (0,1) every unit tangent is +-(1,0); the descent one takes
  // alpha = 1 under the extrapolation parameters above.
  SolverConfig cfg = rdse_sb_defaults();
  cfg.budget = 100;
  std::vector<LinesearchEvent> events;
  RunObserver obs;
  obs.on_linesearch = [&](const LinesearchEvent& e) { events.push_back(e); };
  run_rdse_dd(circle_problem(), cfg, obs);
  ASSERT_FALSE(events.empty());
  const LinesearchEvent& first = events.front();
  EXPECT_NEAR(std::abs(first.d(0)), 1.0, 1e-12);
  if (first.d(0) > 0) {
    EXPECT_DOUBLE_EQ(first.alpha, 1.0);
    ASSERT_GE(events.size(), 2u);
    const VectorXd x1 = make_sphere(2)->retract(pt({0, 1}), first.d).coords;
    EXPECT_LT((events[1].x.coords - x1).norm(), 1e-15);
  } else {
    EXPECT_EQ(first.alpha, 0.0);
    EXPECT_DOUBLE_EQ(first.alpha_next, 0.81);
  }
}

TEST(Switching, RejectsZeroThreshold) {
  SolverConfig smooth = with(rds_sb_defaults(), 100);
  smooth.alpha_eps = 0.0;
  EXPECT_THROW(run_switching(diag_sphere(), smooth, dense_defaults(), SwitchVariant::Plain),
               Error);
  EXPECT_THROW(run_switching(diag_sphere(), smooth, dense_defaults(), SwitchVariant::Extrapolated),
               Error);
}

TEST(Switching, LargeThresholdSwitchesAtFirstShrink) {
  SolverConfig smooth = with(rds_sb_defaults(), 300, 4);
  smooth.alpha_eps = 2.0;
  const auto p = constant_problem(make_sphere(3));
  const RunTrace t = run_switching(p, smooth, dense_defaults(), SwitchVariant::Plain);
  ASSERT_TRUE(t.switch_eval.has_value());
  // First RDS-SB iteration polls all 6 slots, then the dense phase restarts at alpha0.
  EXPECT_EQ(*t.switch_eval, 1 + 6);
  EXPECT_DOUBLE_EQ(t.stepsizes[0], 1.0);
  double expected = 1.0;
  for (std::size_t k = 1; k < t.stepsizes.size(); ++k, expected *= 0.95)
    EXPECT_EQ(t.stepsizes[k], expected);
}

TEST(Switching, SparsestSwitchesBeforeBudget) {
  int switched = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = build_instance("sparsest-vector", 10, s);
    const RunTrace t = run_named_solver("rdse-dd-plus", p, 4000, s);
    if (t.switch_eval && *t.switch_eval < 4000) ++switched;
  }
  EXPECT_GE(switched, 8);
}

TEST(ZoRgd, RefusesNonsmoothAndValidatesMu) {
  EXPECT_THROW(run_zo_rgd(l1_sphere(3, 0), with(SolverConfig{}, 10)), Error);
  EXPECT_THROW(run_zo_rgd(diag_sphere(), with(SolverConfig{}, 10), 0.0), Error);
}

TEST(ZoRgd, ConstantObjectiveStaysPut) {
  const auto m = make_sphere(4);
  const RunTrace t = run_zo_rgd(constant_problem(m), with(SolverConfig{}, 41, 3));
  EXPECT_EQ(fingerprint(t.final_point), fingerprint(m->random_point(0)));
  EXPECT_EQ(t.evals_used, 41);
}

TEST(Determinism, SameSeedSameTrace) {
  for (const auto& name : solver_names()) {
    const auto p = build_instance(name == "zo-rgd" ? "largest-eig" : "sparsest-vector", 8, 2);
    const RunTrace a = run_named_solver(name, p, 500, 11);
    const RunTrace b = run_named_solver(name, p, 500, 11);
    ASSERT_EQ(a.history.size(), b.history.size()) << name;
    for (std::size_t i = 0; i < a.history.size(); ++i)
      ASSERT_EQ(a.history[i].best_f, b.history[i].best_f) << name;
    EXPECT_EQ(fingerprint(a.final_point), fingerprint(b.final_point)) << name;
  }
}

TEST(Named, UnknownSolverRejected) {
  EXPECT_THROW(run_named_solver("nelder-mead", diag_sphere(), 10, 0), Error);
}
