#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "rdsopt/bench.hpp"

using namespace rdsopt;
using rdsopt::testing::uniform;

namespace {

ResultRow row(std::string problem, Index n_p, std::string solver, double tau,
              std::optional<long> t) {
  ResultRow r;
  r.problem = std::move(problem);
  r.n_p = n_p;
  r.solver = std::move(solver);
  r.tau = tau;
  r.t_ps = t;
  r.f0 = 1.0;
  r.f_best = 0.0;
  r.evals_used = t.value_or(100);
  return r;
}

using Key = std::tuple<std::string, Index, std::uint64_t>;

/// Exact rational test num / den <= a via an integer mantissa of a.
bool ratio_at_most(long num, long den, long double a) {
  if (a <= 0) return false;
  const int exp = std::ilogb(static_cast<double>(a)) - 52;
  const auto mant = static_cast<__int128>(std::scalbn(static_cast<double>(a), -exp));
  const __int128 lhs = static_cast<__int128>(num);
  const __int128 rhs = mant * den;
  return exp >= 0 ? lhs <= (rhs << exp) : (lhs << -exp) <= rhs;
}

/// Direct evaluation of the profile formulas in extended precision.
struct Oracle {
  std::map<Key, std::map<std::string, std::optional<long>>> t;
  std::set<std::string> solvers;

  explicit Oracle(const ResultTable& table, double tau) {
    for (const auto& r : table.rows)
      if (r.tau == tau) {
        solvers.insert(r.solver);
        t[{r.problem, r.n_p, r.seed}][r.solver] = r.t_ps;
      }
  }

  long double performance(const std::string& s, long double a) const {
    long count = 0;
    for (const auto& [key, by] : t) {
      const auto it = by.find(s);
      if (it == by.end() || !it->second) continue;
      long best = *it->second;
      for (const auto& [_, v] : by)
        if (v) best = std::min(best, *v);
      if (ratio_at_most(*it->second, best, a)) ++count;
    }
    return static_cast<long double>(count) / t.size();
  }

  long double data(const std::string& s, long double kappa) const {
    long count = 0;
    for (const auto& [key, by] : t) {
      const auto it = by.find(s);
      if (it == by.end() || !it->second) continue;
      if (ratio_at_most(*it->second, std::get<1>(key) + 1, kappa)) ++count;
    }
    return static_cast<long double>(count) / t.size();
  }
};

ResultTable random_table(Rng& rng) {
  ResultTable table;
  const int problems = 1 + static_cast<int>(rng() % 6);
  const int solvers = 1 + static_cast<int>(rng() % 4);
  for (int p = 0; p < problems; ++p) {
    const Index n_p = 2 + static_cast<Index>(rng() % 199);
    for (int s = 0; s < solvers; ++s)
      for (double tau : {0.1, 1e-3}) {
        std::optional<long> t;
        if (uniform(rng) < 0.75) t = 1 + static_cast<long>(rng() % (100 * (n_p + 1)));
        ResultRow r = row("p" + std::to_string(p), n_p, "s" + std::to_string(s), tau, t);
        r.seed = rng() % 3;
        table.rows.push_back(r);
      }
  }
  // Keys must be unique per (problem, n_p, seed, solver, tau).
  std::map<std::tuple<std::string, Index, std::uint64_t, std::string, double>, ResultRow> uniq;
  for (const auto& r : table.rows) uniq.emplace(std::make_tuple(r.problem, r.n_p, r.seed, r.solver, r.tau), r);
  table.rows.clear();
  for (const auto& [_, r] : uniq) table.rows.push_back(r);
  return table;
}

}  // namespace

TEST(Converged, Examples) {
  EXPECT_TRUE(converged(0.05, 1.0, 0.0, 0.1));
  EXPECT_FALSE(converged(0.15, 1.0, 0.0, 0.1));
  EXPECT_TRUE(converged(0.1, 1.0, 0.0, 0.1));
  // f0 == f_L: only the baseline itself converges.
  EXPECT_TRUE(converged(2.0, 2.0, 2.0, 0.5));
  EXPECT_FALSE(converged(2.1, 2.0, 2.0, 0.5));
}

TEST(Converged, RejectsBadInputs) {
  try {
    converged(0.0, 1.0, 2.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidBaseline);
  }
  EXPECT_THROW(converged(0.0, 1.0, 0.0, 0.0), Error);
  EXPECT_THROW(converged(0.0, 1.0, 0.0, 1.0), Error);
}

TEST(EvalsToConverge, FirstPassingIndex) {
  const std::vector<TraceEntry> h{{1, 1.0}, {2, 0.2}};
  EXPECT_EQ(evals_to_converge(h, 1.0, 0.0, 0.25), 2);
  EXPECT_EQ(evals_to_converge(h, 1.0, 0.0, 0.1), std::nullopt);
  EXPECT_EQ(evals_to_converge({}, 1.0, 0.0, 0.1), std::nullopt);
}

TEST(ResultTableBuild, BaselineIsBestOverSolvers) {
  RunRecord a{"q", 4, 0, "s1", 1.0, {{1, 1.0}, {2, 0.5}, {3, 0.4}}, 3};
  RunRecord b{"q", 4, 0, "s2", 1.0, {{1, 1.0}, {2, 0.0}}, 2};
  const ResultTable t = build_result_table({a, b}, {0.5});
  ASSERT_EQ(t.rows.size(), 2u);
  // f_L = 0: s1 needs f <= 0.5, reached at eval 2; s2 at eval 2.
  for (const auto& r : t.rows) {
    ASSERT_TRUE(r.t_ps.has_value());
    EXPECT_EQ(*r.t_ps, 2);
  }
  const ResultTable tight = build_result_table({a, b}, {0.1});
  EXPECT_FALSE(tight.rows[0].t_ps.has_value());
  EXPECT_EQ(tight.rows[1].t_ps, 2);
}

TEST(PerformanceProfile, TwoSolverExample) {
  ResultTable t;
  t.rows = {row("p1", 5, "s1", 0.1, 10), row("p2", 5, "s1", 0.1, 30),
            row("p1", 5, "s2", 0.1, 20), row("p2", 5, "s2", 0.1, 15)};
  const auto curves = performance_profile(t, 0.1);
  ASSERT_EQ(curves.size(), 2u);
  for (const auto& c : curves) {
    EXPECT_DOUBLE_EQ(c.value_at(1.0), 0.5) << c.solver;
    EXPECT_DOUBLE_EQ(c.value_at(2.0), 1.0) << c.solver;
    EXPECT_DOUBLE_EQ(c.value_at(1.999), 0.5) << c.solver;
  }
}

TEST(PerformanceProfile, SingleSolverAndUnsolved) {
  ResultTable t;
  t.rows = {row("p1", 5, "s", 0.1, 10), row("p2", 5, "s", 0.1, std::nullopt),
            row("p3", 5, "s", 0.1, 7)};
  const auto c = performance_profile(t, 0.1).front();
  EXPECT_DOUBLE_EQ(c.value_at(1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.value_at(1e9), 2.0 / 3.0);
}

TEST(DataProfile, ThresholdExample) {
  ResultTable t;
  t.rows = {row("p", 4, "s", 0.1, 10)};
  const auto c = data_profile(t, 0.1, 100).front();
  EXPECT_EQ(c.value_at(0.0), 0.0);
  EXPECT_EQ(c.value_at(1.999), 0.0);
  EXPECT_EQ(c.value_at(2.0), 1.0);
  EXPECT_EQ(c.value_at(100.0), 1.0);
  EXPECT_EQ(c.points.back().first, 100.0);
}

TEST(DataProfile, UnitBudgetBoundaryIsInclusive) {
  ResultTable t;
  t.rows = {row("a", 3, "s", 0.1, 4), row("b", 9, "s", 0.1, 10),
            row("c", 9, "s", 0.1, std::nullopt)};
  const auto c = data_profile(t, 0.1).front();
  EXPECT_DOUBLE_EQ(c.value_at(1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.value_at(100.0), 2.0 / 3.0);
  EXPECT_EQ(data_threshold(10, 9), 1.0);
}

TEST(Profiles, EmptyInputRejected) {
  ResultTable t;
  for (auto f : {+[](const ResultTable& x) { return performance_profile(x, 0.1); },
                 +[](const ResultTable& x) { return data_profile(x, 0.1); }}) {
    try {
      f(t);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
    }
  }
  t.rows = {row("p", 4, "s", 0.5, 3)};
  EXPECT_THROW(performance_profile(t, 0.1), Error);
}

TEST(Buckets, RangesAndFilter) {
  EXPECT_TRUE(in_bucket(2, SizeBucket::Small));
  EXPECT_TRUE(in_bucket(15, SizeBucket::Small));
  EXPECT_TRUE(in_bucket(16, SizeBucket::Medium));
  EXPECT_TRUE(in_bucket(50, SizeBucket::Medium));
  EXPECT_TRUE(in_bucket(51, SizeBucket::Large));
  EXPECT_TRUE(in_bucket(200, SizeBucket::Large));
  EXPECT_FALSE(in_bucket(51, SizeBucket::Medium));
  EXPECT_TRUE(in_bucket(7, SizeBucket::All));
  EXPECT_EQ(parse_bucket("medium"), SizeBucket::Medium);
  EXPECT_THROW(parse_bucket("huge"), Error);
  ResultTable t;
  t.rows = {row("p", 100, "s", 0.1, 3)};
  try {
    filter_bucket(t, SizeBucket::Small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
  EXPECT_EQ(filter_bucket(t, SizeBucket::Large).rows.size(), 1u);
}

TEST(Csv, ResultTableRoundTrip) {
  Rng rng(5);
  ResultTable t = random_table(rng);
  for (auto& r : t.rows) {
    r.f0 = uniform(rng, -1e3, 1e3);
    r.f_best = r.f0 - uniform(rng) * 1e-7;
  }
  std::stringstream ss;
  write_result_table(ss, t);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kResultHeader);
  const ResultTable back = read_result_table(ss);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& a = t.rows[i];
    const auto& b = back.rows[i];
    EXPECT_EQ(a.problem, b.problem);
    EXPECT_EQ(a.n_p, b.n_p);
    EXPECT_EQ(a.seed, b.seed);
    EXPECT_EQ(a.solver, b.solver);
    EXPECT_EQ(a.tau, b.tau);
    EXPECT_EQ(a.t_ps, b.t_ps);
    EXPECT_EQ(a.f0, b.f0);
    EXPECT_EQ(a.f_best, b.f_best);
    EXPECT_EQ(a.evals_used, b.evals_used);
  }
}

TEST(Csv, MalformedInputRejected) {
  std::stringstream bad_header("a,b\n");
  EXPECT_THROW(read_result_table(bad_header), Error);
  std::stringstream short_row(std::string(kResultHeader) + "\nq,4,0,s\n");
  EXPECT_THROW(read_result_table(short_row), Error);
}

TEST(Svg, ContainsCurvesAndLegend) {
  ResultTable t;
  t.rows = {row("p1", 5, "alpha", 0.1, 10), row("p1", 5, "beta", 0.1, 20)};
  const std::string svg = render_profiles_svg(performance_profile(t, 0.1), "demo");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("alpha"), std::string::npos);
  EXPECT_NE(svg.find("beta"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e-3), "0.001");
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const double v = uniform(rng, -1, 1) * std::pow(10.0, uniform(rng, -30, 30));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

// --- properties -------------------------------------------------------------

TEST(Property, ProfilesMatchBruteForce) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const ResultTable table = random_table(rng);
    for (double tau : {0.1, 1e-3}) {
      const Oracle oracle(table, tau);
      const auto perf = performance_profile(table, tau);
      const auto data = data_profile(table, tau, 100);
      ASSERT_EQ(perf.size(), oracle.solvers.size());
      for (const auto& c : perf) {
        std::vector<double> xs{1.0, 1.5, 2.0, 10.0, 1e6};
        for (const auto& [a, _] : c.points) xs.push_back(a);
        for (int i = 0; i < 20; ++i) xs.push_back(uniform(rng, 1, 50));
        for (double a : xs)
          ASSERT_EQ(c.value_at(a), static_cast<double>(oracle.performance(c.solver, a)))
              << "trial " << trial << " solver " << c.solver << " a " << a;
      }
      for (const auto& c : data) {
        std::vector<double> xs{0.0, 1.0, 50.0, 100.0};
        for (const auto& [k, _] : c.points) xs.push_back(k);
        for (int i = 0; i < 20; ++i) xs.push_back(uniform(rng, 0, 100));
        for (double k : xs)
          ASSERT_EQ(c.value_at(k), static_cast<double>(oracle.data(c.solver, k)))
              << "trial " << trial << " solver " << c.solver << " k " << k;
      }
    }
  }
}

TEST(Property, CurvesMonotoneAndBounded) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const ResultTable table = random_table(rng);
    for (const auto& c : performance_profile(table, 0.1)) {
      ASSERT_EQ(c.points.front().first, 1.0);
      for (std::size_t i = 1; i < c.points.size(); ++i) {
        ASSERT_LT(c.points[i - 1].first, c.points[i].first);
        ASSERT_LE(c.points[i - 1].second, c.points[i].second);
      }
      ASSERT_GE(c.points.front().second, 0.0);
      ASSERT_LE(c.points.back().second, 1.0);
    }
    for (const auto& c : data_profile(table, 0.1, 100)) {
      ASSERT_EQ(c.points.front().first, 0.0);
      ASSERT_EQ(c.points.back().first, 100.0);
      for (std::size_t i = 1; i < c.points.size(); ++i)
        ASSERT_LE(c.points[i - 1].second, c.points[i].second);
      ASSERT_LE(c.points.back().second, 1.0);
    }
  }
}

TEST(Property, RowOrderDoesNotMatter) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    ResultTable table = random_table(rng);
    const auto p1 = performance_profile(table, 1e-3);
    const auto d1 = data_profile(table, 1e-3);
    std::shuffle(table.rows.begin(), table.rows.end(), rng);
    const auto p2 = performance_profile(table, 1e-3);
    const auto d2 = data_profile(table, 1e-3);
    ASSERT_EQ(p1.size(), p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
      ASSERT_EQ(p1[i].points, p2[i].points);
      ASSERT_EQ(d1[i].points, d2[i].points);
    }
  }
}

TEST(Property, DataThresholdIsSmallestSufficientKappa) {
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const Index n_p = 2 + static_cast<Index>(rng() % 199);
    const long t = 1 + static_cast<long>(rng() % 30000);
    const double k = data_threshold(t, n_p);
    ASSERT_TRUE(ratio_at_most(t, n_p + 1, k));
    ASSERT_FALSE(ratio_at_most(t, n_p + 1, std::nextafter(k, 0.0)));
  }
}

TEST(Property, BaselineNeverAboveAnyBestValue) {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<RunRecord> runs;
    for (int s = 0; s < 3; ++s) {
      RunRecord r{"q", 6, 0, "s" + std::to_string(s), 5.0, {}, 0};
      double best = 5.0;
      for (long e = 1; e <= 20; ++e) {
        best = std::min(best, uniform(rng, -3, 6));
        r.history.push_back({e, best});
      }
      r.evals_used = 20;
      runs.push_back(r);
    }
    const ResultTable t = build_result_table(runs, {0.1, 1e-3});
    double f_l = 5.0;
    for (const auto& r : runs) f_l = std::min(f_l, r.history.back().best_f);
    for (const auto& row : t.rows) {
      ASSERT_GE(row.f_best, f_l);
      const auto& h = std::find_if(runs.begin(), runs.end(), [&](const RunRecord& r) {
                        return r.solver == row.solver;
                      })->history;
      ASSERT_EQ(row.t_ps, evals_to_converge(h, 5.0, f_l, row.tau));
    }
  }
}
