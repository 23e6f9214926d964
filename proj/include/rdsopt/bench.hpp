#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdsopt/problem.hpp"

namespace rdsopt {

/// One (problem instance, solver, tau) outcome. `t_ps` is empty when the
/// solver never met the convergence test within its budget.
struct ResultRow {
  std::string problem;
  Index n_p = 0;
  std::uint64_t seed = 0;
  std::string solver;
  double tau = 0.0;
  std::optional<long> t_ps;
  double f0 = 0.0;
  double f_best = 0.0;
  long evals_used = 0;
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

enum class ProfileKind { Performance, Data };
const char* to_string(ProfileKind kind);

struct ProfileCurve {
  std::string solver;
  ProfileKind kind = ProfileKind::Performance;
  double tau = 0.0;
  std::vector<std::pair<double, double>> points;  // (abscissa, value)

  /// Right-continuous step evaluation.
  double value_at(double abscissa) const;
};

/// f_k <= f_L + tau (f0 - f_L).
bool converged(double f_k, double f0, double f_L, double tau);

/// Smallest eval index whose best value passes `converged`, if any.
std::optional<long> evals_to_converge(const std::vector<TraceEntry>& history, double f0,
                                      double f_L, double tau);

/// Everything the table needs from one finished run.
struct RunRecord {
  std::string problem;
  Index n_p = 0;
  std::uint64_t seed = 0;
  std::string solver;
  double f0 = 0.0;
  std::vector<TraceEntry> history;
  long evals_used = 0;
};

/// Builds rows for every run and tau. f_L is the best value reached by any
/// solver on the same (problem, n_p, seed).
ResultTable build_result_table(const std::vector<RunRecord>& runs,
                               const std::vector<double>& taus);

std::vector<ProfileCurve> performance_profile(const ResultTable& table, double tau);
/// Data profile over kappa in [0, kappa_max] (budget multiplier).
std::vector<ProfileCurve> data_profile(const ResultTable& table, double tau,
                                       double kappa_max = 100.0);

/// Smallest double kappa with t <= kappa * (n_p + 1), compared exactly.
double data_threshold(long t, Index n_p);

enum class SizeBucket { All, Small, Medium, Large };
SizeBucket parse_bucket(const std::string& s);
bool in_bucket(Index n_p, SizeBucket bucket);
ResultTable filter_bucket(const ResultTable& table, SizeBucket bucket);

inline constexpr const char* kResultHeader =
    "problem,n_p,seed,solver,tau,t_ps,f0,f_best,evals_used";
inline constexpr const char* kProfileHeader = "solver,kind,tau,abscissa,value";
inline constexpr const char* kTraceHeader = "eval_index,best_f";

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

void write_result_table(std::ostream& os, const ResultTable& table);
ResultTable read_result_table(std::istream& is);
void write_profiles(std::ostream& os, const std::vector<ProfileCurve>& curves);
void write_trace(std::ostream& os, const std::vector<TraceEntry>& history);

/// Self-contained SVG of step curves with a legend.
std::string render_profiles_svg(const std::vector<ProfileCurve>& curves,
                                const std::string& title);

}  // namespace rdsopt
