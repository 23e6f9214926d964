#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rdsopt/bench.hpp"
#include "rdsopt/solvers.hpp"

namespace rdsopt {

/// A solver x problem grid together with everything needed to rerun it.
struct ExperimentConfig {
  std::vector<std::string> problems;
  std::vector<Index> dims;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> solvers;
  long budget_multiplier = 100;  // budget = multiplier * (n_p + 1)
  std::vector<double> taus{1e-1, 1e-3};
  std::map<std::string, SolverOverrides> overrides;
  std::string out_dir = "results";
  int threads = 0;  // 0: hardware concurrency

  /// Throws InvalidConfig / UnknownProblem / InvalidDimension, naming the
  /// offending entry.
  void validate() const;
};

/// Applies one `key = value` setting. Keys: problems, dims, seeds, solvers,
/// budget_mult, tau, out, threads, and <solver>.<param> overrides with
/// param in {gamma, gamma1, gamma2, alpha0, alpha_eps, mu, dense.gamma,
/// dense.gamma1, dense.gamma2}.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads a flat key-value file ('#' starts a comment).
void load_config_file(ExperimentConfig& cfg, const std::string& path);

/// Seed handed to a solver for one grid cell.
std::uint64_t run_seed(const std::string& problem, Index n_p, std::uint64_t seed,
                       const std::string& solver);

struct InstanceInfo {
  std::string problem;
  Index n_p = 0;
  std::uint64_t seed = 0;
  std::string manifold;
  Index ambient_dim = 0;
};

struct ExperimentResult {
  std::vector<InstanceInfo> instances;
  std::vector<RunRecord> runs;  // grid order: problem, dim, seed, solver
  ResultTable table;
};

/// Optional per-cell observer factory (called once per run).
using ObserverFactory =
    std::function<RunObserver(const ProblemHandle& problem, const std::string& solver)>;

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ObserverFactory& observe = {});

/// results.csv, instances.csv and traces/<problem>_<n_p>_<seed>_<solver>.csv.
void write_experiment(const ExperimentResult& result, const std::string& out_dir);

std::vector<std::string> split_list(const std::string& s);

}  // namespace rdsopt
