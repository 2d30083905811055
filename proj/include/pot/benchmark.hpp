#pragma once

#include "pot/simulate.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace pot {

enum class Estimator { kgaps_mle, intervals };
const char* to_string(Estimator estimator);
Estimator parse_estimator(const std::string& name);

struct BenchmarkConfig {
  std::vector<ProcessSpec> processes;  // n and parameters per process; seed unused
  std::vector<Estimator> estimators{Estimator::kgaps_mle, Estimator::intervals};
  int reps = 100;
  std::vector<double> p_grid{0.95, 0.96, 0.97, 0.98, 0.99};
  std::map<ProcessKind, int> K_map{{ProcessKind::ar1_cauchy, 1},
                                   {ProcessKind::ar2_pareto, 6},
                                   {ProcessKind::logistic_markov, 5},
                                   {ProcessKind::farima, 1},
                                   {ProcessKind::exact_mixture, 1},
                                   {ProcessKind::exact_gpd, 1}};
  std::uint64_t master_seed = 1;
  unsigned threads = 0;
};

struct BenchmarkRow {
  std::string process;
  Estimator estimator = Estimator::kgaps_mle;
  double quantile = 0.0;
  int K = 0;
  Index n = 0;
  int reps = 0;
  int valid = 0;  // replicates giving an estimate
  double median_rel_bias = 0.0;
  double rmse = 0.0;
  double mean_estimate = 0.0;
  std::uint64_t seed = 0;
};

// Per-replicate estimates, indexed [p][rep]; NaN where no estimate.
struct ReplicateEstimates {
  std::vector<std::vector<double>> kgaps;
  std::vector<std::vector<double>> intervals;
};

ReplicateEstimates replicate_estimates(const ProcessSpec& process, int K,
                                       const std::vector<double>& p_grid, int reps,
                                       std::uint64_t master_seed, unsigned threads = 0,
                                       const std::function<void(int)>& progress = {});

std::vector<BenchmarkRow> benchmark(const BenchmarkConfig& config,
                                    const std::function<void(const std::string&)>& progress = {});

// process,estimator,quantile,K,n,reps,median_rel_bias,rmse,seed
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows,
                          const std::vector<std::string>& comments = {});

}  // namespace pot
