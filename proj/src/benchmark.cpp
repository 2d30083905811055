#include "pot/benchmark.hpp"

#include "pot/error.hpp"
#include "pot/kgaps.hpp"
#include "pot/parallel.hpp"
#include "pot/series_io.hpp"
#include "pot/stats.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

namespace pot {

const char* to_string(Estimator estimator) {
  return estimator == Estimator::kgaps_mle ? "kgaps_mle" : "intervals";
}

Estimator parse_estimator(const std::string& name) {
  if (name == "kgaps_mle" || name == "kgaps") return Estimator::kgaps_mle;
  if (name == "intervals") return Estimator::intervals;
  throw DomainError("unknown estimator '" + name + "'");
}

namespace {

std::string process_label(const ProcessSpec& spec) {
  if (spec.kind == ProcessKind::farima) return std::string("farima_d") + io::format_double(spec.params.d);
  return to_string(spec.kind);
}

}  // namespace

ReplicateEstimates replicate_estimates(const ProcessSpec& process, int K, const std::vector<double>& p_grid,
                                       int reps, std::uint64_t master_seed, unsigned threads,
                                       const std::function<void(int)>& progress) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ReplicateEstimates out;
  out.kgaps.assign(p_grid.size(), std::vector<double>(static_cast<std::size_t>(reps), nan));
  out.intervals = out.kgaps;
  std::atomic<int> done{0};
  parallel_for(
      static_cast<std::size_t>(reps),
      [&](std::size_t rep) {
        ProcessSpec spec = process;
        spec.seed = replicate_seed(master_seed, rep);
        const TimeSeries series = simulate(spec);
        for (std::size_t ip = 0; ip < p_grid.size(); ++ip) {
          try {
            const auto rec = exceedances(series, empirical_quantile(series, p_grid[ip]));
            if (rec.count() < 3) continue;
            const auto times = inter_exceedance_times(rec);
            out.kgaps[ip][rep] = mle(k_gaps(times, K, rec.tail_prob())).theta_hat;
            out.intervals[ip][rep] = intervals_estimator(times);
          } catch (const DataError&) {
          }
        }
        const int finished = ++done;
        if (progress) progress(finished);
      },
      threads);
  return out;
}

std::vector<BenchmarkRow> benchmark(const BenchmarkConfig& config,
                                    const std::function<void(const std::string&)>& progress) {
  if (config.reps < 10) throw DomainError("benchmark: at least 10 replications required");
  if (config.p_grid.empty()) throw DomainError("benchmark: empty threshold grid");
  std::vector<BenchmarkRow> rows;
  for (const auto& process : config.processes) {
    process.validate();
    const auto truth = known_theta(process);
    if (!truth) throw DomainError("benchmark: no known extremal index for process " + process_label(process));
    const auto it = config.K_map.find(process.kind);
    const int K = it != config.K_map.end() ? it->second : 1;
    if (progress) progress("simulating " + process_label(process));
    const auto est = replicate_estimates(process, K, config.p_grid, config.reps, config.master_seed,
                                         config.threads);
    for (Estimator e : config.estimators) {
      const auto& table = e == Estimator::kgaps_mle ? est.kgaps : est.intervals;
      for (std::size_t ip = 0; ip < config.p_grid.size(); ++ip) {
        std::vector<double> valid;
        for (double v : table[ip])
          if (!std::isnan(v)) valid.push_back(v);
        BenchmarkRow row;
        row.process = process_label(process);
        row.estimator = e;
        row.quantile = config.p_grid[ip];
        row.K = K;
        row.n = process.n;
        row.reps = config.reps;
        row.valid = static_cast<int>(valid.size());
        row.seed = config.master_seed;
        if (valid.empty()) {
          row.median_rel_bias = row.rmse = row.mean_estimate = std::numeric_limits<double>::quiet_NaN();
        } else {
          row.median_rel_bias = stats::median(valid) / *truth - 1.0;
          double sq = 0.0;
          for (double v : valid) sq += (v - *truth) * (v - *truth);
          row.rmse = std::sqrt(sq / static_cast<double>(valid.size()));
          row.mean_estimate = stats::mean(valid);
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows, const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "process,estimator,quantile,K,n,reps,median_rel_bias,rmse,seed\n";
  auto num = [](double v) { return std::isnan(v) ? std::string("NA") : io::format_double(v); };
  for (const auto& r : rows) {
    out << r.process << ',' << to_string(r.estimator) << ',' << io::format_double(r.quantile) << ',' << r.K << ','
        << r.n << ',' << r.reps << ',' << num(r.median_rel_bias) << ',' << num(r.rmse) << ',' << r.seed << '\n';
  }
  return out.str();
}

}  // namespace pot
