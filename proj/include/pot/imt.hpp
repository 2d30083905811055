#pragma once

#include "pot/core.hpp"
#include "pot/kgaps.hpp"

#include "pot/stats.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pot {

/// Information-matrix test of J(theta) = I(theta) for the K-gaps model.
struct ImtResult {
  double theta_hat = 0.0;
  double D = 0.0;        // mean of d_i
  double D_prime = 0.0;  // mean derivative of d_i
  double V = 0.0;        // variance of the adjusted indicator
  double T = 0.0;
  double p_value = 1.0;
  double n_gaps = 0.0;
  bool reliable = false;  // at least kImtReliableExceedances exceedances
};

inline constexpr Index kImtReliableExceedances = 80;

// All components of the test at an arbitrary theta, without domain checks.
// Used directly by algebra tests; callers normally go through imt_statistic.
ImtResult imt_components(const KGapSample& sample, double theta, JVariant variant);

/// Throws NumericalError at the boundary or when V is zero.
ImtResult imt_statistic(const KGapSample& sample, double theta_hat,
                        JVariant variant = JVariant::squared_c);

enum class CellFlag { ok, no_exceedances, too_few_exceedances, boundary, undefined_test };
const char* to_string(CellFlag flag);

struct GridCell {
  double p = 0.0;
  int K = 0;
  double threshold = 0.0;
  Index n_exceedances = 0;
  std::optional<ThetaEstimate> theta;
  std::optional<ImtResult> imt;
  CellFlag flag = CellFlag::ok;

  bool has_test() const { return imt.has_value(); }
  bool rejected(double critical) const { return imt && imt->T >= critical; }
};

/// Cells of the (threshold probability, K) grid, stored p-major.
struct GridSurface {
  std::vector<double> ps;
  std::vector<int> Ks;
  std::vector<GridCell> cells;
  std::optional<double> window_center;
  bool center_is_day = false;  // window_center is a DayNumber

  GridCell& at(std::size_t ip, std::size_t iK) { return cells[ip * Ks.size() + iK]; }
  const GridCell& at(std::size_t ip, std::size_t iK) const { return cells[ip * Ks.size() + iK]; }
};

struct ImtOptions {
  JVariant variant = JVariant::squared_c;
  SeasonJoin season_join = SeasonJoin::concatenate;
};

inline constexpr Index kImtGridMinLength = 100;

GridCell imt_cell(const TimeSeries& series, double p, int K, const ImtOptions& options = {});
GridSurface imt_grid(const TimeSeries& series, const std::vector<double>& ps,
                     const std::vector<int>& Ks, const ImtOptions& options = {});

struct WindowSpec {
  double length = 0.0;  // in time-axis units (days when timestamped, else observations)
  double step = 0.0;
  std::optional<double> first_center;
};

/// One surface per full window; the time axis is the timestamps when present
/// and 1-based positions otherwise.
std::vector<GridSurface> sliding_window_imt(const TimeSeries& series, const WindowSpec& window,
                                            const std::vector<double>& ps,
                                            const std::vector<int>& Ks,
                                            const ImtOptions& options = {});

/// Benjamini-Yekutieli step-up procedure. Returns rejected indices in
/// increasing order.
std::vector<std::size_t> by_fdr(std::span<const double> p_values, double q);

// BY rejections across windows, separately for each (p, K) cell. Result is
// indexed [window][cell]. Cells without a test are never rejected.
std::vector<std::vector<bool>> sliding_fdr(const std::vector<GridSurface>& surfaces, double q);

struct ParamChoice {
  double p = 0.0;
  int K = 0;
  double T = 0.0;
  Index n_exceedances = 0;
};

struct ChooseOptions {
  double critical = stats::kChi2_1_Crit95;
  bool include_unreliable = false;
};

/// Minimum-T cell among non-rejected cells with non-rejected 4-neighbours.
/// nullopt means no well-specified region exists.
std::optional<ParamChoice> choose_params(const GridSurface& surface, const ChooseOptions& options = {});

// Aggregates windows by the maximum T (and minimum N) per cell, then
// applies choose_params to the aggregate.
GridSurface max_over_windows(const std::vector<GridSurface>& surfaces);

// Long-format export: window_center,p,K,N,theta,se,T,pvalue,reliable,flag
// plus fdr_reject when rejections are supplied.
std::string surface_csv(const std::vector<GridSurface>& surfaces,
                        const std::vector<std::vector<bool>>* fdr = nullptr,
                        const std::vector<std::string>& comments = {});
nlohmann::json surface_json(const std::vector<GridSurface>& surfaces,
                            const std::vector<std::vector<bool>>* fdr = nullptr);

}  // namespace pot
