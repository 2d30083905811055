#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pot {

using Index = Eigen::Index;

/// Calendar day number: days since 1970-01-01.
using DayNumber = std::int64_t;

/// Ordered observations with optional daily timestamps.
///
/// Always holds at least two finite values; timestamps, when present, match
/// the values in length and are strictly increasing.
class TimeSeries {
 public:
  explicit TimeSeries(Eigen::VectorXd values, std::string meta = {});
  TimeSeries(Eigen::VectorXd values, std::vector<DayNumber> timestamps, std::string meta = {});

  const Eigen::VectorXd& values() const { return values_; }
  Index size() const { return values_.size(); }
  bool has_timestamps() const { return timestamps_.has_value(); }
  const std::vector<DayNumber>& timestamps() const;
  const std::string& meta() const { return meta_; }

  std::span<const double> span() const { return {values_.data(), static_cast<std::size_t>(values_.size())}; }

  // Observations with positions [first, last) as a new series.
  TimeSeries slice(Index first, Index last) const;

 private:
  Eigen::VectorXd values_;
  std::optional<std::vector<DayNumber>> timestamps_;
  std::string meta_;
};

/// Positions (1-based) and excesses of observations strictly above u.
struct ExceedanceRecord {
  double threshold = 0.0;
  std::vector<Index> indices;
  Eigen::VectorXd excesses;
  Index n = 0;

  Index count() const { return static_cast<Index>(indices.size()); }
  double tail_prob() const { return static_cast<double>(count()) / static_cast<double>(n); }
};

/// Normalised K-gaps c_i = tail_prob * max(T_i - K, 0).
struct KGapSample {
  int K = 0;
  double tail_prob = 1.0;
  Eigen::ArrayXd c;
  std::optional<Eigen::ArrayXd> weights;
  Index n_positive = 0;
  double sum_c = 0.0;  // weighted when weights are present

  Index size() const { return c.size(); }
};

struct ClusterPeak {
  double value = 0.0;
  Index index = 0;
};

/// Runs-declustered exceedances: a partition of the exceedance positions.
struct ClusterSet {
  std::vector<std::vector<Index>> clusters;
  std::vector<ClusterPeak> peaks;

  Index count() const { return static_cast<Index>(clusters.size()); }
};

/// How gaps between data segments (e.g. June-August blocks of successive
/// years) are treated when forming inter-exceedance times.
enum class SeasonJoin { concatenate, break_at_gaps };

// Type-1 quantile: the ceil(p*n)-th order statistic of the sorted sample.
double empirical_quantile(std::span<const double> values, double p);
double empirical_quantile(const TimeSeries& series, double p);

/// Throws DataError when no observation exceeds u.
ExceedanceRecord exceedances(const TimeSeries& series, double u);

std::vector<Index> inter_exceedance_times(const ExceedanceRecord& record);

/// Inter-exceedance times, dropping those whose endpoints lie in different
/// segments when `join` is break_at_gaps. `segments` holds a segment id per
/// series position (0-based positions).
std::vector<Index> inter_exceedance_times(const ExceedanceRecord& record,
                                          std::span<const int> segments, SeasonJoin join);

KGapSample k_gaps(std::span<const Index> times, int K, double tail_prob);
KGapSample k_gaps(std::span<const Index> times, int K, double tail_prob,
                  const Eigen::ArrayXd& weights);

ClusterSet decluster_runs(const ExceedanceRecord& record, int K);

// Segment ids from timestamps: a new segment starts after any jump longer
// than one day. Untimestamped series are a single segment.
std::vector<int> segment_ids(const TimeSeries& series);

// Calendar helpers.
DayNumber days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(DayNumber days, int& year, unsigned& month, unsigned& day);
// Day of a 365-day year (1..365); 29 February maps onto 28 February.
int day_of_year_noleap(DayNumber days);

TimeSeries select_months(const TimeSeries& series, unsigned first_month, unsigned last_month);

/// Centre and scale each observation by the smoothed day-of-year median
/// and MAD cycle.
TimeSeries deseasonalize(const TimeSeries& series);

/// Standardise by the moving median and MAD over t +/- window_years/2.
TimeSeries detrend_moving(const TimeSeries& series, double window_years);

inline constexpr double kDaysPerYear = 365.25;
inline constexpr int kSeasonalSmoothingWindow = 15;
inline constexpr Index kMinDetrendWindowObs = 10;

}  // namespace pot
