#include "pot/core.hpp"

#include "pot/error.hpp"
#include "pot/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>

namespace pot {

namespace {

void check_values(const Eigen::VectorXd& values) {
  if (values.size() < 2) throw DataError("time series needs at least two observations");
  for (Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw DataError("time series value at position " + std::to_string(i + 1) + " is not finite");
  }
}

}  // namespace

TimeSeries::TimeSeries(Eigen::VectorXd values, std::string meta)
    : values_(std::move(values)), meta_(std::move(meta)) {
  check_values(values_);
}

TimeSeries::TimeSeries(Eigen::VectorXd values, std::vector<DayNumber> timestamps, std::string meta)
    : values_(std::move(values)), timestamps_(std::move(timestamps)), meta_(std::move(meta)) {
  check_values(values_);
  if (static_cast<Index>(timestamps_->size()) != values_.size())
    throw DataError("timestamps and values differ in length");
  for (std::size_t i = 1; i < timestamps_->size(); ++i) {
    if ((*timestamps_)[i] <= (*timestamps_)[i - 1])
      throw DataError("timestamps not strictly increasing at position " + std::to_string(i + 1));
  }
}

const std::vector<DayNumber>& TimeSeries::timestamps() const {
  if (!timestamps_) throw DataError("series has no timestamps");
  return *timestamps_;
}

TimeSeries TimeSeries::slice(Index first, Index last) const {
  Eigen::VectorXd v = values_.segment(first, last - first);
  if (!timestamps_) return TimeSeries(std::move(v), meta_);
  std::vector<DayNumber> t(timestamps_->begin() + first, timestamps_->begin() + last);
  return TimeSeries(std::move(v), std::move(t), meta_);
}

double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw DataError("empirical_quantile: empty series");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("empirical_quantile: p must lie in (0, 1)");
  std::vector<double> v(values.begin(), values.end());
  const auto n = static_cast<double>(v.size());
  // ceil(p*n) with a tolerance so that e.g. 0.95*10000 is not pushed to 9501
  // by representation error.
  double rank = std::ceil(p * n - 1e-9 * n);
  rank = std::clamp(rank, 1.0, n);
  const auto k = static_cast<std::size_t>(rank) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

double empirical_quantile(const TimeSeries& series, double p) { return empirical_quantile(series.span(), p); }

ExceedanceRecord exceedances(const TimeSeries& series, double u) {
  if (!std::isfinite(u)) throw DomainError("exceedances: threshold must be finite");
  ExceedanceRecord rec;
  rec.threshold = u;
  rec.n = series.size();
  std::vector<double> ex;
  const auto& x = series.values();
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] > u) {
      rec.indices.push_back(i + 1);
      ex.push_back(x[i] - u);
    }
  }
  if (rec.indices.empty()) throw DataError("no exceedances above threshold " + std::to_string(u));
  rec.excesses = Eigen::Map<Eigen::VectorXd>(ex.data(), static_cast<Index>(ex.size()));
  return rec;
}

std::vector<Index> inter_exceedance_times(const ExceedanceRecord& record) {
  if (record.count() < 2) throw DataError("inter-exceedance times need at least two exceedances");
  std::vector<Index> times(record.indices.size() - 1);
  for (std::size_t i = 0; i + 1 < record.indices.size(); ++i)
    times[i] = record.indices[i + 1] - record.indices[i];
  return times;
}

std::vector<Index> inter_exceedance_times(const ExceedanceRecord& record, std::span<const int> segments,
                                          SeasonJoin join) {
  auto times = inter_exceedance_times(record);
  if (join == SeasonJoin::concatenate) return times;
  if (static_cast<Index>(segments.size()) != record.n)
    throw DomainError("segment ids do not match the series length");
  std::vector<Index> kept;
  kept.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto a = static_cast<std::size_t>(record.indices[i] - 1);
    const auto b = static_cast<std::size_t>(record.indices[i + 1] - 1);
    if (segments[a] == segments[b]) kept.push_back(times[i]);
  }
  if (kept.empty()) throw DataError("no inter-exceedance times within a single segment");
  return kept;
}

KGapSample k_gaps(std::span<const Index> times, int K, double tail_prob) {
  if (times.empty()) throw DataError("k_gaps: no inter-exceedance times");
  if (K < 0) throw DomainError("k_gaps: K must be nonnegative");
  if (!(tail_prob > 0.0 && tail_prob <= 1.0)) throw DomainError("k_gaps: tail_prob must lie in (0, 1]");
  KGapSample s;
  s.K = K;
  s.tail_prob = tail_prob;
  s.c.resize(static_cast<Index>(times.size()));
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Index excess = std::max<Index>(times[i] - K, 0);
    s.c[static_cast<Index>(i)] = tail_prob * static_cast<double>(excess);
  }
  s.n_positive = (s.c > 0.0).count();
  s.sum_c = s.c.sum();
  return s;
}

KGapSample k_gaps(std::span<const Index> times, int K, double tail_prob, const Eigen::ArrayXd& weights) {
  KGapSample s = k_gaps(times, K, tail_prob);
  if (weights.size() != s.c.size()) throw DomainError("k_gaps: weights differ in length from gaps");
  if ((weights < 0.0).any()) throw DomainError("k_gaps: weights must be nonnegative");
  if (!(weights > 0.0).any()) throw DomainError("k_gaps: all weights are zero");
  s.sum_c = (weights * s.c).sum();
  s.weights = weights;
  return s;
}

ClusterSet decluster_runs(const ExceedanceRecord& record, int K) {
  if (record.count() < 1) throw DataError("decluster_runs: empty record");
  if (K < 0) throw DomainError("decluster_runs: K must be nonnegative");
  ClusterSet set;
  for (std::size_t i = 0; i < record.indices.size(); ++i) {
    const Index j = record.indices[i];
    const double value = record.excesses[static_cast<Index>(i)] + record.threshold;
    if (i == 0 || j - record.indices[i - 1] > K) {
      set.clusters.emplace_back();
      set.peaks.push_back({value, j});
    } else if (value > set.peaks.back().value) {
      set.peaks.back() = {value, j};
    }
    set.clusters.back().push_back(j);
  }
  return set;
}

std::vector<int> segment_ids(const TimeSeries& series) {
  std::vector<int> ids(static_cast<std::size_t>(series.size()), 0);
  if (!series.has_timestamps()) return ids;
  const auto& t = series.timestamps();
  for (std::size_t i = 1; i < t.size(); ++i) ids[i] = ids[i - 1] + (t[i] - t[i - 1] > 1 ? 1 : 0);
  return ids;
}

// Civil-calendar conversions (proleptic Gregorian), after H. Hinnant's
// days_from_civil / civil_from_days.
DayNumber days_from_civil(int year, unsigned month, unsigned day) {
  year -= month <= 2;
  const DayNumber era = (year >= 0 ? year : year - 399) / 400;
  const auto yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month > 2 ? month - 3 : month + 9) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<DayNumber>(doe) - 719468;
}

void civil_from_days(DayNumber z, int& year, unsigned& month, unsigned& day) {
  z += 719468;
  const DayNumber era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp < 10 ? mp + 3 : mp - 9;
  year = static_cast<int>(static_cast<DayNumber>(yoe) + era * 400) + (month <= 2);
}

int day_of_year_noleap(DayNumber days) {
  static constexpr std::array<int, 12> kCumulative{0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  if (m == 2 && d == 29) d = 28;
  return kCumulative[m - 1] + static_cast<int>(d);
}

TimeSeries select_months(const TimeSeries& series, unsigned first_month, unsigned last_month) {
  if (first_month < 1 || first_month > 12 || last_month < 1 || last_month > 12)
    throw DomainError("select_months: months must lie in 1..12");
  const auto& t = series.timestamps();
  std::vector<double> values;
  std::vector<DayNumber> kept;
  for (std::size_t i = 0; i < t.size(); ++i) {
    int y;
    unsigned m, d;
    civil_from_days(t[i], y, m, d);
    const bool inside = first_month <= last_month ? (m >= first_month && m <= last_month)
                                                  : (m >= first_month || m <= last_month);
    if (inside) {
      values.push_back(series.values()[static_cast<Index>(i)]);
      kept.push_back(t[i]);
    }
  }
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
  return TimeSeries(std::move(v), std::move(kept), series.meta());
}

TimeSeries deseasonalize(const TimeSeries& series) {
  if (!series.has_timestamps()) throw DataError("deseasonalize: timestamps required");
  const auto& t = series.timestamps();
  std::set<int> years;
  std::array<std::vector<double>, 365> by_day;
  std::vector<int> doy(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    int y;
    unsigned m, d;
    civil_from_days(t[i], y, m, d);
    years.insert(y);
    doy[i] = day_of_year_noleap(t[i]);
    by_day[static_cast<std::size_t>(doy[i] - 1)].push_back(series.values()[static_cast<Index>(i)]);
  }
  if (years.size() < 2) throw DataError("deseasonalize: at least two distinct years required");

  std::array<double, 365> med{};
  std::array<double, 365> scale{};
  std::array<bool, 365> present{};
  for (std::size_t d = 0; d < 365; ++d) {
    if (by_day[d].empty()) continue;
    if (by_day[d].size() < 2)
      throw DataError("deseasonalize: day of year " + std::to_string(d + 1) + " has a single observation");
    present[d] = true;
    med[d] = stats::median(by_day[d]);
    scale[d] = stats::mad(by_day[d]);
  }

  // Circular moving median of the pointwise cycles over days holding data.
  constexpr int half = kSeasonalSmoothingWindow / 2;
  std::array<double, 365> med_s{};
  std::array<double, 365> scale_s{};
  std::vector<double> wm, ws;
  for (int d = 0; d < 365; ++d) {
    if (!present[static_cast<std::size_t>(d)]) continue;
    wm.clear();
    ws.clear();
    for (int k = -half; k <= half; ++k) {
      const auto j = static_cast<std::size_t>(((d + k) % 365 + 365) % 365);
      if (!present[j]) continue;
      wm.push_back(med[j]);
      ws.push_back(scale[j]);
    }
    med_s[static_cast<std::size_t>(d)] = stats::median(wm);
    scale_s[static_cast<std::size_t>(d)] = stats::median(ws);
    if (!(scale_s[static_cast<std::size_t>(d)] > 0.0))
      throw DataError("deseasonalize: zero MAD at day of year " + std::to_string(d + 1));
  }

  Eigen::VectorXd out(series.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto d = static_cast<std::size_t>(doy[i] - 1);
    out[static_cast<Index>(i)] = (series.values()[static_cast<Index>(i)] - med_s[d]) / scale_s[d];
  }
  return TimeSeries(std::move(out), t, series.meta());
}

TimeSeries detrend_moving(const TimeSeries& series, double window_years) {
  if (!series.has_timestamps()) throw DataError("detrend_moving: timestamps required");
  if (!(window_years > 0.0)) throw DomainError("detrend_moving: window must be positive");
  const auto& t = series.timestamps();
  const auto& x = series.values();
  const double half = 0.5 * window_years * kDaysPerYear;
  const std::size_t n = t.size();
  Eigen::VectorXd out(series.size());
  std::size_t lo = 0;
  std::size_t hi = 0;  // one past the last in-window position
  for (std::size_t i = 0; i < n; ++i) {
    const double centre = static_cast<double>(t[i]);
    while (static_cast<double>(t[lo]) < centre - half) ++lo;
    while (hi < n && static_cast<double>(t[hi]) <= centre + half) ++hi;
    const std::size_t count = hi - lo;
    if (static_cast<Index>(count) < kMinDetrendWindowObs)
      throw DataError("detrend_moving: window around position " + std::to_string(i + 1) + " holds " +
                      std::to_string(count) + " observations (< 10)");
    std::span<const double> window(x.data() + lo, count);
    const double m = stats::median(window);
    const double s = stats::mad(window);
    if (!(s > 0.0)) throw DataError("detrend_moving: zero MAD in window around position " + std::to_string(i + 1));
    out[static_cast<Index>(i)] = (x[static_cast<Index>(i)] - m) / s;
  }
  return TimeSeries(std::move(out), t, series.meta());
}

}  // namespace pot
