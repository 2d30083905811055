#include "pot/imt.hpp"

#include "pot/error.hpp"
#include "pot/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pot {

const char* to_string(CellFlag flag) {
  switch (flag) {
    case CellFlag::ok: return "ok";
    case CellFlag::no_exceedances: return "no_exceedances";
    case CellFlag::too_few_exceedances: return "too_few_exceedances";
    case CellFlag::boundary: return "boundary_estimate";
    case CellFlag::undefined_test: return "undefined_test";
  }
  return "unknown";
}

ImtResult imt_components(const KGapSample& sample, double theta, JVariant variant) {
  const Index m = sample.size();
  Eigen::ArrayXd w = sample.weights ? Eigen::ArrayXd(*sample.weights / sample.weights->maxCoeff())
                                    : Eigen::ArrayXd::Ones(m);
  const Eigen::ArrayXd& c = sample.c;
  const double total = w.sum();
  auto wmean = [&](const Eigen::ArrayXd& v) { return (w * v).sum() / total; };

  const double t2 = theta * theta;
  Eigen::ArrayXd score(m), d(m), d_prime(m), info(m);
  for (Index i = 0; i < m; ++i) {
    if (c[i] > 0.0) {
      score[i] = 2.0 / theta - c[i];
      const double c_term = variant == JVariant::squared_c ? c[i] * c[i] : c[i];
      d[i] = 2.0 / t2 + c_term - 4.0 * c[i] / theta;
      d_prime[i] = -4.0 / (t2 * theta) + 4.0 * c[i] / t2;
      info[i] = 2.0 / t2;
    } else {
      // Zero gaps: l'^2 and -l'' are both 1/(1-theta)^2, so d vanishes.
      score[i] = -1.0 / (1.0 - theta);
      d[i] = 0.0;
      d_prime[i] = 0.0;
      info[i] = 1.0 / ((1.0 - theta) * (1.0 - theta));
    }
  }
  ImtResult r;
  r.theta_hat = theta;
  r.n_gaps = sample.weights ? effective_sample_size(sample) : static_cast<double>(m);
  r.D = wmean(d);
  r.D_prime = wmean(d_prime);
  const double info_mean = wmean(info);
  const Eigen::ArrayXd adjusted = d - (r.D_prime / info_mean) * score;
  r.V = wmean(adjusted.square());
  r.T = r.V > 0.0 ? r.n_gaps * r.D * r.D / r.V : std::numeric_limits<double>::quiet_NaN();
  r.p_value = std::isnan(r.T) ? std::numeric_limits<double>::quiet_NaN() : stats::chi2_1_sf(r.T);
  r.reliable = r.n_gaps + 1.0 >= static_cast<double>(kImtReliableExceedances);
  return r;
}

ImtResult imt_statistic(const KGapSample& sample, double theta_hat, JVariant variant) {
  if (!(theta_hat > 0.0 && theta_hat < 1.0))
    throw NumericalError("information matrix test undefined at boundary estimate");
  if (sample.size() < 2) throw NumericalError("information matrix test needs at least two gaps");
  auto r = imt_components(sample, theta_hat, variant);
  if (!(r.V > 0.0)) throw NumericalError("information matrix test undefined: zero variance");
  return r;
}

namespace {

void fill_cells_for_threshold(const TimeSeries& series, std::span<const int> segments, double p,
                              const std::vector<int>& Ks, const ImtOptions& options, GridCell* out) {
  const double u = empirical_quantile(series, p);
  for (std::size_t k = 0; k < Ks.size(); ++k) {
    out[k] = GridCell{};
    out[k].p = p;
    out[k].K = Ks[k];
    out[k].threshold = u;
  }
  ExceedanceRecord rec;
  try {
    rec = exceedances(series, u);
  } catch (const DataError&) {
    for (std::size_t k = 0; k < Ks.size(); ++k) out[k].flag = CellFlag::no_exceedances;
    return;
  }
  std::vector<Index> times;
  bool enough = rec.count() >= 2;
  if (enough) {
    try {
      times = inter_exceedance_times(rec, segments, options.season_join);
    } catch (const DataError&) {
      enough = false;
    }
  }
  for (std::size_t k = 0; k < Ks.size(); ++k) {
    GridCell& cell = out[k];
    cell.n_exceedances = rec.count();
    if (!enough) {
      cell.flag = CellFlag::too_few_exceedances;
      continue;
    }
    const auto sample = k_gaps(times, Ks[k], rec.tail_prob());
    cell.theta = mle(sample, options.variant);
    if (cell.theta->boundary) {
      cell.flag = CellFlag::boundary;
      continue;
    }
    try {
      cell.imt = imt_statistic(sample, cell.theta->theta_hat, options.variant);
      cell.imt->reliable = rec.count() >= kImtReliableExceedances;
    } catch (const NumericalError&) {
      cell.flag = CellFlag::undefined_test;
    }
  }
}

}  // namespace

GridCell imt_cell(const TimeSeries& series, double p, int K, const ImtOptions& options) {
  const auto segments = segment_ids(series);
  GridCell cell;
  fill_cells_for_threshold(series, segments, p, {K}, options, &cell);
  return cell;
}

GridSurface imt_grid(const TimeSeries& series, const std::vector<double>& ps, const std::vector<int>& Ks,
                     const ImtOptions& options) {
  if (ps.empty() || Ks.empty()) throw DomainError("imt_grid: threshold and K grids must be nonempty");
  if (series.size() < kImtGridMinLength) throw DataError("imt_grid: series shorter than 100 observations");
  GridSurface surface;
  surface.ps = ps;
  surface.Ks = Ks;
  surface.cells.resize(ps.size() * Ks.size());
  const auto segments = segment_ids(series);
  for (std::size_t ip = 0; ip < ps.size(); ++ip)
    fill_cells_for_threshold(series, segments, ps[ip], Ks, options, &surface.at(ip, 0));
  return surface;
}

std::vector<GridSurface> sliding_window_imt(const TimeSeries& series, const WindowSpec& window,
                                            const std::vector<double>& ps, const std::vector<int>& Ks,
                                            const ImtOptions& options) {
  if (!(window.length > 0.0) || !(window.step > 0.0))
    throw DomainError("sliding_window_imt: window length and step must be positive");
  const Index n = series.size();
  std::vector<double> axis(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    axis[static_cast<std::size_t>(i)] = series.has_timestamps()
                                            ? static_cast<double>(series.timestamps()[static_cast<std::size_t>(i)])
                                            : static_cast<double>(i + 1);
  const double start = axis.front();
  const double end = axis.back();
  const double half = 0.5 * window.length;
  if (window.length > end - start) throw DataError("sliding_window_imt: no full window fits the series");

  double first = start + half;
  if (window.first_center) {
    first = *window.first_center;
    first -= std::floor((first - half - start) / window.step) * window.step;
    if (first - half < start) first += window.step;
  }
  std::vector<double> centers;
  for (double c = first; c + half <= end; c += window.step) centers.push_back(c);
  if (centers.empty()) throw DataError("sliding_window_imt: no full window fits the series");

  std::vector<GridSurface> out(centers.size());
  parallel_for(centers.size(), [&](std::size_t w) {
    const double c = centers[w];
    const auto lo = std::lower_bound(axis.begin(), axis.end(), c - half) - axis.begin();
    const auto hi = std::upper_bound(axis.begin(), axis.end(), c + half) - axis.begin();
    GridSurface s;
    if (hi - lo >= kImtGridMinLength) {
      s = imt_grid(series.slice(lo, hi), ps, Ks, options);
    } else {
      s.ps = ps;
      s.Ks = Ks;
      s.cells.resize(ps.size() * Ks.size());
      for (std::size_t ip = 0; ip < ps.size(); ++ip)
        for (std::size_t k = 0; k < Ks.size(); ++k) {
          auto& cell = s.at(ip, k);
          cell.p = ps[ip];
          cell.K = Ks[k];
          cell.flag = CellFlag::too_few_exceedances;
        }
    }
    s.window_center = c;
    s.center_is_day = series.has_timestamps();
    out[w] = std::move(s);
  });
  return out;
}

std::vector<std::size_t> by_fdr(std::span<const double> p_values, double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("by_fdr: q must lie in (0, 1)");
  const std::size_t m = p_values.size();
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("by_fdr: p-values must lie in [0, 1]");
  if (m == 0) return {};
  double harmonic = 0.0;
  for (std::size_t j = 1; j <= m; ++j) harmonic += 1.0 / static_cast<double>(j);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t cutoff = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    if (p_values[order[i - 1]] <= static_cast<double>(i) * q / (static_cast<double>(m) * harmonic)) cutoff = i;
  }
  std::vector<std::size_t> rejected(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cutoff));
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

std::vector<std::vector<bool>> sliding_fdr(const std::vector<GridSurface>& surfaces, double q) {
  std::vector<std::vector<bool>> rejected(surfaces.size());
  if (surfaces.empty()) return rejected;
  const std::size_t cells = surfaces.front().cells.size();
  for (auto& r : rejected) r.assign(cells, false);
  for (std::size_t k = 0; k < cells; ++k) {
    std::vector<double> pv;
    std::vector<std::size_t> owner;
    for (std::size_t w = 0; w < surfaces.size(); ++w) {
      const auto& cell = surfaces[w].cells[k];
      if (cell.imt) {
        pv.push_back(cell.imt->p_value);
        owner.push_back(w);
      }
    }
    for (std::size_t i : by_fdr(pv, q)) rejected[owner[i]][k] = true;
  }
  return rejected;
}

std::optional<ParamChoice> choose_params(const GridSurface& surface, const ChooseOptions& options) {
  const std::size_t np = surface.ps.size();
  const std::size_t nk = surface.Ks.size();
  std::optional<ParamChoice> best;
  for (std::size_t ip = 0; ip < np; ++ip) {
    for (std::size_t ik = 0; ik < nk; ++ik) {
      const auto& cell = surface.at(ip, ik);
      if (!cell.imt || cell.imt->T >= options.critical) continue;
      if (!cell.imt->reliable && !options.include_unreliable) continue;
      bool neighbours_ok = true;
      const std::pair<int, int> offsets[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (auto [dp, dk] : offsets) {
        const auto jp = static_cast<std::ptrdiff_t>(ip) + dp;
        const auto jk = static_cast<std::ptrdiff_t>(ik) + dk;
        if (jp < 0 || jk < 0 || jp >= static_cast<std::ptrdiff_t>(np) || jk >= static_cast<std::ptrdiff_t>(nk)) continue;
        if (surface.at(static_cast<std::size_t>(jp), static_cast<std::size_t>(jk)).rejected(options.critical))
          neighbours_ok = false;
      }
      if (!neighbours_ok) continue;
      const ParamChoice candidate{cell.p, cell.K, cell.imt->T, cell.n_exceedances};
      const bool better = !best || candidate.T < best->T ||
                          (candidate.T == best->T && (candidate.n_exceedances > best->n_exceedances ||
                                                      (candidate.n_exceedances == best->n_exceedances &&
                                                       candidate.K < best->K)));
      if (better) best = candidate;
    }
  }
  return best;
}

GridSurface max_over_windows(const std::vector<GridSurface>& surfaces) {
  if (surfaces.empty()) throw DataError("max_over_windows: no surfaces");
  GridSurface agg;
  agg.ps = surfaces.front().ps;
  agg.Ks = surfaces.front().Ks;
  agg.cells.resize(surfaces.front().cells.size());
  for (std::size_t k = 0; k < agg.cells.size(); ++k) {
    GridCell& out = agg.cells[k];
    out.p = surfaces.front().cells[k].p;
    out.K = surfaces.front().cells[k].K;
    out.flag = CellFlag::undefined_test;
    Index min_n = std::numeric_limits<Index>::max();
    for (const auto& s : surfaces) {
      const auto& cell = s.cells[k];
      min_n = std::min(min_n, cell.n_exceedances);
      if (!cell.imt) continue;
      if (!out.imt) {
        out.imt = cell.imt;
        out.flag = CellFlag::ok;
      } else {
        if (cell.imt->T > out.imt->T) {
          const bool reliable = out.imt->reliable && cell.imt->reliable;
          out.imt = cell.imt;
          out.imt->reliable = reliable;
        } else {
          out.imt->reliable = out.imt->reliable && cell.imt->reliable;
        }
      }
    }
    out.n_exceedances = min_n;
  }
  return agg;
}

}  // namespace pot
