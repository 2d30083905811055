#include "pot/gpd.hpp"

#include "pot/parallel.hpp"
#include "pot/random.hpp"
#include "pot/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pot {

namespace {

constexpr double kXiFloor = kGpdXiLower + 1e-6;
constexpr int kProfileGridPoints = 96;
constexpr double kGoldenTol = 1e-10;

// Survival probability of an excess y; 0 beyond a finite endpoint.
double gpd_survival(double xi, double sigma, double y) {
  if (y <= 0.0) return 1.0;
  if (std::abs(xi) < kGpdXiEpsilon) return std::exp(-y / sigma);
  const double z = xi * y / sigma;
  if (z <= -1.0) return 0.0;
  return std::exp(-std::log1p(z) / xi);
}

// Excess with the given survival probability.
double gpd_excess_for_survival(double xi, double sigma, double survival) {
  const double log_s = std::log(survival);
  if (std::abs(xi) < kGpdXiEpsilon) return -sigma * log_s;
  return sigma * std::expm1(-xi * log_s) / xi;
}

double profile_loglik(const Eigen::ArrayXd& y, std::span<const double> ys, double xi) {
  const double sigma = gpd_profile_sigma(ys, xi);
  return gpd_loglik(xi, sigma, y);
}

}  // namespace

double gpd_profile_sigma(std::span<const double> excesses, double xi) {
  const auto n = static_cast<double>(excesses.size());
  if (std::abs(xi) < kGpdXiEpsilon) {
    double s = 0.0;
    for (double y : excesses) s += y;
    return s / n;
  }
  const double ymax = *std::max_element(excesses.begin(), excesses.end());
  const double target = n / (1.0 + xi);
  // g(sigma) = sum y / (sigma + xi y) - n / (1 + xi) decreases in sigma.
  auto g = [&](double sigma) {
    double s = 0.0;
    for (double y : excesses) s += y / (sigma + xi * y);
    return s - target;
  };
  double lo = xi < 0.0 ? -xi * ymax : 0.0;
  double hi = std::max(ymax, 1e-300);
  while (g(hi) > 0.0) hi *= 2.0;
  if (lo == 0.0) {
    lo = hi;
    while (g(lo) < 0.0) lo *= 0.5;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) lo = mid; else hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

GpdFit gpd_fit(std::span<const double> excesses, double threshold, double rate) {
  const auto n = static_cast<Index>(excesses.size());
  if (n < kGpdMinExcesses) throw DataError("gpd_fit: at least 10 excesses required");
  for (double y : excesses)
    if (!(y > 0.0) || !std::isfinite(y)) throw DataError("gpd_fit: excesses must be positive and finite");
  const auto [mn, mx] = std::minmax_element(excesses.begin(), excesses.end());
  if (*mn == *mx) throw DataError("gpd_fit: all excesses are equal");

  const Eigen::ArrayXd y = Eigen::Map<const Eigen::ArrayXd>(excesses.data(), n);

  // Coarse grid denser near zero, then golden-section refinement.
  std::vector<double> grid(kProfileGridPoints);
  for (int i = 0; i < kProfileGridPoints; ++i) {
    const double t = static_cast<double>(i) / (kProfileGridPoints - 1);
    grid[static_cast<std::size_t>(i)] = kXiFloor + (kGpdXiUpper - kXiFloor) * t * t;
  }
  std::vector<double> ll(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ll[i] = profile_loglik(y, excesses, grid[i]);
  const auto best = static_cast<std::size_t>(std::max_element(ll.begin(), ll.end()) - ll.begin());

  GpdFit fit;
  fit.n_fit = n;
  fit.threshold = threshold;
  fit.rate = rate;
  bool interior = best > 0 && best + 1 < grid.size();
  double a = grid[best > 0 ? best - 1 : 0];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = profile_loglik(y, excesses, x1);
  double f2 = profile_loglik(y, excesses, x2);
  while (b - a > kGoldenTol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = profile_loglik(y, excesses, x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = profile_loglik(y, excesses, x1);
    }
  }
  double xi = 0.5 * (a + b);
  double top = profile_loglik(y, excesses, xi);
  if (ll[best] > top) {
    xi = grid[best];
    top = ll[best];
  }
  if (xi <= kXiFloor + 1e-8 || xi >= kGpdXiUpper - 1e-8) interior = false;
  fit.xi = xi;
  fit.sigma = gpd_profile_sigma(excesses, xi);
  fit.loglik = gpd_loglik(fit.xi, fit.sigma, y);

  // Observed information by central differences of the log-likelihood.
  const double hx = 1e-4 * std::max(1.0, std::abs(fit.xi));
  const double hs = 1e-4 * fit.sigma;
  auto f = [&](double dx, double ds) { return gpd_loglik(fit.xi + dx, fit.sigma + ds, y); };
  const double f0 = fit.loglik;
  Eigen::Matrix2d info;
  info(0, 0) = -(f(hx, 0) - 2.0 * f0 + f(-hx, 0)) / (hx * hx);
  info(1, 1) = -(f(0, hs) - 2.0 * f0 + f(0, -hs)) / (hs * hs);
  info(0, 1) = info(1, 0) = -(f(hx, hs) - f(hx, -hs) - f(-hx, hs) + f(-hx, -hs)) / (4.0 * hx * hs);
  const Eigen::LLT<Eigen::Matrix2d> llt(info);
  const bool info_ok = info.allFinite() && llt.info() == Eigen::Success;
  if (info_ok) {
    fit.covariance = llt.solve(Eigen::Matrix2d::Identity());
    fit.se_xi = std::sqrt(fit.covariance(0, 0));
    fit.se_sigma = std::sqrt(fit.covariance(1, 1));
    fit.cov_xi_sigma = fit.covariance(0, 1);
  } else {
    fit.covariance.setConstant(std::numeric_limits<double>::quiet_NaN());
    fit.se_xi = fit.se_sigma = fit.cov_xi_sigma = std::numeric_limits<double>::quiet_NaN();
  }
  fit.converged = interior && info_ok && std::isfinite(fit.loglik);
  return fit;
}

Eigen::VectorXd peak_excesses(const TimeSeries& series, double u, std::optional<int> K) {
  const auto rec = exceedances(series, u);
  if (!K) return rec.excesses;
  const auto clusters = decluster_runs(rec, *K);
  Eigen::VectorXd out(clusters.count());
  for (Index i = 0; i < clusters.count(); ++i) out[i] = clusters.peaks[static_cast<std::size_t>(i)].value - u;
  return out;
}

GpdFit gpd_fit_threshold(const TimeSeries& series, double u, std::optional<int> K) {
  const Eigen::VectorXd y = peak_excesses(series, u, K);
  const double rate = static_cast<double>(y.size()) / static_cast<double>(series.size());
  return gpd_fit(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())), u, rate);
}

std::vector<MrlPoint> mean_residual_life(const TimeSeries& series, const std::vector<double>& ps) {
  std::vector<MrlPoint> out;
  out.reserve(ps.size());
  for (double p : ps) {
    MrlPoint pt;
    pt.p = p;
    pt.u = empirical_quantile(series, p);
    std::vector<double> ex;
    for (double x : series.span())
      if (x > pt.u) ex.push_back(x - pt.u);
    pt.n = static_cast<Index>(ex.size());
    if (pt.n < kMrlMinExceedances) {
      pt.missing = true;
    } else {
      pt.mean_excess = stats::mean(ex);
      const double half = 1.96 * std::sqrt(stats::variance(ex) / static_cast<double>(pt.n));
      pt.lower = pt.mean_excess - half;
      pt.upper = pt.mean_excess + half;
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<StabilityPoint> parameter_stability(const TimeSeries& series, const std::vector<double>& ps, int K) {
  std::vector<StabilityPoint> out(ps.size());
  parallel_for(ps.size(), [&](std::size_t i) {
    StabilityPoint& pt = out[i];
    pt.p = ps[i];
    pt.u = empirical_quantile(series, ps[i]);
    try {
      const auto fit = gpd_fit_threshold(series, pt.u, K);
      pt.n = fit.n_fit;
      if (!fit.converged) {
        pt.missing = true;
        return;
      }
      pt.xi = fit.xi;
      pt.xi_lower = fit.xi - 1.96 * fit.se_xi;
      pt.xi_upper = fit.xi + 1.96 * fit.se_xi;
      pt.modified_scale = fit.sigma - fit.xi * pt.u;
      const double var = fit.covariance(1, 1) + pt.u * pt.u * fit.covariance(0, 0) - 2.0 * pt.u * fit.covariance(0, 1);
      const double se = std::sqrt(std::max(0.0, var));
      pt.modified_scale_lower = pt.modified_scale - 1.96 * se;
      pt.modified_scale_upper = pt.modified_scale + 1.96 * se;
    } catch (const DataError&) {
      pt.missing = true;
    }
  });
  return out;
}

double return_level(const GpdFit& fit, double obs_per_year, double years) {
  if (!(obs_per_year > 0.0) || !(years > 0.0)) throw DomainError("return_level: periods must be positive");
  const double events = years * obs_per_year * fit.rate;
  if (!(events > 1.0)) throw DomainError("return_level: period too short for the exceedance rate");
  return fit.threshold + gpd_excess_for_survival(fit.xi, fit.sigma, 1.0 / events);
}

double return_period(const GpdFit& fit, double obs_per_year, double x) {
  if (!(obs_per_year > 0.0)) throw DomainError("return_period: obs_per_year must be positive");
  if (!(x > fit.threshold)) throw DomainError("return_period: level must exceed the threshold");
  const double survival = gpd_survival(fit.xi, fit.sigma, x - fit.threshold);
  if (survival == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (obs_per_year * fit.rate * survival);
}

std::vector<QqPoint> qq_envelope(const GpdFit& fit, std::span<const double> excesses, int replicates,
                                 std::uint64_t seed) {
  if (!fit.converged) throw NumericalError("qq_envelope: fit did not converge");
  if (replicates < 1) throw DomainError("qq_envelope: at least one replicate required");
  const std::size_t n = excesses.size();
  if (n == 0) throw DataError("qq_envelope: no excesses");
  std::vector<double> sorted(excesses.begin(), excesses.end());
  std::sort(sorted.begin(), sorted.end());

  // sims[b][i]: i-th order statistic of replicate b.
  std::vector<std::vector<double>> sims(static_cast<std::size_t>(replicates), std::vector<double>(n));
  parallel_for(sims.size(), [&](std::size_t b) {
    Rng rng(replicate_seed(seed, b));
    for (auto& v : sims[b]) v = gpd_excess_for_survival(fit.xi, fit.sigma, rng.uniform());
    std::sort(sims[b].begin(), sims[b].end());
  });

  std::vector<QqPoint> out(n);
  std::vector<double> column(sims.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double pp = static_cast<double>(i + 1) / static_cast<double>(n + 1);
    for (std::size_t b = 0; b < sims.size(); ++b) column[b] = sims[b][i];
    out[i].empirical = sorted[i];
    out[i].model = gpd_quantile(fit.xi, fit.sigma, pp);
    out[i].lower = stats::quantile_linear(column, 0.025);
    out[i].upper = stats::quantile_linear(column, 0.975);
  }
  return out;
}

}  // namespace pot
