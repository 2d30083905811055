#pragma once

#include "pot/core.hpp"
#include "pot/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace pot {

// Shapes with |xi| below this use the exponential limit.
inline constexpr double kGpdXiEpsilon = 1e-8;

template <typename Scalar>
Scalar gpd_cdf(Scalar xi, Scalar sigma, Scalar y) {
  using std::abs;
  using std::exp;
  using std::log1p;
  if (!(sigma > Scalar(0))) throw DomainError("gpd_cdf: sigma must be positive");
  if (y <= Scalar(0)) return Scalar(0);
  if (abs(xi) < Scalar(kGpdXiEpsilon)) return -std::expm1(-y / sigma);
  const Scalar z = xi * y / sigma;
  if (z <= Scalar(-1)) return Scalar(1);  // beyond the upper endpoint
  return -std::expm1(-log1p(z) / xi);
}

template <typename Scalar>
Scalar gpd_quantile(Scalar xi, Scalar sigma, Scalar p) {
  using std::abs;
  using std::log1p;
  if (!(sigma > Scalar(0))) throw DomainError("gpd_quantile: sigma must be positive");
  if (!(p >= Scalar(0) && p < Scalar(1))) throw DomainError("gpd_quantile: p must lie in [0, 1)");
  const Scalar log_survival = log1p(-p);
  if (abs(xi) < Scalar(kGpdXiEpsilon)) return -sigma * log_survival;
  return sigma * std::expm1(-xi * log_survival) / xi;
}

// Log-likelihood of excesses; -inf outside the support.
template <typename Derived>
typename Derived::Scalar gpd_loglik(typename Derived::Scalar xi, typename Derived::Scalar sigma,
                                    const Eigen::ArrayBase<Derived>& y) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::log;
  if (!(sigma > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
  const auto n = static_cast<Scalar>(y.size());
  if (abs(xi) < Scalar(kGpdXiEpsilon)) return -n * log(sigma) - y.sum() / sigma;
  const auto z = (xi / sigma) * y;
  if ((z <= Scalar(-1)).any()) return -std::numeric_limits<Scalar>::infinity();
  return -n * log(sigma) - (Scalar(1) + Scalar(1) / xi) * z.log1p().sum();
}

struct GpdFit {
  double xi = 0.0;
  double sigma = 1.0;
  double se_xi = 0.0;
  double se_sigma = 0.0;
  double cov_xi_sigma = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double loglik = 0.0;
  Index n_fit = 0;
  double threshold = 0.0;
  double rate = 1.0;  // exceedances (or clusters) per observation
  bool converged = false;
};

inline constexpr Index kGpdMinExcesses = 10;
inline constexpr double kGpdXiLower = -0.5;
inline constexpr double kGpdXiUpper = 5.0;

/// Profile maximum likelihood over xi in (-0.5, 5] with the scale solved
/// exactly for each xi; standard errors from the numerical observed
/// information.
GpdFit gpd_fit(std::span<const double> excesses, double threshold = 0.0, double rate = 1.0);

// Fits to the exceedances of u: all of them (rate N/n) or, when K is given,
// the runs-declustered cluster peaks (rate clusters/n).
GpdFit gpd_fit_threshold(const TimeSeries& series, double u, std::optional<int> K);

// Excesses used by gpd_fit_threshold.
Eigen::VectorXd peak_excesses(const TimeSeries& series, double u, std::optional<int> K);

// Scale solving the likelihood equation for a fixed shape.
double gpd_profile_sigma(std::span<const double> excesses, double xi);

struct MrlPoint {
  double p = 0.0;
  double u = 0.0;
  Index n = 0;
  double mean_excess = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool missing = false;
};

inline constexpr Index kMrlMinExceedances = 5;

std::vector<MrlPoint> mean_residual_life(const TimeSeries& series, const std::vector<double>& ps);

struct StabilityPoint {
  double p = 0.0;
  double u = 0.0;
  Index n = 0;
  double xi = 0.0;
  double xi_lower = 0.0;
  double xi_upper = 0.0;
  double modified_scale = 0.0;  // sigma' - xi * u
  double modified_scale_lower = 0.0;
  double modified_scale_upper = 0.0;
  bool missing = false;
};

std::vector<StabilityPoint> parameter_stability(const TimeSeries& series,
                                                const std::vector<double>& ps, int K);

/// Level exceeded once every `years` on average.
double return_level(const GpdFit& fit, double obs_per_year, double years);

/// Mean waiting time in years for exceeding x; +inf above a finite upper
/// endpoint.
double return_period(const GpdFit& fit, double obs_per_year, double x);

struct QqPoint {
  double empirical = 0.0;
  double model = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Ordered excesses against fitted quantiles at i/(n+1) with a pointwise 95%
// parametric-bootstrap envelope.
std::vector<QqPoint> qq_envelope(const GpdFit& fit, std::span<const double> excesses, int replicates,
                                 std::uint64_t seed);

}  // namespace pot
