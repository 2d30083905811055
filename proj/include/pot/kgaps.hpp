#pragma once

#include "pot/core.hpp"
#include "pot/error.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace pot {

/// Which form of the empirical score variance J to use. The squared-c form
/// is the exact square of the score; the literal form keeps the linear c
/// term and exists only for comparison.
enum class JVariant { squared_c, literal_appendix };

/// Weighted sufficient statistics of a K-gap sample: total weight m, weight
/// on positive gaps, and weighted sum of gaps.
template <typename Scalar>
struct GapSums {
  Scalar weight = 0;
  Scalar positive_weight = 0;
  Scalar sum_c = 0;
  bool any_weighted_zero = false;  // some zero gap carries positive weight
};

template <typename DerivedC, typename DerivedW>
GapSums<typename DerivedC::Scalar> gap_sums(const Eigen::ArrayBase<DerivedC>& c,
                                            const Eigen::ArrayBase<DerivedW>& w) {
  using Scalar = typename DerivedC::Scalar;
  const auto positive = (c > Scalar(0)).template cast<Scalar>();
  GapSums<Scalar> s;
  s.weight = w.sum();
  s.positive_weight = (w * positive).sum();
  s.sum_c = (w * c).sum();
  s.any_weighted_zero = ((c == Scalar(0)) && (w > Scalar(0))).any();
  return s;
}

template <typename DerivedC>
GapSums<typename DerivedC::Scalar> gap_sums(const Eigen::ArrayBase<DerivedC>& c) {
  using Scalar = typename DerivedC::Scalar;
  return gap_sums(c, Eigen::Array<Scalar, Eigen::Dynamic, 1>::Ones(c.size()));
}

GapSums<double> gap_sums(const KGapSample& sample);

// K-gaps log-likelihood from sufficient statistics, with 0*log(0) = 0 so it
// is also defined at the closed boundary.
template <typename Scalar>
Scalar kgaps_loglik(Scalar theta, const GapSums<Scalar>& s) {
  using std::log;
  const Scalar zero_weight = s.weight - s.positive_weight;
  Scalar ll = -theta * s.sum_c;
  if (zero_weight != Scalar(0)) ll += zero_weight * log(Scalar(1) - theta);
  if (s.positive_weight != Scalar(0)) ll += Scalar(2) * s.positive_weight * log(theta);
  return ll;
}

template <typename Scalar>
Scalar kgaps_score(Scalar theta, const GapSums<Scalar>& s) {
  return -(s.weight - s.positive_weight) / (Scalar(1) - theta) +
         Scalar(2) * s.positive_weight / theta - s.sum_c;
}

// Per-gap score l'(theta; c).
template <typename Scalar>
Scalar score_contribution_unchecked(Scalar theta, Scalar c) {
  return c > Scalar(0) ? Scalar(2) / theta - c : -Scalar(1) / (Scalar(1) - theta);
}

/// Per-gap score; throws DomainError unless 0 < theta < 1.
double score_contribution(double theta, double c);

/// K-gaps log-likelihood; weights, when present, multiply each term.
double log_likelihood(double theta, const KGapSample& sample);

struct ThetaEstimate {
  double theta_hat = 0.0;
  double loglik = 0.0;
  std::optional<double> se_sandwich;
  std::optional<double> se_naive;
  double n_gaps = 0.0;  // N-1, or effective sample size when weighted
  Index n_positive = 0;
  int K = 0;
  double tail_prob = 0.0;
  bool boundary = false;
  bool degenerate = false;  // fewer than two effective observations
};

struct StandardErrors {
  std::optional<double> sandwich;
  std::optional<double> naive;
};

/// Closed-form maximum likelihood estimate of the extremal index.
ThetaEstimate mle(const KGapSample& sample, JVariant variant = JVariant::squared_c);

/// Sandwich and inverse-information standard errors; absent at the boundary
/// or when the variance estimate is not positive.
StandardErrors sandwich_se(double theta, const KGapSample& sample,
                           JVariant variant = JVariant::squared_c);

// Mean empirical information I and score variance J (weighted means).
struct InformationPieces {
  double info = 0.0;
  double score_var = 0.0;
};
InformationPieces information_pieces(double theta, const KGapSample& sample, JVariant variant);

// (sum w)^2 / sum w^2; count when unweighted.
double effective_sample_size(const KGapSample& sample);

/// Ferro-Segers intervals estimator, clipped to (0, 1].
double intervals_estimator(std::span<const Index> times);

enum class Kernel { uniform, biweight };

/// Gap with the time at which it occurs, for locally weighted estimation.
struct TimedGap {
  double c = 0.0;
  double t = 0.0;
};

ThetaEstimate local_theta(std::span<const TimedGap> gaps, double center, double bandwidth,
                          Kernel kernel = Kernel::uniform, int K = 0, double tail_prob = 0.0);

struct BootstrapInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int replicates = 0;
  bool degenerate = false;  // every replicate landed on the boundary
};

/// Percentile bootstrap over resampled inter-exceedance times.
BootstrapInterval bootstrap_ci(const ExceedanceRecord& record, int K, int replicates, double level,
                               std::uint64_t seed);

}  // namespace pot
