#include "pot/kgaps.hpp"

#include "pot/parallel.hpp"
#include "pot/random.hpp"
#include "pot/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pot {

namespace {

// Weights rescaled so the largest is one; equal weights become exactly one.
Eigen::ArrayXd unit_weights(const KGapSample& sample) {
  if (!sample.weights) return Eigen::ArrayXd::Ones(sample.size());
  const double top = sample.weights->maxCoeff();
  if (!(top > 0.0)) throw DataError("all gap weights are zero");
  return *sample.weights / top;
}

void check_theta_open(double theta, const char* where) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError(std::string(where) + ": theta must lie in (0, 1)");
}

}  // namespace

GapSums<double> gap_sums(const KGapSample& sample) { return gap_sums(sample.c, unit_weights(sample)); }

double score_contribution(double theta, double c) {
  check_theta_open(theta, "score_contribution");
  return score_contribution_unchecked(theta, c);
}

double log_likelihood(double theta, const KGapSample& sample) {
  check_theta_open(theta, "log_likelihood");
  if (!sample.weights) return kgaps_loglik(theta, gap_sums(sample.c));
  return kgaps_loglik(theta, pot::gap_sums(sample.c, *sample.weights));
}

double effective_sample_size(const KGapSample& sample) {
  if (!sample.weights) return static_cast<double>(sample.size());
  const auto& w = *sample.weights;
  const double sw2 = w.square().sum();
  return sw2 > 0.0 ? w.sum() * w.sum() / sw2 : 0.0;
}

InformationPieces information_pieces(double theta, const KGapSample& sample, JVariant variant) {
  const Eigen::ArrayXd w = unit_weights(sample);
  const Eigen::ArrayXd& c = sample.c;
  const Eigen::ArrayXd zero = (c == 0.0).cast<double>();
  const Eigen::ArrayXd pos = (c > 0.0).cast<double>();
  const double inv1m2 = 1.0 / ((1.0 - theta) * (1.0 - theta));
  const double inv2 = 1.0 / (theta * theta);
  const double total = w.sum();
  InformationPieces out;
  out.info = (w * (zero * inv1m2 + 2.0 * pos * inv2)).sum() / total;
  const Eigen::ArrayXd c_term = variant == JVariant::squared_c ? Eigen::ArrayXd(c.square()) : c;
  out.score_var = (w * (zero * inv1m2 + 4.0 * pos * inv2 + c_term - 4.0 * c / theta)).sum() / total;
  return out;
}

StandardErrors sandwich_se(double theta, const KGapSample& sample, JVariant variant) {
  if (!(theta > 0.0 && theta < 1.0) || sample.size() == 0) return {};
  const auto pieces = information_pieces(theta, sample, variant);
  const double m = effective_sample_size(sample);
  StandardErrors se;
  if (pieces.info > 0.0 && m > 0.0) se.naive = 1.0 / std::sqrt(m * pieces.info);
  if (pieces.info > 0.0 && pieces.score_var > 0.0 && m > 0.0)
    se.sandwich = std::sqrt(pieces.score_var / (m * pieces.info * pieces.info));
  return se;
}

ThetaEstimate mle(const KGapSample& sample, JVariant variant) {
  if (sample.size() == 0) throw DataError("mle: empty K-gap sample");
  const auto s = gap_sums(sample);
  ThetaEstimate est;
  est.K = sample.K;
  est.tail_prob = sample.tail_prob;
  est.n_positive = sample.n_positive;
  est.n_gaps = effective_sample_size(sample);
  est.degenerate = est.n_gaps < 2.0;

  if (s.positive_weight == 0.0) {
    est.theta_hat = 0.0;
    est.boundary = true;
  } else if (!s.any_weighted_zero) {
    // Quadratic factorises as (S*theta - 2 N_C)(theta - 1).
    est.theta_hat = std::min(1.0, 2.0 * s.positive_weight / s.sum_c);
    est.boundary = est.theta_hat >= 1.0;
  } else {
    // Smaller root of S t^2 - (S + m + N_C) t + 2 N_C = 0 written as
    // 2c / (b + sqrt(b^2 - 4ac)) to avoid cancellation.
    const double b = s.sum_c + s.weight + s.positive_weight;
    const double disc = std::max(0.0, b * b - 8.0 * s.positive_weight * s.sum_c);
    est.theta_hat = 4.0 * s.positive_weight / (b + std::sqrt(disc));
  }
  est.loglik = sample.weights ? kgaps_loglik(est.theta_hat, pot::gap_sums(sample.c, *sample.weights))
                             : kgaps_loglik(est.theta_hat, s);
  if (!est.boundary) {
    const auto se = sandwich_se(est.theta_hat, sample, variant);
    est.se_sandwich = se.sandwich;
    est.se_naive = se.naive;
  }
  return est;
}

double intervals_estimator(std::span<const Index> times) {
  if (times.size() < 2) throw DataError("intervals_estimator: at least two inter-exceedance times required");
  const auto m = static_cast<double>(times.size());
  const Index tmax = *std::max_element(times.begin(), times.end());
  double estimate = 0.0;
  if (tmax <= 2) {
    double s1 = 0.0, s2 = 0.0;
    for (Index t : times) {
      s1 += static_cast<double>(t);
      s2 += static_cast<double>(t) * static_cast<double>(t);
    }
    estimate = 2.0 * s1 * s1 / (m * s2);
  } else {
    double s1 = 0.0, s2 = 0.0;
    for (Index t : times) {
      const auto tt = static_cast<double>(t);
      s1 += tt - 1.0;
      s2 += (tt - 1.0) * (tt - 2.0);
    }
    estimate = 2.0 * s1 * s1 / (m * s2);
  }
  return std::min(1.0, estimate);
}

ThetaEstimate local_theta(std::span<const TimedGap> gaps, double center, double bandwidth, Kernel kernel,
                          int K, double tail_prob) {
  if (!(bandwidth > 0.0)) throw DomainError("local_theta: bandwidth must be positive");
  std::vector<double> c, w;
  for (const auto& g : gaps) {
    const double u = (g.t - center) / bandwidth;
    double weight = 0.0;
    if (std::abs(u) <= 1.0) weight = kernel == Kernel::uniform ? 1.0 : (1.0 - u * u) * (1.0 - u * u);
    if (weight > 0.0) {
      c.push_back(g.c);
      w.push_back(weight);
    }
  }
  if (c.empty()) throw DataError("local_theta: all kernel weights are zero");
  KGapSample sample;
  sample.K = K;
  sample.tail_prob = tail_prob;
  sample.c = Eigen::Map<Eigen::ArrayXd>(c.data(), static_cast<Index>(c.size()));
  sample.weights = Eigen::Map<Eigen::ArrayXd>(w.data(), static_cast<Index>(w.size()));
  sample.n_positive = (sample.c > 0.0).count();
  sample.sum_c = (*sample.weights * sample.c).sum();
  return mle(sample);
}

BootstrapInterval bootstrap_ci(const ExceedanceRecord& record, int K, int replicates, double level,
                               std::uint64_t seed) {
  if (replicates < 100) throw DomainError("bootstrap_ci: at least 100 replicates required");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("bootstrap_ci: level must lie in (0, 1)");
  const auto times = inter_exceedance_times(record);
  const double tail = record.tail_prob();
  std::vector<double> estimates(static_cast<std::size_t>(replicates));
  std::vector<char> at_boundary(static_cast<std::size_t>(replicates));
  parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t b) {
    Rng rng(replicate_seed(seed, b));
    std::vector<Index> resampled(times.size());
    for (auto& t : resampled) t = times[rng.below(times.size())];
    const auto est = mle(k_gaps(resampled, K, tail));
    estimates[b] = est.theta_hat;
    at_boundary[b] = est.boundary;
  });
  BootstrapInterval ci;
  ci.level = level;
  ci.replicates = replicates;
  ci.lower = stats::quantile_linear(estimates, 0.5 * (1.0 - level));
  ci.upper = stats::quantile_linear(estimates, 0.5 * (1.0 + level));
  ci.degenerate = std::all_of(at_boundary.begin(), at_boundary.end(), [](char b) { return b != 0; });
  return ci;
}

}  // namespace pot
