#include "pot/benchmark.hpp"
#include "pot/gpd.hpp"
#include "pot/kgaps.hpp"
#include "pot/simulate.hpp"
#include "pot/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace pot;

namespace {

double theta_at(const TimeSeries& s, double p, int K) {
  const auto rec = exceedances(s, empirical_quantile(s, p));
  return mle(k_gaps(inter_exceedance_times(rec), K, rec.tail_prob())).theta_hat;
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  return {stats::mean(v), std::sqrt(stats::variance(v) / static_cast<double>(v.size()))};
}

}  // namespace

TEST(Rng, DeterministicStreams) {
  Rng a(5), b(5), c(6);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    if (x != c.next()) differs = true;
  }
  EXPECT_TRUE(differs);
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(7), 7u);
  }
}

TEST(Rng, ParetoTail) {
  Rng rng(3);
  const int n = 1000000;
  std::vector<double> z(n);
  for (auto& v : z) v = rng.pareto(2.0);
  for (double q : {2.0, 5.0, 10.0}) {
    const double p = std::pow(q, -2.0);
    const double frac = static_cast<double>(std::count_if(z.begin(), z.end(), [&](double v) { return v > q; })) / n;
    EXPECT_NEAR(frac, p, 4 * std::sqrt(p * (1 - p) / n));
  }
  // Hill estimate on the top one percent.
  std::sort(z.begin(), z.end(), std::greater<>());
  const int k = n / 100;
  double hill = 0;
  for (int i = 0; i < k; ++i) hill += std::log(z[static_cast<std::size_t>(i)] / z[static_cast<std::size_t>(k)]);
  EXPECT_NEAR(k / hill, 2.0, 0.2);
}

TEST(Generators, SameSeedSameSeriesDifferentSeedDifferent) {
  for (const char* name : {"ar1", "ar2", "markov", "farima", "mixture", "gpd"}) {
    ProcessSpec spec;
    spec.kind = parse_process_kind(name);
    spec.n = 2000;
    spec.seed = 17;
    if (spec.kind == ProcessKind::farima) spec.params.truncation = 200;
    const auto a = simulate(spec);
    const auto b = simulate(spec);
    spec.seed = 18;
    const auto c = simulate(spec);
    EXPECT_TRUE(a.values() == b.values()) << name;
    EXPECT_FALSE(a.values() == c.values()) << name;
    EXPECT_EQ(a.size(), 2000);
  }
  EXPECT_THROW(parse_process_kind("arma"), DomainError);
}

TEST(Generators, SpecValidation) {
  ProcessSpec spec;
  spec.kind = ProcessKind::ar1_cauchy;
  spec.params.phi = 1.0;
  EXPECT_THROW(spec.validate(), DomainError);
  spec.kind = ProcessKind::ar2_pareto;
  spec.params.phi1 = 0.5;
  spec.params.phi2 = 0.6;
  EXPECT_THROW(spec.validate(), DomainError);
  spec.kind = ProcessKind::logistic_markov;
  spec.params.r = 0.5;
  EXPECT_THROW(spec.validate(), DomainError);
  spec.kind = ProcessKind::farima;
  spec.params.d = 0.6;
  EXPECT_THROW(spec.validate(), DomainError);
  EXPECT_THROW(farima(100, 0.5, 0.5, 1), DomainError);
  spec.kind = ProcessKind::exact_mixture;
  spec.params.theta = 0.0;
  EXPECT_THROW(spec.validate(), DomainError);
  spec = ProcessSpec{};
  spec.burn_in = -1;
  EXPECT_THROW(spec.validate(), DomainError);
  spec.burn_in.reset();
  EXPECT_EQ(spec.resolved_burn_in(), 1000);
  spec.kind = ProcessKind::farima;
  EXPECT_EQ(spec.resolved_burn_in(), 6000);
}

TEST(Generators, KnownTheta) {
  ProcessSpec spec;
  EXPECT_DOUBLE_EQ(*known_theta(spec), 0.3);
  spec.kind = ProcessKind::ar2_pareto;
  EXPECT_DOUBLE_EQ(*known_theta(spec), 0.25);
  spec.kind = ProcessKind::logistic_markov;
  EXPECT_DOUBLE_EQ(*known_theta(spec), 0.33);
  spec.kind = ProcessKind::farima;
  EXPECT_DOUBLE_EQ(*known_theta(spec), 1.0);
  spec.params.d = 0.3;
  EXPECT_FALSE(known_theta(spec));
}

TEST(Ar1Cauchy, IidMedianAndHeavyTail) {
  const auto s = ar1_cauchy(100000, 0.0, 4);
  EXPECT_NEAR(stats::median(s.span()), 0.0, 0.02);
  const auto t = ar1_cauchy(100000, 0.7, 4);
  const double sum_sq = t.values().squaredNorm();
  EXPECT_GT(t.values().cwiseAbs2().maxCoeff() / sum_sq, 0.01);
}

TEST(Ar1Cauchy, ThetaRecovery) {
  std::vector<double> est;
  for (int rep = 0; rep < 40; ++rep) est.push_back(theta_at(ar1_cauchy(30000, 0.7, 100 + rep), 0.99, 1));
  EXPECT_NEAR(stats::mean(est), 0.3, 0.05);
}

TEST(Ar2Pareto, IidLimit) {
  EXPECT_NEAR(theta_at(ar2_pareto(30000, 0.0, 0.0, 2.0, 5), 0.98, 1), 1.0, 0.1);
  EXPECT_THROW(ar2_pareto(10, 0.5, 0.6, 2.0, 1), DomainError);
}

TEST(Ar2Pareto, ThetaRecovery) {
  std::vector<double> est;
  for (int rep = 0; rep < 30; ++rep) est.push_back(theta_at(ar2_pareto(30000, 0.95, -0.89, 2.0, 200 + rep), 0.98, 6));
  EXPECT_NEAR(stats::mean(est), 0.25, 0.07);
}

TEST(Ar2Pareto, DoubledBurnInStable) {
  std::vector<double> a, b;
  for (int rep = 0; rep < 30; ++rep) {
    a.push_back(empirical_quantile(ar2_pareto(5000, 0.95, -0.89, 2.0, 300 + rep, 1000), 0.98));
    b.push_back(empirical_quantile(ar2_pareto(5000, 0.95, -0.89, 2.0, 300 + rep, 2000), 0.98));
  }
  const auto ma = mean_se(a), mb = mean_se(b);
  EXPECT_LT(std::abs(ma.mean - mb.mean), 3 * std::hypot(ma.se, mb.se));
}

TEST(LogisticMarkov, ConditionalCdf) {
  for (double x : {-2.0, 0.0, 3.0}) {
    double prev = 0.0;
    for (double y = x - 30; y < x + 30; y += 0.5) {
      const double v = logistic_conditional_cdf(x, y, 2.0);
      EXPECT_GE(v, prev - 1e-15);
      prev = v;
    }
    EXPECT_LT(logistic_conditional_cdf(x, x - 30, 2.0), 1e-6);
    EXPECT_GT(logistic_conditional_cdf(x, x + 30, 2.0), 1 - 1e-6);
    EXPECT_NEAR(logistic_conditional_cdf(x, 1.3, 1.0), gumbel_cdf(1.3), 1e-12);
    const double y = logistic_transition(x, 0.7, 2.0);
    EXPECT_NEAR(logistic_conditional_cdf(x, y, 2.0), 0.7, 1e-8);
  }
}

TEST(LogisticMarkov, GumbelMargins) {
  for (double r : {1.0, 2.0}) {
    const auto s = logistic_markov(100000, r, 6);
    std::vector<double> v(s.span().begin(), s.span().end());
    EXPECT_LT(stats::ks_distance(v, gumbel_cdf), 0.01) << r;
  }
  EXPECT_NEAR(theta_at(logistic_markov(30000, 1.0, 7), 0.98, 1), 1.0, 0.1);
  EXPECT_GT(stats::autocorrelation(logistic_markov(20000, 2.0, 7).span(), 1), 0.3);
}

TEST(Farima, Weights) {
  const auto psi = fractional_weights(0.3, 5);
  EXPECT_EQ(psi(0), 1.0);
  EXPECT_DOUBLE_EQ(psi(1), 0.3);
  EXPECT_DOUBLE_EQ(psi(2), 0.3 * 1.3 / 2);
  EXPECT_TRUE((fractional_weights(0.0, 10).tail(10).array() == 0.0).all());
}

TEST(Farima, ZeroDEqualsAr1Recursion) {
  const Index n = 3000;
  const int M = 5000;
  const auto s = farima(n, 0.5, 0.0, 21);
  Rng rng(21);
  const Index total = n + M + kDefaultBurnIn;
  std::vector<double> eps(static_cast<std::size_t>(total + M));
  for (auto& e : eps) e = rng.normal();
  double y = 0.0;
  std::vector<double> out;
  for (Index t = 0; t < total; ++t) {
    y = 0.5 * y + eps[static_cast<std::size_t>(t + M)];
    out.push_back(y);
  }
  for (Index i = 0; i < n; ++i) ASSERT_EQ(s.values()(i), out[static_cast<std::size_t>(total - n + i)]);
}

TEST(Farima, LongMemoryDirection) {
  const auto a = farima(30000, 0.5, 0.0, 3);
  const auto b = farima(30000, 0.5, 0.3, 3);
  const double r0 = stats::autocorrelation(a.span(), 100);
  const double r3 = stats::autocorrelation(b.span(), 100);
  EXPECT_GT(r3, 0.1);
  EXPECT_GT(r3, r0);
}

TEST(Farima, ThetaOneAtHighThresholdWithoutRuns) {
  EXPECT_EQ(theta_at(farima(20000, 0.5, 0.0, 8), 0.99, 0), 1.0);
}

TEST(Farima, TruncationLagInsensitive) {
  std::vector<double> a, b;
  for (int rep = 0; rep < 12; ++rep) {
    a.push_back(stats::autocorrelation(farima(10000, 0.5, 0.3, 400 + rep, 5000).span(), 50));
    b.push_back(stats::autocorrelation(farima(10000, 0.5, 0.3, 400 + rep, 20000).span(), 50));
  }
  const auto ma = mean_se(a), mb = mean_se(b);
  EXPECT_LT(std::abs(ma.mean - mb.mean), std::max(0.03, 3 * std::hypot(ma.se, mb.se)));
}

TEST(Farima, DoubledBurnInStable) {
  std::vector<double> a, b;
  for (int rep = 0; rep < 12; ++rep) {
    a.push_back(stats::variance(farima(8000, 0.5, 0.3, 500 + rep, 2000).span()));
    b.push_back(stats::variance(farima(8000, 0.5, 0.3, 500 + rep, 2000, 2 * (2000 + kDefaultBurnIn)).span()));
  }
  const auto ma = mean_se(a), mb = mean_se(b);
  EXPECT_LT(std::abs(ma.mean - mb.mean), 3 * std::hypot(ma.se, mb.se));
}

TEST(ExactMixture, Gaps) {
  const auto all = exact_mixture_gaps(1000, 1.0, 2);
  EXPECT_EQ(all.n_positive, 999);
  EXPECT_EQ(all.size(), 999);

  const auto half = exact_mixture_gaps(100001, 0.5, 3);
  EXPECT_NEAR(static_cast<double>(half.n_positive) / static_cast<double>(half.size()), 0.5, 0.01);
  std::vector<double> positive;
  for (double c : half.c)
    if (c > 0) positive.push_back(c);
  EXPECT_LT(stats::ks_distance(positive, [](double x) { return 1 - std::exp(-0.5 * x); }), 0.01);

  EXPECT_NEAR(mle(exact_mixture_gaps(10000, 0.5, 4)).theta_hat, 0.5, 0.02);
}

TEST(ExactMixture, SeriesRecoversThetaAtEveryHighThreshold) {
  const auto s = exact_mixture_series(200000, 0.4, 0.06, 9);
  for (double p : {0.95, 0.97, 0.99}) EXPECT_NEAR(theta_at(s, p, 1), 0.4, 0.05) << p;
}

TEST(ExactGpd, KolmogorovSmirnov) {
  for (double xi : {-0.3, 0.0, 0.27}) {
    const auto y = exact_gpd_sample(100000, xi, 14.8, 10);
    std::vector<double> v(y.data(), y.data() + y.size());
    EXPECT_LT(stats::ks_distance(v, [&](double x) { return gpd_cdf(xi, 14.8, x); }), 0.01);
  }
}

TEST(Benchmark, DeterministicSchema) {
  BenchmarkConfig cfg;
  ProcessSpec ar1;
  ar1.n = 5000;
  cfg.processes = {ar1};
  cfg.reps = 10;
  cfg.p_grid = {0.95, 0.99};
  const auto a = benchmark_csv(benchmark(cfg));
  const auto b = benchmark_csv(benchmark(cfg));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("process,estimator,quantile,K,n,reps,median_rel_bias,rmse,seed\n", 0), 0u);
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 5);
  EXPECT_NE(a.find("ar1,kgaps_mle,0.95,1,5000,10,"), std::string::npos);
  cfg.reps = 5;
  EXPECT_THROW(benchmark(cfg), DomainError);
  EXPECT_THROW(parse_estimator("suveges"), DomainError);
  cfg.reps = 10;
  cfg.processes[0].kind = ProcessKind::farima;
  cfg.processes[0].params.d = 0.3;
  EXPECT_THROW(benchmark(cfg), DomainError);
}

TEST(Benchmark, MixtureConsistency) {
  BenchmarkConfig cfg;
  ProcessSpec mix;
  mix.kind = ProcessKind::exact_mixture;
  mix.params.theta = 0.5;
  mix.params.tail_prob = 0.05;
  cfg.reps = 200;
  cfg.p_grid = {0.97};
  mix.n = 3400;   // about 100 exceedances
  ProcessSpec big = mix;
  big.n = 34000;  // about 1000
  cfg.processes = {mix, big};
  const auto rows = benchmark(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (int e = 0; e < 2; ++e) {
    const auto& small_row = rows[static_cast<std::size_t>(e)];
    const auto& big_row = rows[static_cast<std::size_t>(2 + e)];
    EXPECT_LT(big_row.rmse, small_row.rmse) << to_string(small_row.estimator);
    EXPECT_LT(std::abs(big_row.median_rel_bias), 0.05) << to_string(small_row.estimator);
  }
}
