#include "pot/simulate.hpp"

#include "pot/error.hpp"
#include "pot/gpd.hpp"

#include <cmath>
#include <string>

namespace pot {

const char* to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::ar1_cauchy: return "ar1";
    case ProcessKind::ar2_pareto: return "ar2";
    case ProcessKind::logistic_markov: return "markov";
    case ProcessKind::farima: return "farima";
    case ProcessKind::exact_mixture: return "mixture";
    case ProcessKind::exact_gpd: return "gpd";
  }
  return "unknown";
}

ProcessKind parse_process_kind(const std::string& name) {
  if (name == "ar1" || name == "ar1_cauchy") return ProcessKind::ar1_cauchy;
  if (name == "ar2" || name == "ar2_pareto") return ProcessKind::ar2_pareto;
  if (name == "markov" || name == "logistic_markov") return ProcessKind::logistic_markov;
  if (name == "farima") return ProcessKind::farima;
  if (name == "mixture" || name == "exact_mixture") return ProcessKind::exact_mixture;
  if (name == "gpd" || name == "exact_gpd") return ProcessKind::exact_gpd;
  throw DomainError("unknown process '" + name + "'");
}

int ProcessSpec::resolved_burn_in() const {
  if (burn_in) return *burn_in;
  switch (kind) {
    case ProcessKind::farima: return params.truncation + kDefaultBurnIn;
    case ProcessKind::exact_mixture:
    case ProcessKind::exact_gpd: return 0;
    default: return kDefaultBurnIn;
  }
}

void ProcessSpec::validate() const {
  const auto& p = params;
  if (n < 2) throw DomainError("process length n must be at least 2");
  if (burn_in && *burn_in < 0) throw DomainError("burn-in must be nonnegative");
  switch (kind) {
    case ProcessKind::ar1_cauchy:
      if (!(std::abs(p.phi) < 1.0)) throw DomainError("ar1: |phi| must be below 1");
      break;
    case ProcessKind::ar2_pareto:
      if (!(p.phi2 + p.phi1 < 1.0 && p.phi2 - p.phi1 < 1.0 && std::abs(p.phi2) < 1.0))
        throw DomainError("ar2: (phi1, phi2) outside the stationarity triangle");
      if (!(p.alpha > 0.0)) throw DomainError("ar2: alpha must be positive");
      break;
    case ProcessKind::logistic_markov:
      if (!(p.r >= 1.0)) throw DomainError("markov: r must be at least 1");
      break;
    case ProcessKind::farima:
      if (!(p.d >= 0.0 && p.d < 0.5)) throw DomainError("farima: d must lie in [0, 0.5)");
      if (!(std::abs(p.phi_farima) < 1.0)) throw DomainError("farima: |phi| must be below 1");
      if (p.truncation < 1) throw DomainError("farima: truncation lag must be positive");
      break;
    case ProcessKind::exact_mixture:
      if (!(p.theta > 0.0 && p.theta <= 1.0)) throw DomainError("mixture: theta must lie in (0, 1]");
      if (!(p.tail_prob > 0.0 && p.tail_prob < 1.0)) throw DomainError("mixture: tail_prob must lie in (0, 1)");
      break;
    case ProcessKind::exact_gpd:
      if (!(p.sigma > 0.0)) throw DomainError("gpd: sigma must be positive");
      break;
  }
}

std::optional<double> known_theta(const ProcessSpec& spec) {
  const auto& p = spec.params;
  switch (spec.kind) {
    case ProcessKind::ar1_cauchy:
      if (p.phi >= 0.0) return 1.0 - p.phi;
      return std::nullopt;
    case ProcessKind::ar2_pareto:
      if (p.phi1 == 0.0 && p.phi2 == 0.0) return 1.0;
      if (p.phi1 == 0.95 && p.phi2 == -0.89 && p.alpha == 2.0) return 0.25;
      return std::nullopt;
    case ProcessKind::logistic_markov:
      if (p.r == 1.0) return 1.0;
      if (p.r == 2.0) return 0.33;
      return std::nullopt;
    case ProcessKind::farima:
      if (p.d == 0.0) return 1.0;
      return std::nullopt;
    case ProcessKind::exact_mixture: return p.theta;
    case ProcessKind::exact_gpd: return 1.0;
  }
  return std::nullopt;
}

TimeSeries simulate(const ProcessSpec& spec) {
  spec.validate();
  const auto& p = spec.params;
  const int burn = spec.resolved_burn_in();
  switch (spec.kind) {
    case ProcessKind::ar1_cauchy: return ar1_cauchy(spec.n, p.phi, spec.seed, burn);
    case ProcessKind::ar2_pareto: return ar2_pareto(spec.n, p.phi1, p.phi2, p.alpha, spec.seed, burn);
    case ProcessKind::logistic_markov: return logistic_markov(spec.n, p.r, spec.seed, burn);
    case ProcessKind::farima: return farima(spec.n, p.phi_farima, p.d, spec.seed, p.truncation, burn);
    case ProcessKind::exact_mixture: return exact_mixture_series(spec.n, p.theta, p.tail_prob, spec.seed);
    case ProcessKind::exact_gpd:
      return TimeSeries(exact_gpd_sample(spec.n, p.xi, p.sigma, spec.seed), "gpd");
  }
  throw DomainError("unknown process");
}

Eigen::VectorXd ar1_filter(const Eigen::VectorXd& innovations, double phi) {
  Eigen::VectorXd y(innovations.size());
  double prev = 0.0;
  for (Index t = 0; t < innovations.size(); ++t) {
    prev = phi * prev + innovations[t];
    y[t] = prev;
  }
  return y;
}

TimeSeries ar1_cauchy(Index n, double phi, std::uint64_t seed, int burn_in) {
  if (!(std::abs(phi) < 1.0)) throw DomainError("ar1: |phi| must be below 1");
  Rng rng(seed);
  Eigen::VectorXd z(n + burn_in);
  for (Index t = 0; t < z.size(); ++t) z[t] = rng.cauchy();
  return TimeSeries(ar1_filter(z, phi).tail(n), "ar1");
}

TimeSeries ar2_pareto(Index n, double phi1, double phi2, double alpha, std::uint64_t seed, int burn_in) {
  if (!(phi2 + phi1 < 1.0 && phi2 - phi1 < 1.0 && std::abs(phi2) < 1.0))
    throw DomainError("ar2: (phi1, phi2) outside the stationarity triangle");
  Rng rng(seed);
  const Index total = n + burn_in;
  Eigen::VectorXd y(total);
  double y1 = 0.0, y2 = 0.0;
  for (Index t = 0; t < total; ++t) {
    const double v = phi1 * y1 + phi2 * y2 + rng.pareto(alpha);
    y2 = y1;
    y1 = v;
    y[t] = v;
  }
  return TimeSeries(y.tail(n), "ar2");
}

double logistic_conditional_cdf(double x, double y, double r) {
  const double a = -r * x;
  const double b = -r * y;
  const double hi = std::max(a, b);
  const double log_A = hi + std::log1p(std::exp(std::min(a, b) - hi));
  const double log_cdf = -std::exp(log_A / r) + (1.0 / r - 1.0) * log_A - r * x + x + std::exp(-x);
  return std::exp(std::min(0.0, log_cdf));
}

double logistic_transition(double x, double u, double r) {
  double lo = x - 40.0;
  double hi = x + 40.0;
  for (int expand = 0; logistic_conditional_cdf(x, lo, r) > u; ++expand) {
    if (expand > 50) throw NumericalError("logistic transition: cannot bracket lower quantile");
    lo -= 40.0;
  }
  for (int expand = 0; logistic_conditional_cdf(x, hi, r) < u; ++expand) {
    if (expand > 50) throw NumericalError("logistic transition: cannot bracket upper quantile");
    hi += 40.0;
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (logistic_conditional_cdf(x, mid, r) < u) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

TimeSeries logistic_markov(Index n, double r, std::uint64_t seed, int burn_in) {
  if (!(r >= 1.0)) throw DomainError("markov: r must be at least 1");
  Rng rng(seed);
  const Index total = n + burn_in;
  Eigen::VectorXd x(total);
  double state = rng.gumbel();
  for (Index t = 0; t < total; ++t) {
    if (t > 0) state = r == 1.0 ? rng.gumbel() : logistic_transition(state, rng.uniform(), r);
    x[t] = state;
  }
  return TimeSeries(x.tail(n), "markov");
}

Eigen::VectorXd fractional_weights(double d, int m) {
  Eigen::VectorXd psi(m + 1);
  psi[0] = 1.0;
  for (int j = 1; j <= m; ++j) psi[j] = psi[j - 1] * (static_cast<double>(j) - 1.0 + d) / static_cast<double>(j);
  return psi;
}

TimeSeries farima(Index n, double phi, double d, std::uint64_t seed, int truncation, std::optional<int> burn_in) {
  if (!(d >= 0.0 && d < 0.5)) throw DomainError("farima: d must lie in [0, 0.5)");
  if (!(std::abs(phi) < 1.0)) throw DomainError("farima: |phi| must be below 1");
  const int burn = burn_in.value_or(truncation + kDefaultBurnIn);
  const Index total = n + burn;
  Rng rng(seed);
  Eigen::VectorXd eps(total + truncation);
  for (Index t = 0; t < eps.size(); ++t) eps[t] = rng.normal();
  const Eigen::VectorXd psi_rev = fractional_weights(d, truncation).reverse();
  Eigen::VectorXd x(total);
  for (Index t = 0; t < total; ++t) x[t] = psi_rev.dot(eps.segment(t, truncation + 1));
  return TimeSeries(ar1_filter(x, phi).tail(n), "farima");
}

KGapSample exact_mixture_gaps(Index N, double theta, std::uint64_t seed) {
  if (N < 2) throw DomainError("exact_mixture_gaps: N must be at least 2");
  if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("exact_mixture_gaps: theta must lie in (0, 1]");
  Rng rng(seed);
  KGapSample s;
  s.K = 0;
  s.tail_prob = 1.0;
  s.c.resize(N - 1);
  for (Index i = 0; i < N - 1; ++i) s.c[i] = rng.uniform() < theta ? rng.exponential() / theta : 0.0;
  s.n_positive = (s.c > 0.0).count();
  s.sum_c = s.c.sum();
  return s;
}

TimeSeries exact_mixture_series(Index n, double theta, double tail_prob, std::uint64_t seed) {
  if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("mixture: theta must lie in (0, 1]");
  if (!(tail_prob > 0.0 && tail_prob < 1.0)) throw DomainError("mixture: tail_prob must lie in (0, 1)");
  Rng rng(seed);
  const double q = tail_prob * theta;
  const double log_fail = std::log1p(-q);
  auto geometric = [&] { return static_cast<Index>(std::max(1.0, std::ceil(std::log(rng.uniform()) / log_fail))); };
  // Background strictly below 1, exceedances strictly above. Members of a
  // cluster share one level, so any threshold above 1 removes whole
  // clusters and approximately keeps the gap law.
  Eigen::VectorXd x(n);
  for (Index t = 0; t < n; ++t) x[t] = rng.uniform();
  double level = 1.0 + rng.exponential();
  for (Index j = geometric() - 1; j < n;) {
    x[j] = level;
    if (rng.uniform() < theta) {
      j += 1 + geometric();
      level = 1.0 + rng.exponential();
    } else {
      j += 1;
    }
  }
  return TimeSeries(std::move(x), "mixture");
}

Eigen::VectorXd exact_gpd_sample(Index n, double xi, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw DomainError("exact_gpd_sample: sigma must be positive");
  Rng rng(seed);
  Eigen::VectorXd y(n);
  for (Index i = 0; i < n; ++i) y[i] = gpd_quantile(xi, sigma, rng.uniform());
  return y;
}

}  // namespace pot
