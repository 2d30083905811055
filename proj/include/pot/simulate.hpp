#pragma once

#include "pot/core.hpp"
#include "pot/random.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>

namespace pot {

enum class ProcessKind { ar1_cauchy, ar2_pareto, logistic_markov, farima, exact_mixture, exact_gpd };

const char* to_string(ProcessKind kind);
ProcessKind parse_process_kind(const std::string& name);

inline constexpr int kDefaultBurnIn = 1000;
inline constexpr int kFarimaTruncation = 5000;

struct ProcessParams {
  double phi = 0.7;     // ar1_cauchy; farima uses phi_farima
  double phi1 = 0.95;   // ar2_pareto
  double phi2 = -0.89;
  double alpha = 2.0;   // Pareto tail index
  double r = 2.0;       // logistic dependence
  double phi_farima = 0.5;
  double d = 0.0;
  int truncation = kFarimaTruncation;
  double theta = 0.5;   // exact_mixture
  double tail_prob = 0.01;
  double xi = 0.0;      // exact_gpd
  double sigma = 1.0;
};

struct ProcessSpec {
  ProcessKind kind = ProcessKind::ar1_cauchy;
  ProcessParams params;
  Index n = 1000;
  std::uint64_t seed = 0;
  std::optional<int> burn_in;  // default depends on kind

  int resolved_burn_in() const;
  void validate() const;  // throws DomainError
};

/// Extremal index known for the process, when one is.
std::optional<double> known_theta(const ProcessSpec& spec);

TimeSeries simulate(const ProcessSpec& spec);

TimeSeries ar1_cauchy(Index n, double phi, std::uint64_t seed, int burn_in = kDefaultBurnIn);
TimeSeries ar2_pareto(Index n, double phi1, double phi2, double alpha, std::uint64_t seed,
                      int burn_in = kDefaultBurnIn);
TimeSeries logistic_markov(Index n, double r, std::uint64_t seed, int burn_in = kDefaultBurnIn);
TimeSeries farima(Index n, double phi, double d, std::uint64_t seed,
                  int truncation = kFarimaTruncation, std::optional<int> burn_in = std::nullopt);

// Coefficients of (1 - B)^(-d) up to lag m.
Eigen::VectorXd fractional_weights(double d, int m);

// y_t = phi * y_{t-1} + x_t from y_{-1} = 0.
Eigen::VectorXd ar1_filter(const Eigen::VectorXd& innovations, double phi);

// Conditional CDF of the next state given the current one for the symmetric
// logistic chain with Gumbel margins, and its numerical inverse.
double logistic_conditional_cdf(double x, double y, double r);
double logistic_transition(double x, double u, double r);

/// Exact limiting K-gap mixture: zero with probability 1 - theta, otherwise
/// Exponential with rate theta. Produces N - 1 gaps for N exceedances.
KGapSample exact_mixture_gaps(Index N, double theta, std::uint64_t seed);

/// Series whose exceedances of 1 form a discretised compound process with
/// extremal index theta: within-cluster steps of one, between-cluster waits
/// geometric with mean 1/(tail_prob * theta). Each cluster carries a single
/// Exponential level above 1, so every threshold above 1 sees the same
/// cluster structure.
TimeSeries exact_mixture_series(Index n, double theta, double tail_prob, std::uint64_t seed);

Eigen::VectorXd exact_gpd_sample(Index n, double xi, double sigma, std::uint64_t seed);

}  // namespace pot
