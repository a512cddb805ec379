#pragma once

#include <cstdint>
#include <random>

#include "survstack/stack.hpp"
#include "survstack/types.hpp"

namespace survstack {

enum class EventFamily { lognormal, weibull, gamma };
enum class EffectForm { linear, nonlinear };

struct ScenarioConfig {
  EventFamily family = EventFamily::lognormal;
  EffectForm form = EffectForm::linear;
  std::size_t n = 200;
  std::size_t p = 8;
  double rho = 0.4;
  Vector beta;  // defaults to (1, 0, -1, 0, 0.5, 0, -0.5, 0)
  double target_censoring = 0.25;
  std::size_t replicates = 200;
  std::uint64_t seed = 0;

  Vector effective_beta() const;
};

using Rng = std::mt19937_64;

/// MVN(0, Sigma) draws with Sigma_ij = rho^|i-j|, via Cholesky.
Matrix gen_covariates(std::size_t n, std::size_t p, double rho, Rng& rng);

/// Linear predictor eta = beta' gamma with gamma = x (linear) or
/// Phi(4x) elementwise (nonlinear).
Vector linear_predictor(const Matrix& x, const ScenarioConfig& config);

Vector gen_event_times(const Matrix& x, const ScenarioConfig& config,
                       Rng& rng);

/// True conditional survival S_o(t | eta) for the scenario family.
double true_survival(EventFamily family, double eta, double t);

/// Upper bound c of the Uniform(0, c) censoring distribution giving
/// P(C < T) ~= target, found by bisection on a Monte-Carlo estimate.
/// Cached per (family, form, target).
double calibrate_censoring(const ScenarioConfig& config);

/// 19 evenly spaced quantiles of the event-time distribution conditional on
/// the event being observed, from a Monte-Carlo oracle. Cached like the
/// censoring constant.
std::vector<double> true_event_quantile_grid(const ScenarioConfig& config,
                                             std::size_t count = 19);

struct ScenarioResult {
  std::vector<std::string> estimators;  // singles..., "stack", "cv"
  std::vector<double> mean_isse;
  std::vector<double> se_isse;
  /// Per-replicate ISSE values (successful replicates x estimators), in
  /// replicate order; enables paired comparisons between estimators.
  Matrix replicate_isse;
  std::vector<std::string> candidates;
  std::vector<double> mean_alpha;
  std::size_t replicates_done = 0;
  std::size_t replicates_failed = 0;
  double censoring_constant = 0.0;
};

/// Default candidate set of the benchmark: log-Normal, Weibull, Cox, RSF
/// with 250 trees.
CandidateList default_candidates(std::uint64_t forest_seed = 0);

ScenarioResult run_scenario(const ScenarioConfig& config,
                            const CandidateList& specs);
ScenarioResult run_scenario(const ScenarioConfig& config);

std::string family_name(EventFamily family);
std::string form_name(EffectForm form);

}  // namespace survstack
