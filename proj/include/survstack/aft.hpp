#pragma once

#include "survstack/types.hpp"

namespace survstack {

enum class AftFamily { weibull, lognormal };

/// Fitted accelerated-failure-time model on the log-time scale:
/// log T = beta0 + x' beta + sigma * W, with W standard normal (log-Normal)
/// or standard minimum extreme value (Weibull).
struct AftFit {
  AftFamily family = AftFamily::lognormal;
  Vector coefficients;  // length p+1, intercept first
  double log_scale = 0.0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;

  double scale() const { return std::exp(log_scale); }
  double linear_predictor(const Eigen::RowVectorXd& x) const;
};

AftFit fit_aft(const SurvivalDataset& data, AftFamily family);

double predict_aft(const AftFit& fit, const Eigen::RowVectorXd& x, double t);

/// Right-censored log-likelihood and its analytic gradient at
/// theta = (coefficients..., log_scale), on the given design (no intercept
/// column; intercept is theta[0]). Exposed for finite-difference checks.
double aft_loglik_grad(AftFamily family, const SurvivalDataset& data,
                       const Vector& theta, Vector& grad);

}  // namespace survstack
