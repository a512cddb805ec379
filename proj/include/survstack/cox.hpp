#pragma once

#include "survstack/types.hpp"

namespace survstack {

enum class TieMethod { efron, breslow };

/// Fitted proportional hazards model: log hazard ratios plus the Efron
/// baseline cumulative hazard, a non-decreasing step function with jumps at
/// event times. Beyond the last event the baseline is held constant.
struct CoxFit {
  Vector coefficients;  // length p
  std::vector<double> baseline_times;
  std::vector<double> baseline_cumhaz;
  std::size_t iterations = 0;
  double grad_norm = 0.0;

  double baseline_at(double t) const;
  double linear_predictor(const Eigen::RowVectorXd& x) const;
};

CoxFit fit_cox(const SurvivalDataset& data, TieMethod ties = TieMethod::efron);

double predict_cox(const CoxFit& fit, const Eigen::RowVectorXd& x, double t);

/// Partial log-likelihood and analytic gradient at beta on the raw
/// covariate scale. Exposed for finite-difference checks.
double cox_loglik_grad(const SurvivalDataset& data, const Vector& beta,
                       Vector& grad, TieMethod ties = TieMethod::efron);

}  // namespace survstack
