#pragma once

#include <functional>

#include "survstack/censoring.hpp"
#include "survstack/types.hpp"

namespace survstack {

/// Mean of (z_i - s_hat_i)^2.
double brier_uncensored(const std::vector<double>& z,
                        const std::vector<double>& s_hat);

/// IPCW Brier score at grid column r: (1/n) sum_i w(i,r) (Z_i - S_hat_ir)^2.
double brier_ipcw(const IpcwWeightTable& wtab, const Matrix& predictions,
                  std::size_t r);

/// Integral of the IPCW Brier score over (0, tau], tau = last grid time.
/// Trapezoid between grid points; the initial (0, t_1] segment uses the
/// score at t_1.
double integrated_brier(const IpcwWeightTable& wtab, const Matrix& predictions);

using SurvivalFn =
    std::function<double(const Eigen::RowVectorXd& x, double t)>;

/// Integrated squared survival error against a known truth:
/// (1/n) sum_i sum_j (S_hat(t_j|x_i) - S_o(t_j|x_i))^2.
double isse(const SurvivalFn& estimate, const SurvivalFn& truth,
            const Matrix& covariates, const std::vector<double>& grid);

struct MseDecomposition {
  std::vector<double> candidate_mse;   // integrated, per candidate
  double weighted_mse_total = 0.0;     // sum_k alpha_k^2 MSE_k
  double interaction_total = 0.0;      // bias x bias + corr x sd x sd terms
  double decomposition_total = 0.0;    // weighted + interaction
  double direct_mse = 0.0;             // MSE of the alpha-combination
  double relative_gap = 0.0;
};

/// Empirical check of the stacked-model MSE decomposition at fixed weights.
/// predictions[k][rep] is an n_x-by-s matrix of candidate k's predictions on
/// replicate rep; truth is n_x-by-s; grid carries the s evaluation times.
MseDecomposition mse_decomposition(
    const std::vector<std::vector<Matrix>>& predictions, const Vector& alpha,
    const Matrix& truth, const std::vector<double>& grid);

}  // namespace survstack
