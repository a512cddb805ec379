#include "survstack/metrics.hpp"

#include <cmath>

namespace survstack {

namespace {

// Integral over (0, tau] of a piecewise value tabulated at the grid times:
// rectangle on (0, t_1], trapezoid after.
double integrate_grid(const std::vector<double>& times,
                      const std::vector<double>& values) {
  double total = times[0] * values[0];
  for (std::size_t r = 1; r < times.size(); ++r)
    total += (times[r] - times[r - 1]) * 0.5 * (values[r] + values[r - 1]);
  return total;
}

}  // namespace

double brier_uncensored(const std::vector<double>& z,
                        const std::vector<double>& s_hat) {
  if (z.size() != s_hat.size()) throw Error("length mismatch");
  if (z.empty()) throw Error("empty sample");
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - s_hat[i];
    sum += d * d;
  }
  return sum / static_cast<double>(z.size());
}

double brier_ipcw(const IpcwWeightTable& wtab, const Matrix& predictions,
                  std::size_t r) {
  const Eigen::Index n = wtab.weights.rows();
  if (predictions.rows() != n ||
      predictions.cols() != wtab.weights.cols())
    throw Error("prediction matrix shape mismatch");
  const auto col = static_cast<Eigen::Index>(r);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = wtab.weights(i, col);
    if (w == 0.0) continue;
    const double d = wtab.indicator_z(i, col) - predictions(i, col);
    sum += w * d * d;
  }
  return sum / static_cast<double>(n);
}

double integrated_brier(const IpcwWeightTable& wtab,
                        const Matrix& predictions) {
  std::vector<double> values(wtab.grid.size());
  for (std::size_t r = 0; r < wtab.grid.size(); ++r)
    values[r] = brier_ipcw(wtab, predictions, r);
  return integrate_grid(wtab.grid.times(), values);
}

double isse(const SurvivalFn& estimate, const SurvivalFn& truth,
            const Matrix& covariates, const std::vector<double>& grid) {
  const Eigen::Index n = covariates.rows();
  if (n == 0) throw Error("empty covariate sample");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd x = covariates.row(i);
    for (double t : grid) {
      const double d = estimate(x, t) - truth(x, t);
      total += d * d;
    }
  }
  return total / static_cast<double>(n);
}

MseDecomposition mse_decomposition(
    const std::vector<std::vector<Matrix>>& predictions, const Vector& alpha,
    const Matrix& truth, const std::vector<double>& grid) {
  const std::size_t m = predictions.size();
  if (m == 0) throw Error("no candidates");
  if (static_cast<std::size_t>(alpha.size()) != m)
    throw Error("alpha length mismatch");
  const std::size_t reps = predictions[0].size();
  if (reps < 2) throw Error("need at least 2 replicates");
  const Eigen::Index nx = truth.rows();
  const Eigen::Index s = truth.cols();
  for (const auto& cand : predictions) {
    if (cand.size() != reps) throw Error("replicate count mismatch");
    for (const auto& mat : cand)
      if (mat.rows() != nx || mat.cols() != s)
        throw Error("prediction matrix shape mismatch");
  }

  // Per (candidate, time): MSE and the pairwise interaction pieces,
  // averaged over the covariate sample; then integrated over the grid.
  const double r_count = static_cast<double>(reps);
  MseDecomposition out;
  out.candidate_mse.assign(m, 0.0);
  std::vector<std::vector<double>> mse_t(m, std::vector<double>(
                                                static_cast<std::size_t>(s)));
  std::vector<double> inter_t(static_cast<std::size_t>(s), 0.0);
  std::vector<double> direct_t(static_cast<std::size_t>(s), 0.0);

  for (Eigen::Index c = 0; c < s; ++c) {
    std::vector<double> mse(m, 0.0);
    double inter = 0.0;
    double direct = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double so = truth(i, c);
      // Replicate samples per candidate at this (x, t).
      std::vector<double> mean(m, 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t rep = 0; rep < reps; ++rep)
          mean[k] += predictions[k][rep](i, c);
        mean[k] /= r_count;
      }
      std::vector<double> var(m, 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        double acc = 0.0, sq = 0.0;
        for (std::size_t rep = 0; rep < reps; ++rep) {
          const double e = predictions[k][rep](i, c) - so;
          sq += e * e;
          const double dev = predictions[k][rep](i, c) - mean[k];
          acc += dev * dev;
        }
        mse[k] += sq / r_count;
        var[k] = acc / (r_count - 1.0);
      }
      for (std::size_t k = 0; k < m; ++k) {
        const double bias_k = mean[k] - so;
        for (std::size_t l = 0; l < m; ++l) {
          if (l == k) continue;
          double cov = 0.0;
          for (std::size_t rep = 0; rep < reps; ++rep)
            cov += (predictions[k][rep](i, c) - mean[k]) *
                   (predictions[l][rep](i, c) - mean[l]);
          cov /= r_count - 1.0;
          const double bias_l = mean[l] - so;
          inter += alpha[static_cast<Eigen::Index>(k)] *
                   alpha[static_cast<Eigen::Index>(l)] *
                   (bias_k * bias_l + cov);
        }
      }
      for (std::size_t rep = 0; rep < reps; ++rep) {
        double comb = 0.0;
        for (std::size_t k = 0; k < m; ++k)
          comb += alpha[static_cast<Eigen::Index>(k)] *
                  predictions[k][rep](i, c);
        const double e = comb - so;
        direct += e * e / r_count;
      }
    }
    const double nxd = static_cast<double>(nx);
    for (std::size_t k = 0; k < m; ++k)
      mse_t[k][static_cast<std::size_t>(c)] = mse[k] / nxd;
    inter_t[static_cast<std::size_t>(c)] = inter / nxd;
    direct_t[static_cast<std::size_t>(c)] = direct / nxd;
  }

  double weighted = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    out.candidate_mse[k] = integrate_grid(grid, mse_t[k]);
    const double a = alpha[static_cast<Eigen::Index>(k)];
    weighted += a * a * out.candidate_mse[k];
  }
  out.weighted_mse_total = weighted;
  out.interaction_total = integrate_grid(grid, inter_t);
  out.decomposition_total = out.weighted_mse_total + out.interaction_total;
  out.direct_mse = integrate_grid(grid, direct_t);
  const double denom = std::max(std::abs(out.direct_mse), 1e-300);
  out.relative_gap =
      std::abs(out.decomposition_total - out.direct_mse) / denom;
  return out;
}

}  // namespace survstack
