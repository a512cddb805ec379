#include "survstack/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "newton.hpp"

namespace survstack {

namespace {

struct SortedData {
  std::vector<std::size_t> order;  // descending by observed time
  explicit SortedData(const SurvivalDataset& data) {
    order.resize(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return data.time(a) > data.time(b);
                     });
  }
};

// Efron/Breslow partial likelihood over a caller-supplied design matrix.
// Walks times in descending order so risk-set sums are running totals.
double partial_loglik(const SurvivalDataset& data, const SortedData& sorted,
                      const Matrix& x, const Vector& beta, Vector* grad,
                      TieMethod ties,
                      std::vector<double>* baseline_times = nullptr,
                      std::vector<double>* baseline_increments = nullptr) {
  const Eigen::Index p = x.cols();
  const std::size_t n = data.size();
  Vector eta = x * beta;
  double ll = 0.0;
  if (grad) grad->setZero(p);
  double risk_sum = 0.0;
  Vector risk_xsum = Vector::Zero(p);
  std::size_t pos = 0;
  while (pos < n) {
    const double t = data.time(sorted.order[pos]);
    std::size_t block_end = pos;
    double death_sum = 0.0;
    Vector death_xsum = Vector::Zero(p);
    double death_eta = 0.0;
    Vector death_x = Vector::Zero(p);
    std::size_t d = 0;
    while (block_end < n && data.time(sorted.order[block_end]) == t) {
      const std::size_t i = sorted.order[block_end];
      const double r = std::exp(std::min(eta[static_cast<Eigen::Index>(i)], 700.0));
      risk_sum += r;
      risk_xsum += r * x.row(static_cast<Eigen::Index>(i)).transpose();
      if (data.event(i)) {
        ++d;
        death_sum += r;
        death_xsum += r * x.row(static_cast<Eigen::Index>(i)).transpose();
        death_eta += eta[static_cast<Eigen::Index>(i)];
        death_x += x.row(static_cast<Eigen::Index>(i)).transpose();
      }
      ++block_end;
    }
    if (d > 0) {
      ll += death_eta;
      if (grad) *grad += death_x;
      double cumhaz_inc = 0.0;
      for (std::size_t l = 0; l < d; ++l) {
        const double frac =
            ties == TieMethod::efron
                ? static_cast<double>(l) / static_cast<double>(d)
                : 0.0;
        const double denom = risk_sum - frac * death_sum;
        ll -= std::log(denom);
        if (grad) *grad -= (risk_xsum - frac * death_xsum) / denom;
        cumhaz_inc += 1.0 / denom;
      }
      if (baseline_times) {
        baseline_times->push_back(t);
        baseline_increments->push_back(cumhaz_inc);
      }
    }
    pos = block_end;
  }
  return ll;
}

}  // namespace

double CoxFit::baseline_at(double t) const {
  if (t < 0.0) throw Error("negative time");
  // baseline_times ascending; cumulative hazard right-continuous.
  auto it = std::upper_bound(baseline_times.begin(), baseline_times.end(), t);
  if (it == baseline_times.begin()) return 0.0;
  return baseline_cumhaz[static_cast<std::size_t>(it - baseline_times.begin()) - 1];
}

double CoxFit::linear_predictor(const Eigen::RowVectorXd& x) const {
  if (x.size() != coefficients.size())
    throw Error("covariate vector length mismatch");
  return x * coefficients;
}

double cox_loglik_grad(const SurvivalDataset& data, const Vector& beta,
                       Vector& grad, TieMethod ties) {
  SortedData sorted(data);
  return partial_loglik(data, sorted, data.covariates(), beta, &grad, ties);
}

CoxFit fit_cox(const SurvivalDataset& data, TieMethod ties) {
  const Eigen::Index p = static_cast<Eigen::Index>(data.n_covariates());
  if (data.n_events() < static_cast<std::size_t>(p) + 2)
    throw Error("too few events to fit Cox model: " +
                std::to_string(data.n_events()));
  const auto st = detail::Standardizer::fit(data.covariates());
  const Matrix z = st.transform(data.covariates());
  SortedData sorted(data);

  auto eval = [&](const Vector& b, Vector& g) {
    double ll = partial_loglik(data, sorted, z, b, &g, ties);
    for (Eigen::Index j = 0; j < p; ++j)
      if (!st.active[static_cast<std::size_t>(j)]) g[j] = 0.0;
    return ll;
  };
  auto res = detail::newton_maximize(eval, Vector::Zero(p));
  if (res.theta.size() > 0 &&
      res.theta.lpNorm<Eigen::Infinity>() > 50.0)
    throw Error("separation");
  if (!res.converged)
    throw Error("Cox fit did not converge after " +
                std::to_string(res.iterations) + " iterations (grad norm " +
                std::to_string(res.grad_norm) + ")");

  CoxFit fit;
  fit.iterations = res.iterations;
  fit.grad_norm = res.grad_norm;
  fit.coefficients = Vector::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (st.active[static_cast<std::size_t>(j)])
      fit.coefficients[j] = res.theta[j] / st.sd[j];

  // Baseline cumulative hazard at beta-hat on the original covariate scale.
  std::vector<double> times, increments;
  partial_loglik(data, sorted, data.covariates(), fit.coefficients, nullptr,
                 ties, &times, &increments);
  // Descending walk produced descending times; flip and accumulate.
  std::reverse(times.begin(), times.end());
  std::reverse(increments.begin(), increments.end());
  double cum = 0.0;
  for (double& inc : increments) {
    cum += inc;
    inc = cum;
  }
  fit.baseline_times = std::move(times);
  fit.baseline_cumhaz = std::move(increments);
  return fit;
}

double predict_cox(const CoxFit& fit, const Eigen::RowVectorXd& x, double t) {
  if (t <= 0.0) return 1.0;
  const double lp = fit.linear_predictor(x);
  return std::exp(-fit.baseline_at(t) * std::exp(lp));
}

}  // namespace survstack
