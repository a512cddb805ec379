#include "survstack/aft.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "newton.hpp"

namespace survstack {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double norm_phi(double w) { return std::exp(-0.5 * w * w - kLogSqrt2Pi); }

// log P(W > w) and the normal hazard phi/Q, with an asymptotic branch for
// the far upper tail where erfc underflows.
double norm_log_q(double w) {
  if (w < 8.0) return std::log(0.5 * std::erfc(w / std::sqrt(2.0)));
  const double c = 1.0 - 1.0 / (w * w) + 3.0 / (w * w * w * w);
  return -0.5 * w * w - kLogSqrt2Pi - std::log(w) + std::log(c);
}

double norm_hazard(double w) {
  if (w < 8.0) return norm_phi(w) / (0.5 * std::erfc(w / std::sqrt(2.0)));
  const double c = 1.0 - 1.0 / (w * w) + 3.0 / (w * w * w * w);
  return w / c;
}

// theta = (beta0, beta_1..p, log_scale); x has no intercept column.
double loglik_grad(AftFamily family, const std::vector<double>& y,
                   const std::vector<bool>& d, const Matrix& x,
                   const Vector& theta, Vector& grad) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double log_scale = theta[p + 1];
  const double sigma = std::exp(log_scale);
  grad.setZero(p + 2);
  double ll = 0.0;
  Vector eta = Vector::Constant(n, theta[0]);
  if (p > 0) eta += x * theta.segment(1, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = (std::log(y[static_cast<std::size_t>(i)]) - eta[i]) / sigma;
    double dmu;  // d loglik / d eta_i
    double ds;   // d loglik / d log_scale
    if (family == AftFamily::lognormal) {
      if (d[static_cast<std::size_t>(i)]) {
        ll += -log_scale - 0.5 * w * w - kLogSqrt2Pi;
        dmu = w / sigma;
        ds = w * w - 1.0;
      } else {
        ll += norm_log_q(w);
        const double h = norm_hazard(w);
        dmu = h / sigma;
        ds = h * w;
      }
    } else {
      const double ew = std::exp(std::min(w, 700.0));
      if (d[static_cast<std::size_t>(i)]) {
        ll += -log_scale + w - ew;
        dmu = (ew - 1.0) / sigma;
        ds = w * (ew - 1.0) - 1.0;
      } else {
        ll += -ew;
        dmu = ew / sigma;
        ds = w * ew;
      }
    }
    grad[0] += dmu;
    if (p > 0) grad.segment(1, p) += dmu * x.row(i).transpose();
    grad[p + 1] += ds;
  }
  return ll;
}

}  // namespace

double AftFit::linear_predictor(const Eigen::RowVectorXd& x) const {
  if (x.size() + 1 != coefficients.size())
    throw Error("covariate vector length mismatch");
  return coefficients[0] + x * coefficients.tail(x.size());
}

double aft_loglik_grad(AftFamily family, const SurvivalDataset& data,
                       const Vector& theta, Vector& grad) {
  return loglik_grad(family, data.times(), data.events(), data.covariates(),
                     theta, grad);
}

AftFit fit_aft(const SurvivalDataset& data, AftFamily family) {
  const Eigen::Index p = static_cast<Eigen::Index>(data.n_covariates());
  if (data.n_events() < static_cast<std::size_t>(p) + 2)
    throw Error("too few events to fit AFT model: " +
                std::to_string(data.n_events()));
  const auto st = detail::Standardizer::fit(data.covariates());
  const Matrix z = st.transform(data.covariates());

  // Init from least squares of log y on z over events only.
  std::vector<std::size_t> ev;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.event(i)) ev.push_back(i);
  Matrix design(ev.size(), p + 1);
  Vector logy(ev.size());
  for (std::size_t k = 0; k < ev.size(); ++k) {
    design(static_cast<Eigen::Index>(k), 0) = 1.0;
    design.row(static_cast<Eigen::Index>(k)).tail(p) =
        z.row(static_cast<Eigen::Index>(ev[k]));
    logy[static_cast<Eigen::Index>(k)] = std::log(data.time(ev[k]));
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  Eigen::Index n_active = 1;
  for (bool a : st.active) n_active += a ? 1 : 0;
  if (qr.rank() < n_active) throw Error("collinear design");
  Vector beta0 = qr.solve(logy);
  for (Eigen::Index j = 0; j < p; ++j)
    if (!st.active[static_cast<std::size_t>(j)]) beta0[j + 1] = 0.0;
  const double rss = (logy - design * beta0).squaredNorm();
  const double resid_sd =
      std::sqrt(std::max(rss / std::max<double>(1.0, ev.size() - n_active), 1e-4));

  Vector theta(p + 2);
  theta.head(p + 1) = beta0;
  theta[p + 1] = std::log(resid_sd);

  auto eval = [&](const Vector& th, Vector& g) {
    double ll = loglik_grad(family, data.times(), data.events(), z, th, g);
    // Frozen columns stay at zero.
    for (Eigen::Index j = 0; j < p; ++j)
      if (!st.active[static_cast<std::size_t>(j)]) g[j + 1] = 0.0;
    return ll;
  };
  auto res = detail::newton_maximize(eval, theta);
  if (!res.converged)
    throw Error("AFT fit did not converge after " +
                std::to_string(res.iterations) +
                " iterations (grad norm " + std::to_string(res.grad_norm) +
                ")");

  AftFit fit;
  fit.family = family;
  fit.log_scale = res.theta[p + 1];
  fit.iterations = res.iterations;
  fit.grad_norm = res.grad_norm;
  fit.coefficients = Vector::Zero(p + 1);
  double intercept = res.theta[0];
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!st.active[static_cast<std::size_t>(j)]) continue;
    fit.coefficients[j + 1] = res.theta[j + 1] / st.sd[j];
    intercept -= res.theta[j + 1] * st.mean[j] / st.sd[j];
  }
  fit.coefficients[0] = intercept;
  return fit;
}

double predict_aft(const AftFit& fit, const Eigen::RowVectorXd& x, double t) {
  if (t <= 0.0) return 1.0;
  const double eta = fit.linear_predictor(x);
  const double w = (std::log(t) - eta) / fit.scale();
  if (fit.family == AftFamily::lognormal)
    return 0.5 * std::erfc(w / std::sqrt(2.0));
  return std::exp(-std::exp(std::min(w, 700.0)));
}

}  // namespace survstack
