#pragma once

#include <Eigen/Dense>
#include <functional>

#include "survstack/types.hpp"

namespace survstack::detail {

struct NewtonResult {
  Vector theta;
  double loglik = 0.0;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Maximizes a smooth log-likelihood by Newton ascent with step-halving.
// `eval` returns the objective and fills the analytic gradient. The Hessian
// is taken as central finite differences of the gradient, which keeps each
// model's code to one gradient routine.
inline NewtonResult newton_maximize(
    const std::function<double(const Vector&, Vector&)>& eval, Vector theta,
    double grad_tol = 1e-6, std::size_t max_iter = 100,
    std::size_t max_halvings = 20) {
  const Eigen::Index d = theta.size();
  Vector grad(d), grad_hi(d), grad_lo(d);
  double ll = eval(theta, grad);
  NewtonResult res;
  for (std::size_t it = 0; it < max_iter; ++it) {
    res.iterations = it;
    res.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (res.grad_norm <= grad_tol) {
      res.converged = true;
      break;
    }
    Matrix hess(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta[j]));
      Vector tp = theta, tm = theta;
      tp[j] += h;
      tm[j] -= h;
      eval(tp, grad_hi);
      eval(tm, grad_lo);
      hess.col(j) = (grad_hi - grad_lo) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    Vector step = -hess.ldlt().solve(grad);
    if (!step.allFinite() || step.dot(grad) <= 0.0) {
      // Hessian not usable as an ascent metric; fall back to gradient.
      step = grad / std::max(1.0, grad.norm());
    }
    double new_ll = -std::numeric_limits<double>::infinity();
    Vector trial;
    bool accepted = false;
    for (std::size_t half = 0; half <= max_halvings; ++half) {
      trial = theta + step;
      new_ll = eval(trial, grad_hi);
      if (std::isfinite(new_ll) && new_ll >= ll - 1e-14 * std::abs(ll)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    theta = trial;
    ll = new_ll;
    grad = grad_hi;
  }
  if (!res.converged) {
    ll = eval(theta, grad);
    res.grad_norm = grad.lpNorm<Eigen::Infinity>();
    res.converged = res.grad_norm <= grad_tol;
  }
  res.theta = std::move(theta);
  res.loglik = ll;
  return res;
}

// Column standardization bookkeeping. Zero-variance columns are frozen at
// coefficient zero rather than rejected, so constant covariates are inert.
struct Standardizer {
  Vector mean;
  Vector sd;               // 1.0 for frozen columns
  std::vector<bool> active;

  static Standardizer fit(const Matrix& x) {
    Standardizer st;
    const Eigen::Index p = x.cols();
    st.mean = x.colwise().mean();
    st.sd = Vector::Ones(p);
    st.active.assign(static_cast<std::size_t>(p), true);
    for (Eigen::Index j = 0; j < p; ++j) {
      const double var =
          (x.col(j).array() - st.mean[j]).square().sum() /
          static_cast<double>(x.rows());
      if (var <= 1e-24) {
        st.active[static_cast<std::size_t>(j)] = false;
      } else {
        st.sd[j] = std::sqrt(var);
      }
    }
    return st;
  }

  Matrix transform(const Matrix& x) const {
    Matrix z = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!active[static_cast<std::size_t>(j)]) {
        z.col(j).setZero();
      } else {
        z.col(j) = (x.col(j).array() - mean[j]) / sd[j];
      }
    }
    return z;
  }
};

}  // namespace survstack::detail
