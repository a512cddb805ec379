#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "survstack/aft.hpp"

using namespace survstack;

TEST_CASE("fit_aft lognormal: Monte-Carlo parameter recovery at n=5000") {
  Vector beta(3);
  beta << 0.8, -0.5, 0.3;
  auto data = testutil::lognormal_sample(5000, beta, 0.5, 30.0, 101);
  auto fit = fit_aft(data, AftFamily::lognormal);
  CHECK(fit.grad_norm <= 1e-6);
  CHECK(std::abs(fit.coefficients[0] - 0.0) < 0.05);  // true intercept 0
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(fit.coefficients[j + 1] - beta[j]) < 0.05);
  CHECK(std::abs(fit.scale() - 0.5) < 0.03);
}

TEST_CASE("fit_aft weibull: recovers scale 1/1.1 from shape-1.1 data") {
  // T ~ Weibull(shape 1.1, scale exp(x'beta)) means log T = x'beta + W/1.1.
  std::mt19937_64 rng(202);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif01;
  const std::size_t n = 5000;
  Vector beta(2);
  beta << 0.6, -0.4;
  Matrix x(n, 2);
  std::vector<double> y(n);
  std::vector<bool> d(n);
  std::uniform_real_distribution<double> cen(0.0, 40.0);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = norm(rng);
    x(i, 1) = norm(rng);
    const double eta = x.row(i) * beta;
    const double u = unif01(rng);
    const double t = std::exp(eta) * std::pow(-std::log(u), 1.0 / 1.1);
    const double c = cen(rng);
    y[i] = std::min(t, c);
    d[i] = t < c;
  }
  SurvivalDataset data(y, d, x, {});
  auto fit = fit_aft(data, AftFamily::weibull);
  CHECK(fit.grad_norm <= 1e-6);
  CHECK(std::abs(fit.scale() - 1.0 / 1.1) < 0.05);
  for (int j = 0; j < 2; ++j)
    CHECK(std::abs(fit.coefficients[j + 1] - beta[j]) < 0.05);
}

TEST_CASE("fit_aft: zero-variance covariate gets coefficient 0") {
  Vector beta(1);
  beta << 0.7;
  auto base = testutil::lognormal_sample(400, beta, 0.5, 20.0, 7);
  Matrix x2(base.size(), 2);
  x2.col(0) = base.covariates().col(0);
  x2.col(1).setZero();
  SurvivalDataset padded(base.times(), base.events(), x2, {});
  for (auto family : {AftFamily::lognormal, AftFamily::weibull}) {
    auto fit_base = fit_aft(base, family);
    auto fit_pad = fit_aft(padded, family);
    CHECK(fit_pad.coefficients[2] == 0.0);
    CHECK(fit_pad.coefficients[0] ==
          doctest::Approx(fit_base.coefficients[0]).epsilon(1e-8));
    CHECK(fit_pad.coefficients[1] ==
          doctest::Approx(fit_base.coefficients[1]).epsilon(1e-8));
    CHECK(fit_pad.log_scale ==
          doctest::Approx(fit_base.log_scale).epsilon(1e-8));
  }
}

TEST_CASE("fit_aft: exactly collinear design is an error") {
  Vector beta(1);
  beta << 0.5;
  auto base = testutil::lognormal_sample(100, beta, 0.5, 20.0, 9);
  Matrix x2(base.size(), 2);
  x2.col(0) = base.covariates().col(0);
  x2.col(1) = 2.0 * base.covariates().col(0);
  SurvivalDataset data(base.times(), base.events(), x2, {});
  CHECK_THROWS_AS(fit_aft(data, AftFamily::lognormal), Error);
}

TEST_CASE("aft_loglik_grad matches central finite differences") {
  Vector beta(2);
  beta << 0.5, -0.3;
  auto data = testutil::lognormal_sample(120, beta, 0.6, 8.0, 33);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  for (auto family : {AftFamily::lognormal, AftFamily::weibull}) {
    for (int rep = 0; rep < 4; ++rep) {
      Vector theta(4);  // intercept, 2 slopes, log_scale
      for (int j = 0; j < 4; ++j) theta[j] = unif(rng);
      Vector grad;
      aft_loglik_grad(family, data, theta, grad);
      for (int j = 0; j < 4; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
        Vector tp = theta, tm = theta, dummy;
        tp[j] += h;
        tm[j] -= h;
        const double fd = (aft_loglik_grad(family, data, tp, dummy) -
                           aft_loglik_grad(family, data, tm, dummy)) /
                          (2 * h);
        CHECK(grad[j] ==
              doctest::Approx(fd).epsilon(1e-5).scale(std::abs(fd) + 1.0));
      }
    }
  }
}

TEST_CASE("predict_aft: closed-form anchors") {
  AftFit fit;
  fit.coefficients = Vector::Zero(2);
  fit.coefficients[1] = 0.5;
  fit.log_scale = 0.0;
  Eigen::RowVectorXd x(1);
  x << 2.0;  // eta = 1.0

  fit.family = AftFamily::lognormal;
  CHECK(predict_aft(fit, x, 1e-12) == doctest::Approx(1.0));
  CHECK(predict_aft(fit, x, std::exp(1.0)) == doctest::Approx(0.5));

  fit.family = AftFamily::weibull;
  fit.coefficients[1] = 0.0;  // eta = 0, sigma = 1: unit exponential
  CHECK(predict_aft(fit, x, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(predict_aft(fit, x, 1e-12) == doctest::Approx(1.0));
}

TEST_CASE("predict_aft: non-increasing in t") {
  AftFit fit;
  fit.family = AftFamily::weibull;
  fit.coefficients = Vector::Zero(2);
  fit.coefficients[1] = 0.3;
  fit.log_scale = std::log(0.8);
  Eigen::RowVectorXd x(1);
  x << -1.0;
  double prev = 1.0;
  for (double t = 0.01; t < 20.0; t *= 1.7) {
    const double s = predict_aft(fit, x, t);
    CHECK(s <= prev + 1e-15);
    CHECK(s >= 0.0);
    prev = s;
  }
}

TEST_CASE("fit_aft: time-scaling equivariance") {
  Vector beta(2);
  beta << 0.4, -0.6;
  auto data = testutil::lognormal_sample(300, beta, 0.5, 15.0, 55);
  const double c = 3.7;
  std::vector<double> scaled(data.times());
  for (auto& t : scaled) t *= c;
  SurvivalDataset data2(scaled, data.events(), data.covariates(), {});
  for (auto family : {AftFamily::lognormal, AftFamily::weibull}) {
    auto f1 = fit_aft(data, family);
    auto f2 = fit_aft(data2, family);
    CHECK(f2.coefficients[0] ==
          doctest::Approx(f1.coefficients[0] + std::log(c)).epsilon(1e-6));
    Eigen::RowVectorXd x(2);
    x << 0.7, -0.2;
    for (double t : {0.5, 1.0, 2.0, 5.0})
      CHECK(predict_aft(f2, x, c * t) ==
            doctest::Approx(predict_aft(f1, x, t)).epsilon(1e-6));
  }
}
