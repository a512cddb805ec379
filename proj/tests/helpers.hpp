#pragma once

#include <random>
#include <vector>

#include "survstack/types.hpp"

namespace testutil {

// Log-normal AFT sample with uniform censoring; beta excludes the intercept.
inline survstack::SurvivalDataset lognormal_sample(std::size_t n,
                                                   const survstack::Vector& beta,
                                                   double sigma, double cmax,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> unif(0.0, cmax);
  const auto p = static_cast<std::size_t>(beta.size());
  survstack::Matrix x(n, p);
  std::vector<double> y(n);
  std::vector<bool> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = norm(rng);
    const double eta = x.row(i) * beta;
    const double t = std::exp(eta + sigma * norm(rng));
    const double c = unif(rng);
    y[i] = std::min(t, c);
    d[i] = t < c;
  }
  return {y, d, x, {}};
}

}  // namespace testutil
