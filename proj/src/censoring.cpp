#include "survstack/censoring.hpp"

#include <algorithm>
#include <map>

namespace survstack {

namespace {

// Product-limit estimator counting observations with flag==target as events.
StepSurvivalCurve product_limit(const SurvivalDataset& data,
                                bool count_events) {
  const std::size_t n = data.size();
  // Distinct times -> (count of "events", count of all exits).
  std::map<double, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < n; ++i) {
    auto& cell = tally[data.time(i)];
    if (data.event(i) == count_events) ++cell.first;
    ++cell.second;
  }
  std::vector<double> times;
  std::vector<double> values;
  double surv = 1.0;
  std::size_t at_risk = n;
  for (const auto& [t, counts] : tally) {
    const auto [d, exits] = counts;
    if (d > 0) {
      surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      times.push_back(t);
      values.push_back(surv);
    }
    at_risk -= exits;
  }
  return StepSurvivalCurve(std::move(times), std::move(values));
}

}  // namespace

StepSurvivalCurve km_censoring(const SurvivalDataset& data) {
  return product_limit(data, /*count_events=*/false);
}

StepSurvivalCurve km_event(const SurvivalDataset& data) {
  return product_limit(data, /*count_events=*/true);
}

IpcwWeightTable build_weight_table(const SurvivalDataset& data,
                                   const StepSurvivalCurve& g_hat,
                                   const TimeGrid& grid) {
  const std::size_t n = data.size();
  const std::size_t s = grid.size();
  IpcwWeightTable tab;
  tab.grid = grid;
  tab.weights = Matrix::Zero(n, s);
  tab.indicator_z = Matrix::Zero(n, s);
  for (std::size_t r = 0; r < s; ++r) {
    const double t = grid[r];
    const double g_at_t = g_hat(t, CurveSide::right);
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = data.time(i);
      double g = 0.0;
      if (yi > t) {
        // At risk at t: weight 1/G(t) regardless of censoring status.
        g = g_at_t;
      } else if (data.event(i)) {
        // Event by t: weight 1/G(t_i-).
        g = g_hat(yi, CurveSide::left);
      } else {
        // Censored by t: Delta_i(t) = 0.
        continue;
      }
      if (g <= 0.0) {
        ++tab.zero_g_count;
        continue;
      }
      tab.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) =
          1.0 / g;
      tab.indicator_z(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(r)) = yi > t ? 1.0 : 0.0;
    }
  }
  return tab;
}

}  // namespace survstack
