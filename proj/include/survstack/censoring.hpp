#pragma once

#include "survstack/types.hpp"

namespace survstack {

/// Per-observation, per-grid-time IPCW weights w(i,r) = Delta_i(t_r) /
/// G_hat(T_i(t_r)) together with the at-risk indicators Z_i(t_r).
struct IpcwWeightTable {
  Matrix weights;      // n x s, non-negative
  Matrix indicator_z;  // n x s, entries in {0,1}
  TimeGrid grid;
  // Number of entries whose weight was forced to 0 because G_hat hit 0.
  std::size_t zero_g_count = 0;
};

/// Kaplan-Meier estimate of the censoring survival function: the
/// product-limit estimator with 1 - delta as the "event". Jumps only at
/// censoring times; all-event data yields the constant curve at 1.
StepSurvivalCurve km_censoring(const SurvivalDataset& data);

/// Kaplan-Meier estimate of the event survival function.
StepSurvivalCurve km_event(const SurvivalDataset& data);

IpcwWeightTable build_weight_table(const SurvivalDataset& data,
                                   const StepSurvivalCurve& g_hat,
                                   const TimeGrid& grid);

}  // namespace survstack
