#include "survstack/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace survstack {

SurvivalDataset::SurvivalDataset(std::vector<double> observed_time,
                                 std::vector<bool> event_indicator,
                                 Matrix covariates,
                                 std::vector<std::string> covariate_names)
    : time_(std::move(observed_time)),
      event_(std::move(event_indicator)),
      x_(std::move(covariates)),
      names_(std::move(covariate_names)) {
  const std::size_t n = time_.size();
  if (n == 0) throw Error("empty dataset");
  if (event_.size() != n)
    throw Error("event indicator length does not match time vector");
  if (static_cast<std::size_t>(x_.rows()) != n)
    throw Error("covariate row count does not match time vector");
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j)
      names_.push_back("x" + std::to_string(j + 1));
  }
  if (names_.size() != static_cast<std::size_t>(x_.cols()))
    throw Error("covariate name count does not match covariate columns");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(time_[i] > 0.0))
      throw Error("observed time must be positive (row " +
                  std::to_string(i + 1) + ")");
    if (!std::isfinite(time_[i]))
      throw Error("non-finite observed time (row " + std::to_string(i + 1) +
                  ")");
    if (event_[i]) ++n_events_;
  }
  if (!x_.allFinite()) throw Error("covariate matrix has non-finite entries");
  if (n_events_ == 0) throw Error("dataset contains no observed events");
  max_time_ = *std::max_element(time_.begin(), time_.end());
}

std::vector<double> SurvivalDataset::event_times() const {
  std::vector<double> out;
  out.reserve(n_events_);
  for (std::size_t i = 0; i < size(); ++i)
    if (event_[i]) out.push_back(time_[i]);
  return out;
}

SurvivalDataset SurvivalDataset::subset(
    const std::vector<std::size_t>& rows) const {
  std::vector<double> t;
  std::vector<bool> d;
  Matrix x(rows.size(), x_.cols());
  t.reserve(rows.size());
  d.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    t.push_back(time_[rows[k]]);
    d.push_back(event_[rows[k]]);
    x.row(static_cast<Eigen::Index>(k)) =
        x_.row(static_cast<Eigen::Index>(rows[k]));
  }
  return SurvivalDataset(std::move(t), std::move(d), std::move(x), names_);
}

StepSurvivalCurve::StepSurvivalCurve(std::vector<double> jump_times,
                                     std::vector<double> values) {
  if (jump_times.size() != values.size())
    throw Error("jump time / value length mismatch");
  // Sort by time, merge ties keeping the last value.
  std::vector<std::size_t> order(jump_times.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return jump_times[a] < jump_times[b];
                   });
  for (std::size_t k : order) {
    const double t = jump_times[k];
    if (!(t > 0.0)) throw Error("jump times must be positive");
    if (!times_.empty() && t == times_.back()) {
      values_.back() = values[k];
    } else {
      times_.push_back(t);
      values_.push_back(values[k]);
    }
  }
}

double StepSurvivalCurve::operator()(double t, CurveSide side) const {
  if (t < 0.0) throw Error("curve evaluated at negative time");
  // Largest index with times_[idx] <= t (right) or < t (left).
  auto it = (side == CurveSide::right)
                ? std::upper_bound(times_.begin(), times_.end(), t)
                : std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 1.0;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

void StepSurvivalCurve::validate() const {
  double prev = 1.0;
  double prev_t = 0.0;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!(times_[i] > prev_t)) throw Error("jump times not strictly increasing");
    if (values_[i] < 0.0 || values_[i] > 1.0)
      throw Error("curve value outside [0,1]");
    if (values_[i] > prev + 1e-12) throw Error("curve not non-increasing");
    prev = values_[i];
    prev_t = times_[i];
  }
}

double evaluate_curve(const StepSurvivalCurve& curve, double t,
                      CurveSide side) {
  return curve(t, side);
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) throw Error("empty time grid");
  double prev = 0.0;
  for (double t : times_) {
    if (!(t > prev)) throw Error("grid times must be strictly increasing and positive");
    prev = t;
  }
}

std::vector<double> empirical_quantiles(std::vector<double> values,
                                        const std::vector<double>& probs) {
  if (values.empty()) throw Error("empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  std::vector<double> out;
  out.reserve(probs.size());
  double prev_p = 0.0;
  for (double p : probs) {
    if (!(p > 0.0) || !(p < 1.0)) throw Error("quantile prob outside (0,1)");
    if (!(p > prev_p)) throw Error("quantile probs must be strictly increasing");
    prev_p = p;
    // Type 1: smallest order statistic x_(k) with k/n >= p.
    std::size_t k = static_cast<std::size_t>(std::ceil(p * n));
    if (k < 1) k = 1;
    if (k > values.size()) k = values.size();
    out.push_back(values[k - 1]);
  }
  return out;
}

TimeGrid event_time_grid(const SurvivalDataset& data, std::size_t count) {
  if (count == 0) throw Error("grid size must be positive");
  std::vector<double> events = data.event_times();
  if (events.size() < count)
    throw Error("need at least " + std::to_string(count) +
                " observed events, have " + std::to_string(events.size()));
  std::vector<double> probs;
  probs.reserve(count);
  for (std::size_t j = 1; j <= count; ++j)
    probs.push_back(static_cast<double>(j) / static_cast<double>(count + 1));
  std::vector<double> qs = empirical_quantiles(std::move(events), probs);
  // Quantiles of a discrete sample can repeat; the grid needs strict order.
  std::vector<double> uniq;
  for (double q : qs)
    if (uniq.empty() || q > uniq.back()) uniq.push_back(q);
  return TimeGrid(std::move(uniq));
}

}  // namespace survstack
