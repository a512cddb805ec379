#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace survstack {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Right-censored sample: observed times y_i, event indicators (true =
/// event observed), and an n x p covariate matrix. Immutable after
/// construction; every fitter takes a const reference.
class SurvivalDataset {
 public:
  SurvivalDataset(std::vector<double> observed_time,
                  std::vector<bool> event_indicator, Matrix covariates,
                  std::vector<std::string> covariate_names);

  std::size_t size() const { return time_.size(); }
  std::size_t n_covariates() const {
    return static_cast<std::size_t>(x_.cols());
  }
  std::size_t n_events() const { return n_events_; }

  double time(std::size_t i) const { return time_[i]; }
  bool event(std::size_t i) const { return event_[i]; }
  const std::vector<double>& times() const { return time_; }
  const std::vector<bool>& events() const { return event_; }
  const Matrix& covariates() const { return x_; }
  Eigen::RowVectorXd covariate_row(std::size_t i) const { return x_.row(i); }
  const std::vector<std::string>& covariate_names() const { return names_; }

  double max_time() const { return max_time_; }

  /// Observed event times (delta = 1), unsorted.
  std::vector<double> event_times() const;

  /// Row subset in the given index order.
  SurvivalDataset subset(const std::vector<std::size_t>& rows) const;

 private:
  std::vector<double> time_;
  std::vector<bool> event_;
  Matrix x_;
  std::vector<std::string> names_;
  std::size_t n_events_ = 0;
  double max_time_ = 0.0;
};

enum class CurveSide { right, left };

/// Non-increasing right-continuous step function on [0, inf) starting at 1.
/// Jump times are strictly increasing; ties supplied to the constructor are
/// merged keeping the last value.
class StepSurvivalCurve {
 public:
  StepSurvivalCurve() = default;
  StepSurvivalCurve(std::vector<double> jump_times, std::vector<double> values);

  double operator()(double t, CurveSide side = CurveSide::right) const;

  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& values() const { return values_; }

  /// Throws if the curve violates S(0)=1 / monotone / [0,1]; used by tests.
  void validate() const;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

double evaluate_curve(const StepSurvivalCurve& curve, double t,
                      CurveSide side);

/// Strictly increasing positive evaluation times t_1 < ... < t_s.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);

  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t r) const { return times_[r]; }
  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_;
};

/// Inverse-empirical-CDF ("type 1") quantiles. Left-continuous, so every
/// output is an observed value.
std::vector<double> empirical_quantiles(std::vector<double> values,
                                        const std::vector<double>& probs);

/// Quantiles of the observed (uncensored) event times at probabilities
/// 1/(count+1), ..., count/(count+1).
TimeGrid event_time_grid(const SurvivalDataset& data, std::size_t count = 9);

}  // namespace survstack
