#pragma once

#include <memory>

#include "survstack/aft.hpp"
#include "survstack/censoring.hpp"
#include "survstack/cox.hpp"
#include "survstack/forest.hpp"
#include "survstack/types.hpp"

namespace survstack {

/// A fitted conditional survival estimator S(t|x).
class ConditionalSurvival {
 public:
  virtual ~ConditionalSurvival() = default;
  virtual double survival(const Eigen::RowVectorXd& x, double t) const = 0;
};

/// A candidate model for the stack: knows how to fit itself on a dataset
/// and how to produce out-of-fold predictions. The default OOF path refits
/// per fold; forest candidates override it with out-of-bag predictions.
class Candidate {
 public:
  explicit Candidate(std::string id) : id_(std::move(id)) {}
  virtual ~Candidate() = default;

  const std::string& id() const { return id_; }
  virtual std::unique_ptr<ConditionalSurvival> fit(
      const SurvivalDataset& data) const = 0;

  /// n x s matrix of out-of-fold survival predictions at the grid times,
  /// clipped into [0,1].
  virtual Matrix oof_matrix(const SurvivalDataset& data, const TimeGrid& grid,
                            const std::vector<int>& folds) const;

 private:
  std::string id_;
};

using CandidateList = std::vector<std::shared_ptr<const Candidate>>;

class AftCandidate : public Candidate {
 public:
  AftCandidate(std::string id, AftFamily family)
      : Candidate(std::move(id)), family_(family) {}
  AftFamily family() const { return family_; }
  std::unique_ptr<ConditionalSurvival> fit(
      const SurvivalDataset& data) const override;

 private:
  AftFamily family_;
};

class CoxCandidate : public Candidate {
 public:
  explicit CoxCandidate(std::string id) : Candidate(std::move(id)) {}
  std::unique_ptr<ConditionalSurvival> fit(
      const SurvivalDataset& data) const override;
};

class ForestCandidate : public Candidate {
 public:
  ForestCandidate(std::string id, ForestConfig config)
      : Candidate(std::move(id)), config_(config) {}
  const ForestConfig& forest_config() const { return config_; }
  std::unique_ptr<ConditionalSurvival> fit(
      const SurvivalDataset& data) const override;
  // Out-of-bag ensemble instead of fold refits; falls back to the full
  // ensemble (counted in a warning) for subjects in-bag everywhere.
  Matrix oof_matrix(const SurvivalDataset& data, const TimeGrid& grid,
                    const std::vector<int>& folds) const override;

 private:
  ForestConfig config_;
};

/// Fitted wrappers, exposed so the CLI can serialize them.
struct FittedAft : ConditionalSurvival {
  AftFit fit;
  double survival(const Eigen::RowVectorXd& x, double t) const override {
    return predict_aft(fit, x, t);
  }
};
struct FittedCox : ConditionalSurvival {
  CoxFit fit;
  double survival(const Eigen::RowVectorXd& x, double t) const override {
    return predict_cox(fit, x, t);
  }
};
struct FittedForest : ConditionalSurvival {
  SurvivalForest forest;
  double survival(const Eigen::RowVectorXd& x, double t) const override {
    return forest.survival(x, t);
  }
};

struct OofPredictionTensor {
  std::vector<Matrix> values;  // one n x s matrix per candidate, in [0,1]
  std::vector<int> fold_assignment;
  TimeGrid grid;
};

struct StackWeights {
  Vector alpha;
  double objective_value = 0.0;
  double kkt_residual = 0.0;
  std::vector<bool> active;  // true where alpha_k is pinned at 0
};

struct StackConfig {
  std::size_t grid_size = 9;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
};

struct StackedModel {
  StackedModel() = default;
  StackedModel(const StackedModel&) = delete;
  StackedModel& operator=(const StackedModel&) = delete;
  StackedModel(StackedModel&&) = default;
  StackedModel& operator=(StackedModel&&) = default;

  CandidateList candidates;
  std::vector<std::unique_ptr<ConditionalSurvival>> models;
  StackWeights weights;
  TimeGrid grid;
};

/// Random partition into k folds stratified by event status. Deterministic
/// given the seed; fold sizes differ by at most one.
std::vector<int> make_folds(const SurvivalDataset& data, std::size_t k,
                            std::uint64_t seed);

OofPredictionTensor oof_predictions(const SurvivalDataset& data,
                                    const CandidateList& specs,
                                    const TimeGrid& grid,
                                    const std::vector<int>& folds);

/// Simplex-constrained weighted least squares: minimizes
/// sum_r sum_i w(i,r) (Z_i(t_r) - sum_k alpha_k P(i,k,r))^2 over the
/// probability simplex. Exact duplicate candidate columns are merged with
/// all mass assigned to the lowest index.
StackWeights solve_stack_weights(const OofPredictionTensor& tensor,
                                 const IpcwWeightTable& wtab);

StackedModel fit_stack(const SurvivalDataset& data, const CandidateList& specs,
                       const StackConfig& config = {});

double predict_stack(const StackedModel& model, const Eigen::RowVectorXd& x,
                     double t);

struct CvSelection {
  std::size_t selected_index = 0;
  std::string selected_id;
  std::vector<double> ibs;  // per candidate
};

/// The cross-validation comparator: integrated IPCW Brier score of each
/// candidate's out-of-fold predictions over all distinct observed times in
/// (0, tau]; ties go to the earlier candidate.
CvSelection select_by_cv(const SurvivalDataset& data,
                         const CandidateList& specs,
                         const StackConfig& config = {});

/// Internal helper shared with the benchmark runner: CV selection from an
/// already computed dense-grid tensor and weight table.
CvSelection select_by_cv_from(const OofPredictionTensor& dense_tensor,
                              const IpcwWeightTable& dense_wtab,
                              const CandidateList& specs);

}  // namespace survstack
