#pragma once

#include <cstdint>
#include <optional>

#include "survstack/types.hpp"

namespace survstack {

struct ForestConfig {
  std::size_t n_trees = 250;
  std::size_t mtry = 0;  // 0 = ceil(sqrt(p))
  std::size_t min_node_events = 3;
  std::size_t n_split_candidates = 10;
  bool exhaustive_splits = false;
  std::uint64_t seed = 0;
};

/// One survival tree: flat node arrays. Leaves carry a Nelson-Aalen
/// cumulative hazard over the in-bag leaf sample, tabulated on the forest's
/// shared event-time grid.
struct SurvivalTree {
  // feature < 0 marks a leaf; leaf_id indexes leaf_chf.
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> leaf_id;
  std::vector<std::vector<double>> leaf_chf;

  std::size_t leaf_for(const Eigen::RowVectorXd& x) const;
};

class SurvivalForest {
 public:
  SurvivalForest() = default;
  SurvivalForest(ForestConfig config, std::vector<double> event_grid,
                 std::vector<SurvivalTree> trees,
                 std::vector<std::vector<std::uint8_t>> inbag);

  const ForestConfig& config() const { return config_; }
  const std::vector<double>& event_grid() const { return grid_; }
  const std::vector<SurvivalTree>& trees() const { return trees_; }
  const std::vector<std::vector<std::uint8_t>>& inbag() const { return inbag_; }

  /// Ensemble cumulative hazard: mean of per-tree CHFs at t, summed in
  /// tree-index order.
  double cumhaz(const Eigen::RowVectorXd& x, double t) const;
  double survival(const Eigen::RowVectorXd& x, double t) const;

  /// Out-of-bag prediction for training subject i: averages only the trees
  /// whose bootstrap sample excluded i. Throws "no oob trees" if none.
  double oob_cumhaz(std::size_t subject, const Eigen::RowVectorXd& x,
                    double t) const;
  double oob_survival(std::size_t subject, const Eigen::RowVectorXd& x,
                      double t) const;
  std::size_t oob_tree_count(std::size_t subject) const;

  /// Whole-curve averages on the forest event grid: one tree walk per tree
  /// instead of one per evaluation time.
  std::vector<double> average_chf_curve(const Eigen::RowVectorXd& x) const;
  std::vector<double> oob_average_chf_curve(std::size_t subject,
                                            const Eigen::RowVectorXd& x) const;

 private:
  ForestConfig config_;
  std::vector<double> grid_;
  std::vector<SurvivalTree> trees_;
  std::vector<std::vector<std::uint8_t>> inbag_;  // per tree, n flags
};

SurvivalForest fit_forest(const SurvivalDataset& data,
                          const ForestConfig& config);

}  // namespace survstack
