#include "survstack/forest.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "parallel.hpp"

namespace survstack {

namespace {

using Rng = std::mt19937_64;

Rng make_tree_rng(std::uint64_t seed, std::uint64_t tree) {
  std::seed_seq seq{seed, tree + 1};
  return Rng(seq);
}

// Standardized log-rank statistic for the two-sample split (group = x <= thr
// vs x > thr) on the node's in-bag sample. Returns nullopt when the variance
// vanishes.
std::optional<double> logrank_stat(const SurvivalDataset& data,
                                   const std::vector<std::size_t>& rows,
                                   const std::vector<bool>& in_left) {
  struct Row {
    double t;
    bool event;
    bool left;
  };
  std::vector<Row> sorted;
  sorted.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    sorted.push_back({data.time(rows[k]), data.event(rows[k]), in_left[k]});
  std::sort(sorted.begin(), sorted.end(),
            [](const Row& a, const Row& b) { return a.t < b.t; });
  double num = 0.0, var = 0.0;
  std::size_t at_risk = sorted.size();
  std::size_t at_risk_left = 0;
  for (const auto& r : sorted)
    if (r.left) ++at_risk_left;
  std::size_t pos = 0;
  while (pos < sorted.size()) {
    const double t = sorted[pos].t;
    std::size_t deaths = 0, deaths_left = 0, exits = 0, exits_left = 0;
    while (pos < sorted.size() && sorted[pos].t == t) {
      ++exits;
      if (sorted[pos].left) ++exits_left;
      if (sorted[pos].event) {
        ++deaths;
        if (sorted[pos].left) ++deaths_left;
      }
      ++pos;
    }
    if (deaths > 0 && at_risk > 1) {
      const double y = static_cast<double>(at_risk);
      const double y1 = static_cast<double>(at_risk_left);
      const double d = static_cast<double>(deaths);
      num += static_cast<double>(deaths_left) - d * y1 / y;
      var += d * (y1 / y) * (1.0 - y1 / y) * (y - d) / (y - 1.0);
    }
    at_risk -= exits;
    at_risk_left -= exits_left;
  }
  if (var <= 0.0) return std::nullopt;
  return num * num / var;
}

struct TreeBuilder {
  const SurvivalDataset& data;
  const ForestConfig& config;
  const std::vector<double>& grid;
  std::size_t mtry;
  Rng rng;
  SurvivalTree tree;

  std::size_t count_events(const std::vector<std::size_t>& rows) const {
    std::size_t e = 0;
    for (std::size_t i : rows) e += data.event(i) ? 1 : 0;
    return e;
  }

  // Nelson-Aalen CHF of the rows, tabulated on the forest grid.
  std::vector<double> nelson_aalen(const std::vector<std::size_t>& rows) const {
    std::vector<std::pair<double, bool>> sorted;
    sorted.reserve(rows.size());
    for (std::size_t i : rows) sorted.push_back({data.time(i), data.event(i)});
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> jump_t;
    std::vector<double> jump_h;
    double cum = 0.0;
    std::size_t at_risk = sorted.size();
    std::size_t pos = 0;
    while (pos < sorted.size()) {
      const double t = sorted[pos].first;
      std::size_t deaths = 0, exits = 0;
      while (pos < sorted.size() && sorted[pos].first == t) {
        ++exits;
        if (sorted[pos].second) ++deaths;
        ++pos;
      }
      if (deaths > 0) {
        cum += static_cast<double>(deaths) / static_cast<double>(at_risk);
        jump_t.push_back(t);
        jump_h.push_back(cum);
      }
      at_risk -= exits;
    }
    std::vector<double> chf(grid.size(), 0.0);
    std::size_t j = 0;
    double value = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      while (j < jump_t.size() && jump_t[j] <= grid[g]) value = jump_h[j++];
      chf[g] = value;
    }
    return chf;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double stat = -1.0;
  };

  Split find_split(const std::vector<std::size_t>& rows) {
    const std::size_t p = data.n_covariates();
    std::vector<std::size_t> features(p);
    for (std::size_t j = 0; j < p; ++j) features[j] = j;
    // Sample mtry features without replacement.
    for (std::size_t j = 0; j < mtry; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, p - 1);
      std::swap(features[j], features[pick(rng)]);
    }
    Split best;
    std::vector<bool> in_left(rows.size());
    for (std::size_t j = 0; j < mtry; ++j) {
      const std::size_t f = features[j];
      double lo = data.covariates()(static_cast<Eigen::Index>(rows[0]),
                                    static_cast<Eigen::Index>(f));
      double hi = lo;
      for (std::size_t i : rows) {
        const double v = data.covariates()(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(f));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (!(hi > lo)) continue;
      std::vector<double> thresholds;
      if (config.exhaustive_splits) {
        std::set<double> values;
        for (std::size_t i : rows)
          values.insert(data.covariates()(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(f)));
        double prev = 0.0;
        bool first = true;
        for (double v : values) {
          if (!first) thresholds.push_back(0.5 * (prev + v));
          prev = v;
          first = false;
        }
      } else {
        std::uniform_real_distribution<double> unif(lo, hi);
        for (std::size_t c = 0; c < config.n_split_candidates; ++c)
          thresholds.push_back(unif(rng));
      }
      for (double thr : thresholds) {
        std::size_t left_events = 0, right_events = 0, left_count = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          const bool l = data.covariates()(
              static_cast<Eigen::Index>(rows[k]),
              static_cast<Eigen::Index>(f)) <= thr;
          in_left[k] = l;
          if (l) ++left_count;
          if (data.event(rows[k])) (l ? left_events : right_events)++;
        }
        if (left_events < config.min_node_events ||
            right_events < config.min_node_events)
          continue;
        if (left_count == 0 || left_count == rows.size()) continue;
        auto stat = logrank_stat(data, rows, in_left);
        if (stat && *stat > best.stat) {
          best.feature = static_cast<int>(f);
          best.threshold = thr;
          best.stat = *stat;
        }
      }
    }
    return best;
  }

  int build(const std::vector<std::size_t>& rows) {
    const int node = static_cast<int>(tree.feature.size());
    tree.feature.push_back(-1);
    tree.threshold.push_back(0.0);
    tree.left.push_back(-1);
    tree.right.push_back(-1);
    tree.leaf_id.push_back(-1);
    Split split;
    if (count_events(rows) >= 2 * config.min_node_events)
      split = find_split(rows);
    if (split.feature < 0) {
      tree.leaf_id[static_cast<std::size_t>(node)] =
          static_cast<int>(tree.leaf_chf.size());
      tree.leaf_chf.push_back(nelson_aalen(rows));
      return node;
    }
    std::vector<std::size_t> lrows, rrows;
    for (std::size_t i : rows) {
      if (data.covariates()(static_cast<Eigen::Index>(i),
                            split.feature) <= split.threshold)
        lrows.push_back(i);
      else
        rrows.push_back(i);
    }
    tree.feature[static_cast<std::size_t>(node)] = split.feature;
    tree.threshold[static_cast<std::size_t>(node)] = split.threshold;
    const int l = build(lrows);
    const int r = build(rrows);
    tree.left[static_cast<std::size_t>(node)] = l;
    tree.right[static_cast<std::size_t>(node)] = r;
    return node;
  }
};

double chf_at(const std::vector<double>& grid, const std::vector<double>& chf,
              double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return 0.0;
  return chf[static_cast<std::size_t>(it - grid.begin()) - 1];
}

}  // namespace

std::size_t SurvivalTree::leaf_for(const Eigen::RowVectorXd& x) const {
  int node = 0;
  while (feature[static_cast<std::size_t>(node)] >= 0) {
    const int f = feature[static_cast<std::size_t>(node)];
    node = x[f] <= threshold[static_cast<std::size_t>(node)]
               ? left[static_cast<std::size_t>(node)]
               : right[static_cast<std::size_t>(node)];
  }
  return static_cast<std::size_t>(leaf_id[static_cast<std::size_t>(node)]);
}

SurvivalForest::SurvivalForest(ForestConfig config,
                               std::vector<double> event_grid,
                               std::vector<SurvivalTree> trees,
                               std::vector<std::vector<std::uint8_t>> inbag)
    : config_(config),
      grid_(std::move(event_grid)),
      trees_(std::move(trees)),
      inbag_(std::move(inbag)) {}

double SurvivalForest::cumhaz(const Eigen::RowVectorXd& x, double t) const {
  double sum = 0.0;
  for (const auto& tree : trees_)
    sum += chf_at(grid_, tree.leaf_chf[tree.leaf_for(x)], t);
  return sum / static_cast<double>(trees_.size());
}

double SurvivalForest::survival(const Eigen::RowVectorXd& x, double t) const {
  if (t <= 0.0) return 1.0;
  return std::exp(-cumhaz(x, t));
}

std::size_t SurvivalForest::oob_tree_count(std::size_t subject) const {
  std::size_t count = 0;
  for (const auto& bag : inbag_) count += bag[subject] ? 0 : 1;
  return count;
}

double SurvivalForest::oob_cumhaz(std::size_t subject,
                                  const Eigen::RowVectorXd& x,
                                  double t) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t b = 0; b < trees_.size(); ++b) {
    if (inbag_[b][subject]) continue;
    sum += chf_at(grid_, trees_[b].leaf_chf[trees_[b].leaf_for(x)], t);
    ++count;
  }
  if (count == 0) throw Error("no oob trees");
  return sum / static_cast<double>(count);
}

double SurvivalForest::oob_survival(std::size_t subject,
                                    const Eigen::RowVectorXd& x,
                                    double t) const {
  if (t <= 0.0) return 1.0;
  return std::exp(-oob_cumhaz(subject, x, t));
}

std::vector<double> SurvivalForest::average_chf_curve(
    const Eigen::RowVectorXd& x) const {
  std::vector<double> acc(grid_.size(), 0.0);
  for (const auto& tree : trees_) {
    const auto& chf = tree.leaf_chf[tree.leaf_for(x)];
    for (std::size_t g = 0; g < acc.size(); ++g) acc[g] += chf[g];
  }
  for (double& v : acc) v /= static_cast<double>(trees_.size());
  return acc;
}

std::vector<double> SurvivalForest::oob_average_chf_curve(
    std::size_t subject, const Eigen::RowVectorXd& x) const {
  std::vector<double> acc(grid_.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t b = 0; b < trees_.size(); ++b) {
    if (inbag_[b][subject]) continue;
    const auto& chf = trees_[b].leaf_chf[trees_[b].leaf_for(x)];
    for (std::size_t g = 0; g < acc.size(); ++g) acc[g] += chf[g];
    ++count;
  }
  if (count == 0) throw Error("no oob trees");
  for (double& v : acc) v /= static_cast<double>(count);
  return acc;
}

SurvivalForest fit_forest(const SurvivalDataset& data,
                          const ForestConfig& config) {
  const std::size_t n = data.size();
  const std::size_t p = data.n_covariates();
  if (config.n_trees == 0) throw Error("n_trees must be positive");
  if (config.min_node_events == 0) throw Error("min_node_events must be positive");
  const std::size_t mtry =
      config.mtry == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))))
          : config.mtry;
  if (mtry > p) throw Error("mtry exceeds covariate count");
  if (data.n_events() == 0)
    throw Error("forest requires at least one observed event");

  // Forest grid: distinct event times of the training data.
  std::vector<double> grid = data.event_times();
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<SurvivalTree> trees(config.n_trees);
  std::vector<std::vector<std::uint8_t>> inbag(
      config.n_trees, std::vector<std::uint8_t>(n, 0));
  detail::parallel_for(config.n_trees, [&](std::size_t b) {
    TreeBuilder builder{data, config, grid, mtry,
                        make_tree_rng(config.seed, b), {}};
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
      rows[i] = pick(builder.rng);
      inbag[b][rows[i]] = 1;
    }
    builder.build(rows);
    trees[b] = std::move(builder.tree);
  });
  return SurvivalForest(config, std::move(grid), std::move(trees),
                        std::move(inbag));
}

}  // namespace survstack
