#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "doctest.h"
#include "survstack/censoring.hpp"
#include "survstack/forest.hpp"

using namespace survstack;

namespace {

SurvivalDataset two_group_data() {
  // Binary covariate perfectly separating early deaths from late deaths.
  const std::size_t n = 40;
  Matrix x(n, 1);
  std::vector<double> y(n);
  std::vector<bool> d(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const bool late = i >= n / 2;
    x(static_cast<Eigen::Index>(i), 0) = late ? 1.0 : 0.0;
    y[i] = (late ? 10.0 : 1.0) + 0.01 * static_cast<double>(i);
  }
  return {y, d, x, {}};
}

SurvivalDataset sample_data(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::uniform_real_distribution<double> cen(0.0, 4.0);
  std::uniform_real_distribution<double> unif01;
  Matrix x(n, p);
  std::vector<double> y(n);
  std::vector<bool> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = norm(rng);
    const double t = -std::log(1.0 - unif01(rng)) * std::exp(0.5 * x(i, 0));
    const double c = cen(rng);
    y[i] = std::min(t, c);
    d[i] = t < c;
  }
  return {y, d, x, {}};
}

SurvivalTree stump(std::vector<double> chf) {
  SurvivalTree t;
  t.feature = {-1};
  t.threshold = {0.0};
  t.left = {-1};
  t.right = {-1};
  t.leaf_id = {0};
  t.leaf_chf = {std::move(chf)};
  return t;
}

}  // namespace

TEST_CASE("fit_forest: perfectly separating covariate is split at the root") {
  auto data = two_group_data();
  ForestConfig config;
  config.n_trees = 1;
  config.seed = 3;
  auto forest = fit_forest(data, config);
  REQUIRE(forest.trees().size() == 1);
  const auto& tree = forest.trees()[0];
  CHECK(tree.feature[0] == 0);
  CHECK(tree.threshold[0] > 0.0);
  CHECK(tree.threshold[0] < 1.0);
  Eigen::RowVectorXd early(1), late(1);
  early << 0.0;
  late << 1.0;
  // Early group is all dead by t=2; late group has not started dying.  The
  // bootstrap duplicates rows, so the early-leaf cumulative hazard is a tied
  // Nelson-Aalen sum and its survival sits above the exact-zero ideal.
  CHECK(forest.survival(early, 2.0) < 0.15);
  CHECK(forest.survival(late, 2.0) > 0.95);
}

TEST_CASE("fit_forest: invalid configs are errors") {
  auto data = two_group_data();
  ForestConfig config;
  config.n_trees = 0;
  CHECK_THROWS_AS(fit_forest(data, config), Error);
  config.n_trees = 5;
  config.mtry = 2;  // p = 1
  CHECK_THROWS_AS(fit_forest(data, config), Error);
}

TEST_CASE("fit_forest: deterministic across runs and worker counts") {
  auto data = sample_data(120, 4, 17);
  ForestConfig config;
  config.n_trees = 30;
  config.seed = 99;
  setenv("SURVSTACK_THREADS", "1", 1);
  auto f1 = fit_forest(data, config);
  setenv("SURVSTACK_THREADS", "4", 1);
  auto f2 = fit_forest(data, config);
  unsetenv("SURVSTACK_THREADS");
  auto f3 = fit_forest(data, config);
  REQUIRE(f1.trees().size() == f2.trees().size());
  for (std::size_t b = 0; b < f1.trees().size(); ++b) {
    CHECK(f1.trees()[b].feature == f2.trees()[b].feature);
    CHECK(f1.trees()[b].threshold == f2.trees()[b].threshold);
    CHECK(f1.trees()[b].leaf_chf == f2.trees()[b].leaf_chf);
    CHECK(f1.trees()[b].feature == f3.trees()[b].feature);
    CHECK(f1.inbag()[b] == f2.inbag()[b]);
  }
}

TEST_CASE("SurvivalForest: prediction at t=0 is 1") {
  auto data = sample_data(80, 3, 4);
  ForestConfig config;
  config.n_trees = 10;
  auto forest = fit_forest(data, config);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(3);
  CHECK(forest.survival(x, 0.0) == 1.0);
}

TEST_CASE("SurvivalForest: identical stumps average to the single tree") {
  std::vector<double> grid{1.0, 2.0, 3.0};
  std::vector<double> chf{0.1, 0.35, 0.8};
  std::vector<SurvivalTree> trees{stump(chf), stump(chf), stump(chf)};
  ForestConfig config;
  config.n_trees = 3;
  SurvivalForest forest(config, grid, trees,
                        std::vector<std::vector<std::uint8_t>>(
                            3, std::vector<std::uint8_t>(1, 1)));
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1);
  CHECK(forest.cumhaz(x, 2.5) == doctest::Approx(0.35));
  CHECK(forest.survival(x, 2.5) == doctest::Approx(std::exp(-0.35)));
}

TEST_CASE("SurvivalForest: hand-averaged three-tree cumulative hazard") {
  std::vector<double> grid{1.0, 2.0};
  std::vector<SurvivalTree> trees{stump({0.1, 0.4}), stump({0.2, 0.5}),
                                  stump({0.6, 0.9})};
  ForestConfig config;
  config.n_trees = 3;
  // Subject 0 is in-bag only in tree 2.
  std::vector<std::vector<std::uint8_t>> inbag{{0}, {0}, {1}};
  SurvivalForest forest(config, grid, trees, inbag);
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1);
  CHECK(forest.cumhaz(x, 1.5) == doctest::Approx((0.1 + 0.2 + 0.6) / 3.0));
  CHECK(forest.cumhaz(x, 2.0) == doctest::Approx((0.4 + 0.5 + 0.9) / 3.0));
  CHECK(forest.cumhaz(x, 0.5) == 0.0);
  // OOB: trees 0 and 1 only.
  CHECK(forest.oob_cumhaz(0, x, 1.5) == doctest::Approx(0.15));
  CHECK(forest.oob_tree_count(0) == 2);
  auto curve = forest.average_chf_curve(x);
  CHECK(curve[0] == doctest::Approx(0.3));
  CHECK(curve[1] == doctest::Approx(0.6));
  auto oob_curve = forest.oob_average_chf_curve(0, x);
  CHECK(oob_curve[1] == doctest::Approx(0.45));
}

TEST_CASE("SurvivalForest: in-bag everywhere raises no-oob error") {
  std::vector<SurvivalTree> trees{stump({0.1})};
  ForestConfig config;
  config.n_trees = 1;
  SurvivalForest forest(config, {1.0}, trees, {{1}});
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1);
  CHECK_THROWS_WITH_AS(forest.oob_cumhaz(0, x, 1.0), "no oob trees", Error);
}

TEST_CASE("fit_forest: predictions are monotone and start at 1") {
  auto data = sample_data(100, 3, 8);
  ForestConfig config;
  config.n_trees = 25;
  config.seed = 5;
  auto forest = fit_forest(data, config);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> norm;
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::RowVectorXd x(3);
    for (int j = 0; j < 3; ++j) x(j) = norm(rng);
    double prev = 1.0;
    for (double t = 0.0; t < 5.0; t += 0.25) {
      const double s = forest.survival(x, t);
      CHECK(s <= prev + 1e-15);
      CHECK(s >= 0.0);
      prev = s;
    }
  }
}

TEST_CASE("fit_forest: huge min_node_events degenerates to marginal NA") {
  auto data = sample_data(100, 3, 12);
  ForestConfig config;
  config.n_trees = 20;
  config.min_node_events = data.n_events();
  config.seed = 2;
  auto forest = fit_forest(data, config);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> norm;
  Eigen::RowVectorXd x0 = Eigen::RowVectorXd::Zero(3);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::RowVectorXd x(3);
    for (int j = 0; j < 3; ++j) x(j) = 2.0 * norm(rng);
    for (double t : {0.5, 1.0, 2.0})
      CHECK(std::abs(forest.survival(x, t) - forest.survival(x0, t)) <=
            1e-12);
  }
}

TEST_CASE("fit_forest: out-of-bag fraction near exp(-1)") {
  auto data = sample_data(200, 3, 21);
  ForestConfig config;
  config.n_trees = 250;
  config.seed = 7;
  auto forest = fit_forest(data, config);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    total += static_cast<double>(forest.oob_tree_count(i));
  const double frac = total / (200.0 * 250.0);
  CHECK(frac > 0.33);
  CHECK(frac < 0.41);
}

TEST_CASE("fit_forest: bootstrap samples have size n") {
  auto data = sample_data(60, 2, 30);
  ForestConfig config;
  config.n_trees = 8;
  config.seed = 4;
  auto forest = fit_forest(data, config);
  // inbag stores per-subject flags; count of flags set can be < n because of
  // duplicates, but every tree must have drawn exactly n rows.  The flag
  // vector length must equal n and every leaf CHF must be tabulated on the
  // shared event grid.
  for (const auto& bag : forest.inbag()) CHECK(bag.size() == 60);
  for (const auto& tree : forest.trees())
    for (const auto& chf : tree.leaf_chf)
      CHECK(chf.size() == forest.event_grid().size());
}
