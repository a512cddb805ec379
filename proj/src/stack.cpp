#include "survstack/stack.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "survstack/metrics.hpp"

namespace survstack {

namespace {

double clip01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

Matrix Candidate::oof_matrix(const SurvivalDataset& data, const TimeGrid& grid,
                             const std::vector<int>& folds) const {
  const std::size_t n = data.size();
  if (folds.size() != n) throw Error("fold assignment length mismatch");
  const int k = *std::max_element(folds.begin(), folds.end());
  Matrix out(n, grid.size());
  for (int f = 1; f <= k; ++f) {
    std::vector<std::size_t> train, held;
    for (std::size_t i = 0; i < n; ++i)
      (folds[i] == f ? held : train).push_back(i);
    if (held.empty()) continue;
    std::unique_ptr<ConditionalSurvival> model;
    try {
      model = fit(data.subset(train));
    } catch (const std::exception& e) {
      throw Error("candidate '" + id() + "' failed on fold " +
                  std::to_string(f) + ": " + e.what());
    }
    for (std::size_t i : held) {
      const Eigen::RowVectorXd x = data.covariate_row(i);
      for (std::size_t r = 0; r < grid.size(); ++r)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) =
            clip01(model->survival(x, grid[r]));
    }
  }
  return out;
}

std::unique_ptr<ConditionalSurvival> AftCandidate::fit(
    const SurvivalDataset& data) const {
  auto out = std::make_unique<FittedAft>();
  out->fit = fit_aft(data, family_);
  return out;
}

std::unique_ptr<ConditionalSurvival> CoxCandidate::fit(
    const SurvivalDataset& data) const {
  auto out = std::make_unique<FittedCox>();
  out->fit = fit_cox(data);
  return out;
}

std::unique_ptr<ConditionalSurvival> ForestCandidate::fit(
    const SurvivalDataset& data) const {
  auto out = std::make_unique<FittedForest>();
  out->forest = fit_forest(data, config_);
  return out;
}

Matrix ForestCandidate::oof_matrix(const SurvivalDataset& data,
                                   const TimeGrid& grid,
                                   const std::vector<int>& /*folds*/) const {
  const SurvivalForest forest = fit_forest(data, config_);
  const std::size_t n = data.size();
  const auto& event_grid = forest.event_grid();
  Matrix out(n, grid.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::RowVectorXd x = data.covariate_row(i);
    const std::vector<double> chf = forest.oob_tree_count(i) > 0
                                        ? forest.oob_average_chf_curve(i, x)
                                        : forest.average_chf_curve(x);
    // Step-function evaluation of the averaged CHF at the grid times.
    std::size_t g = 0;
    double value = 0.0;
    for (std::size_t r = 0; r < grid.size(); ++r) {
      while (g < event_grid.size() && event_grid[g] <= grid[r])
        value = chf[g++];
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) =
          clip01(std::exp(-value));
    }
  }
  return out;
}

std::vector<int> make_folds(const SurvivalDataset& data, std::size_t k,
                            std::uint64_t seed) {
  if (k < 2) throw Error("need at least 2 folds");
  if (data.n_events() < k)
    throw Error("fewer events (" + std::to_string(data.n_events()) +
                ") than folds (" + std::to_string(k) + ")");
  std::vector<std::size_t> events, censored;
  for (std::size_t i = 0; i < data.size(); ++i)
    (data.event(i) ? events : censored).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(events.begin(), events.end(), rng);
  std::shuffle(censored.begin(), censored.end(), rng);
  std::vector<int> folds(data.size(), 0);
  // Round-robin events, then continue the rotation with censored subjects
  // so total fold sizes stay within one of each other.
  std::size_t next = 0;
  for (std::size_t i : events) folds[i] = static_cast<int>(next++ % k) + 1;
  for (std::size_t i : censored) folds[i] = static_cast<int>(next++ % k) + 1;
  return folds;
}

OofPredictionTensor oof_predictions(const SurvivalDataset& data,
                                    const CandidateList& specs,
                                    const TimeGrid& grid,
                                    const std::vector<int>& folds) {
  if (specs.empty()) throw Error("no candidates");
  OofPredictionTensor tensor;
  tensor.grid = grid;
  tensor.fold_assignment = folds;
  tensor.values.reserve(specs.size());
  for (const auto& spec : specs)
    tensor.values.push_back(spec->oof_matrix(data, grid, folds));
  return tensor;
}

namespace {

// Quadratic data for the simplex QP: J(alpha) = a'G a - 2 b'a + c.
struct QpData {
  Matrix gram;
  Vector linear;
  double constant = 0.0;
};

QpData build_qp(const OofPredictionTensor& tensor,
                const IpcwWeightTable& wtab) {
  const std::size_t m = tensor.values.size();
  const Eigen::Index n = wtab.weights.rows();
  const Eigen::Index s = wtab.weights.cols();
  QpData qp;
  qp.gram = Matrix::Zero(m, m);
  qp.linear = Vector::Zero(m);
  for (Eigen::Index r = 0; r < s; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = wtab.weights(i, r);
      if (w == 0.0) continue;
      const double z = wtab.indicator_z(i, r);
      for (std::size_t k = 0; k < m; ++k) {
        const double pk = tensor.values[k](i, r);
        qp.linear[static_cast<Eigen::Index>(k)] += w * z * pk;
        for (std::size_t l = k; l < m; ++l)
          qp.gram(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) +=
              w * pk * tensor.values[l](i, r);
      }
      qp.constant += w * z * z;
    }
  }
  qp.gram = qp.gram.selfadjointView<Eigen::Upper>();
  return qp;
}

}  // namespace

StackWeights solve_stack_weights(const OofPredictionTensor& tensor,
                                 const IpcwWeightTable& wtab) {
  const std::size_t m = tensor.values.size();
  if (m == 0) throw Error("no candidates");
  if (m > 16) throw Error("too many candidates for the exact solver");
  if (wtab.weights.rows() != tensor.values[0].rows() ||
      wtab.weights.cols() != tensor.values[0].cols())
    throw Error("weight table / tensor shape mismatch");
  if ((wtab.weights.array() == 0.0).all())
    throw Error("degenerate objective");

  // Merge exact duplicate prediction matrices; the duplicate group's whole
  // weight lands on its lowest index (Remark 5 instability guard).
  std::vector<std::size_t> rep(m);
  std::vector<std::size_t> unique_idx;
  for (std::size_t k = 0; k < m; ++k) {
    rep[k] = k;
    for (std::size_t j : unique_idx) {
      if (tensor.values[k] == tensor.values[j]) {
        rep[k] = j;
        break;
      }
    }
    if (rep[k] == k) unique_idx.push_back(k);
  }
  OofPredictionTensor uniq;
  uniq.grid = tensor.grid;
  uniq.fold_assignment = tensor.fold_assignment;
  for (std::size_t j : unique_idx) uniq.values.push_back(tensor.values[j]);
  const std::size_t mu = unique_idx.size();

  QpData qp = build_qp(uniq, wtab);
  qp.gram.diagonal().array() += 1e-10;  // ridge for collinear columns

  // The simplex optimum is the best feasible equality-constrained optimum
  // over subsets of free coordinates; mu is small, so enumerate.
  Vector best_alpha;
  double best_obj = std::numeric_limits<double>::infinity();
  const std::size_t subsets = (std::size_t{1} << mu);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    std::vector<std::size_t> free;
    for (std::size_t k = 0; k < mu; ++k)
      if (mask & (std::size_t{1} << k)) free.push_back(k);
    const Eigen::Index f = static_cast<Eigen::Index>(free.size());
    // KKT system for min a'Ga - 2b'a  s.t.  sum a = 1 on the free set.
    Matrix kkt = Matrix::Zero(f + 1, f + 1);
    Vector rhs = Vector::Zero(f + 1);
    for (Eigen::Index a = 0; a < f; ++a) {
      for (Eigen::Index b = 0; b < f; ++b)
        kkt(a, b) = 2.0 * qp.gram(static_cast<Eigen::Index>(free[a]),
                                  static_cast<Eigen::Index>(free[b]));
      kkt(a, f) = 1.0;
      kkt(f, a) = 1.0;
      rhs[a] = 2.0 * qp.linear[static_cast<Eigen::Index>(free[a])];
    }
    rhs[f] = 1.0;
    Vector sol = kkt.fullPivLu().solve(rhs);
    if (!sol.allFinite()) continue;
    bool feasible = true;
    for (Eigen::Index a = 0; a < f; ++a)
      if (sol[a] < -1e-12) {
        feasible = false;
        break;
      }
    if (!feasible) continue;
    Vector alpha = Vector::Zero(mu);
    for (Eigen::Index a = 0; a < f; ++a)
      alpha[static_cast<Eigen::Index>(free[a])] = std::max(0.0, sol[a]);
    alpha /= alpha.sum();
    const double obj = alpha.dot(qp.gram * alpha) - 2.0 * qp.linear.dot(alpha);
    if (obj < best_obj - 1e-15) {
      best_obj = obj;
      best_alpha = alpha;
    }
  }
  if (best_alpha.size() == 0) throw Error("simplex solve failed");

  // KKT residual: stationarity on the support, dual feasibility off it.
  Vector grad = 2.0 * (qp.gram * best_alpha - qp.linear);
  double lambda = 0.0;
  std::size_t support = 0;
  for (Eigen::Index k = 0; k < best_alpha.size(); ++k)
    if (best_alpha[k] > 1e-12) {
      lambda -= grad[k];
      ++support;
    }
  lambda /= static_cast<double>(support);
  double kkt_res = 0.0;
  for (Eigen::Index k = 0; k < best_alpha.size(); ++k) {
    if (best_alpha[k] > 1e-12)
      kkt_res = std::max(kkt_res, std::abs(grad[k] + lambda));
    else
      kkt_res = std::max(kkt_res, std::max(0.0, -(grad[k] + lambda)));
  }

  StackWeights out;
  out.alpha = Vector::Zero(m);
  for (std::size_t j = 0; j < mu; ++j)
    out.alpha[static_cast<Eigen::Index>(unique_idx[j])] =
        best_alpha[static_cast<Eigen::Index>(j)];
  out.objective_value = best_obj + qp.constant;
  out.kkt_residual = kkt_res;
  out.active.assign(m, false);
  for (std::size_t k = 0; k < m; ++k)
    out.active[k] = out.alpha[static_cast<Eigen::Index>(k)] <= 1e-12;
  return out;
}

StackedModel fit_stack(const SurvivalDataset& data, const CandidateList& specs,
                       const StackConfig& config) {
  if (specs.empty()) throw Error("no candidates");
  StackedModel model;
  model.candidates = specs;
  model.grid = event_time_grid(data, config.grid_size);
  if (specs.size() == 1) {
    model.weights.alpha = Vector::Ones(1);
    model.weights.active.assign(1, false);
  } else {
    const auto g_hat = km_censoring(data);
    const auto wtab = build_weight_table(data, g_hat, model.grid);
    const auto folds = make_folds(data, config.folds, config.seed);
    const auto tensor = oof_predictions(data, specs, model.grid, folds);
    model.weights = solve_stack_weights(tensor, wtab);
  }
  model.models.reserve(specs.size());
  for (const auto& spec : specs) model.models.push_back(spec->fit(data));
  return model;
}

double predict_stack(const StackedModel& model, const Eigen::RowVectorXd& x,
                     double t) {
  double s = 0.0;
  for (std::size_t k = 0; k < model.models.size(); ++k)
    s += model.weights.alpha[static_cast<Eigen::Index>(k)] *
         model.models[k]->survival(x, t);
  return s;
}

CvSelection select_by_cv_from(const OofPredictionTensor& dense_tensor,
                              const IpcwWeightTable& dense_wtab,
                              const CandidateList& specs) {
  CvSelection sel;
  sel.ibs.resize(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k)
    sel.ibs[k] = integrated_brier(dense_wtab, dense_tensor.values[k]);
  sel.selected_index = static_cast<std::size_t>(
      std::min_element(sel.ibs.begin(), sel.ibs.end()) - sel.ibs.begin());
  sel.selected_id = specs[sel.selected_index]->id();
  return sel;
}

CvSelection select_by_cv(const SurvivalDataset& data,
                         const CandidateList& specs,
                         const StackConfig& config) {
  if (specs.empty()) throw Error("no candidates");
  // Dense grid: all distinct observed times in (0, tau].
  std::vector<double> times = data.times();
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const TimeGrid dense(std::move(times));
  const auto g_hat = km_censoring(data);
  const auto wtab = build_weight_table(data, g_hat, dense);
  const auto folds = make_folds(data, config.folds, config.seed);
  const auto tensor = oof_predictions(data, specs, dense, folds);
  return select_by_cv_from(tensor, wtab, specs);
}

}  // namespace survstack
