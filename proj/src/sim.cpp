#include "survstack/sim.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <mutex>

#include "parallel.hpp"
#include "survstack/censoring.hpp"
#include "survstack/metrics.hpp"

namespace survstack {

namespace {

constexpr std::size_t kOracleDraws = 1'000'000;
constexpr std::uint64_t kOracleSeed = 0x5eed0ac1eULL;

double norm_cdf(double w) { return 0.5 * std::erfc(-w / std::sqrt(2.0)); }

}  // namespace

Vector ScenarioConfig::effective_beta() const {
  if (beta.size() > 0) {
    if (static_cast<std::size_t>(beta.size()) != p)
      throw Error("beta length does not match p");
    return beta;
  }
  if (p != 8)
    throw Error("default beta is defined for p = 8; supply beta explicitly");
  Vector b(8);
  b << 1.0, 0.0, -1.0, 0.0, 0.5, 0.0, -0.5, 0.0;
  return b;
}

Matrix gen_covariates(std::size_t n, std::size_t p, double rho, Rng& rng) {
  if (!(rho > -1.0 && rho < 1.0)) throw Error("rho outside (-1, 1)");
  Matrix sigma(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::pow(rho, std::abs(static_cast<double>(i) -
                                 static_cast<double>(j)));
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw Error("covariance not SPD");
  const Matrix chol_t = llt.matrixL().transpose();
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  Matrix z(n, p);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = stdnorm(rng);
  return z * chol_t;
}

Vector linear_predictor(const Matrix& x, const ScenarioConfig& config) {
  const Vector b = config.effective_beta();
  if (config.form == EffectForm::linear) return x * b;
  Matrix gamma = x;
  gamma = (4.0 * gamma.array()).unaryExpr([](double v) { return norm_cdf(v); });
  return gamma * b;
}

Vector gen_event_times(const Matrix& x, const ScenarioConfig& config,
                       Rng& rng) {
  const Vector eta = linear_predictor(x, config);
  Vector t(eta.size());
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  std::uniform_real_distribution<double> unif(
      std::numeric_limits<double>::min(), 1.0);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    switch (config.family) {
      case EventFamily::lognormal:
        // Normal(eta, variance 1/4) on the log scale.
        t[i] = std::exp(eta[i] + 0.5 * stdnorm(rng));
        break;
      case EventFamily::weibull:
        t[i] = std::exp(eta[i]) *
               std::pow(-std::log(unif(rng)), 1.0 / 1.1);
        break;
      case EventFamily::gamma: {
        std::gamma_distribution<double> g(5.0, 0.25 * std::exp(eta[i]));
        t[i] = g(rng);
        break;
      }
    }
    if (t[i] <= 0.0) t[i] = std::numeric_limits<double>::min();
  }
  return t;
}

double true_survival(EventFamily family, double eta, double t) {
  if (t <= 0.0) return 1.0;
  switch (family) {
    case EventFamily::lognormal:
      return 1.0 - norm_cdf((std::log(t) - eta) / 0.5);
    case EventFamily::weibull:
      return std::exp(-std::pow(t * std::exp(-eta), 1.1));
    case EventFamily::gamma:
      return boost::math::gamma_q(5.0, t / (0.25 * std::exp(eta)));
  }
  throw Error("unknown family");
}

namespace {

struct OracleKey {
  int family;
  int form;
  bool operator<(const OracleKey& o) const {
    return std::tie(family, form) < std::tie(o.family, o.form);
  }
};

// Marginal event-time sample used by both the censoring calibration and the
// true-quantile grid. One fixed-seed draw per (family, form).
const std::vector<double>& marginal_event_sample(const ScenarioConfig& config) {
  static std::map<OracleKey, std::vector<double>> cache;
  static std::mutex mu;
  const OracleKey key{static_cast<int>(config.family),
                      static_cast<int>(config.form)};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Rng rng(kOracleSeed);
  std::vector<double> sample;
  sample.reserve(kOracleDraws);
  const std::size_t chunk = 10'000;
  ScenarioConfig oracle = config;
  for (std::size_t done = 0; done < kOracleDraws; done += chunk) {
    const Matrix x = gen_covariates(chunk, config.p, config.rho, rng);
    const Vector t = gen_event_times(x, oracle, rng);
    sample.insert(sample.end(), t.data(), t.data() + t.size());
  }
  return cache.emplace(key, std::move(sample)).first->second;
}

}  // namespace

double calibrate_censoring(const ScenarioConfig& config) {
  if (!(config.target_censoring > 0.0 && config.target_censoring < 1.0))
    throw Error("target censoring outside (0, 1)");
  static std::map<std::tuple<int, int, double>, double> cache;
  static std::mutex mu;
  const auto key = std::make_tuple(static_cast<int>(config.family),
                                   static_cast<int>(config.form),
                                   config.target_censoring);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const std::vector<double>& t_sample = marginal_event_sample(config);
  // P(C < T) = E[min(T, c)] / c for C ~ Unif(0, c); decreasing in c.
  auto censor_frac = [&](double c) {
    double acc = 0.0;
    for (double t : t_sample) acc += std::min(t, c);
    return acc / (c * static_cast<double>(t_sample.size()));
  };
  double lo = 1e-8, hi = 1.0;
  while (censor_frac(hi) > config.target_censoring) {
    hi *= 2.0;
    if (hi > 1e12) throw Error("censoring calibration did not bracket");
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (censor_frac(mid) > config.target_censoring)
      lo = mid;
    else
      hi = mid;
  }
  const double c = 0.5 * (lo + hi);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, c);
  return c;
}

std::vector<double> true_event_quantile_grid(const ScenarioConfig& config,
                                             std::size_t count) {
  static std::map<std::tuple<int, int, double, std::size_t>,
                  std::vector<double>>
      cache;
  static std::mutex mu;
  const auto key = std::make_tuple(static_cast<int>(config.family),
                                   static_cast<int>(config.form),
                                   config.target_censoring, count);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double c = calibrate_censoring(config);
  const std::vector<double>& t_sample = marginal_event_sample(config);
  Rng rng(kOracleSeed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unif(0.0, c);
  std::vector<double> accepted;
  accepted.reserve(t_sample.size());
  for (double t : t_sample)
    if (t < unif(rng)) accepted.push_back(t);
  std::vector<double> probs;
  for (std::size_t j = 1; j <= count; ++j)
    probs.push_back(static_cast<double>(j) / static_cast<double>(count + 1));
  auto grid = empirical_quantiles(std::move(accepted), probs);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, grid);
  return grid;
}

CandidateList default_candidates(std::uint64_t forest_seed) {
  ForestConfig fc;
  fc.seed = forest_seed;
  return {std::make_shared<AftCandidate>("lognormal", AftFamily::lognormal),
          std::make_shared<AftCandidate>("weibull", AftFamily::weibull),
          std::make_shared<CoxCandidate>("cox"),
          std::make_shared<ForestCandidate>("rsf", fc)};
}

std::string family_name(EventFamily family) {
  switch (family) {
    case EventFamily::lognormal: return "lognormal";
    case EventFamily::weibull: return "weibull";
    case EventFamily::gamma: return "gamma";
  }
  return "?";
}

std::string form_name(EffectForm form) {
  return form == EffectForm::linear ? "linear" : "nonlinear";
}

namespace {

struct ReplicateOutcome {
  bool ok = false;
  std::vector<double> isse;  // singles..., stack, cv
  Vector alpha;
};

ReplicateOutcome run_replicate(const ScenarioConfig& config,
                               const CandidateList& specs, std::size_t rep,
                               double censor_c,
                               const std::vector<double>& eval_grid) {
  ReplicateOutcome out;
  std::seed_seq seq{config.seed, static_cast<std::uint64_t>(rep) + 1};
  Rng rng(seq);
  const Matrix x = gen_covariates(config.n, config.p, config.rho, rng);
  const Vector t_true = gen_event_times(x, config, rng);
  std::uniform_real_distribution<double> unif(
      std::numeric_limits<double>::min(), censor_c);
  std::vector<double> y(config.n);
  std::vector<bool> delta(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const double c = unif(rng);
    y[i] = std::min(t_true[static_cast<Eigen::Index>(i)], c);
    delta[i] = t_true[static_cast<Eigen::Index>(i)] < c;
  }
  const SurvivalDataset data(std::move(y), std::move(delta), x, {});

  // Dense grid carries the CV comparator; the nine-quantile stack grid is a
  // subset of it, so the OOF tensor is computed once.
  std::vector<double> dense_times = data.times();
  std::sort(dense_times.begin(), dense_times.end());
  dense_times.erase(std::unique(dense_times.begin(), dense_times.end()),
                    dense_times.end());
  const TimeGrid dense(std::move(dense_times));
  const auto g_hat = km_censoring(data);
  const auto dense_wtab = build_weight_table(data, g_hat, dense);
  const auto folds = make_folds(data, 5, config.seed * 0x9e37 + rep);
  const auto dense_tensor = oof_predictions(data, specs, dense, folds);

  const TimeGrid grid9 = event_time_grid(data, 9);
  std::vector<Eigen::Index> cols;
  for (double t : grid9.times()) {
    const auto& dt = dense.times();
    const auto it = std::lower_bound(dt.begin(), dt.end(), t);
    if (it == dt.end() || *it != t) throw Error("grid slice mismatch");
    cols.push_back(static_cast<Eigen::Index>(it - dt.begin()));
  }
  OofPredictionTensor tensor9;
  tensor9.grid = grid9;
  tensor9.fold_assignment = folds;
  for (const auto& mat : dense_tensor.values) {
    Matrix sliced(mat.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
      sliced.col(static_cast<Eigen::Index>(j)) = mat.col(cols[j]);
    tensor9.values.push_back(std::move(sliced));
  }
  const auto wtab9 = build_weight_table(data, g_hat, grid9);
  const auto weights = solve_stack_weights(tensor9, wtab9);
  const auto cv = select_by_cv_from(dense_tensor, dense_wtab, specs);

  // Evaluation on the training covariate sample against the closed-form
  // truth over the 19-quantile grid.
  const Vector eta = linear_predictor(x, config);
  const std::size_t m = specs.size();
  const Eigen::Index s = static_cast<Eigen::Index>(eval_grid.size());
  Matrix truth(x.rows(), s);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < s; ++j)
      truth(i, j) = true_survival(config.family, eta[i],
                                  eval_grid[static_cast<std::size_t>(j)]);
  std::vector<Matrix> preds(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto model = specs[k]->fit(data);
    Matrix pk(x.rows(), s);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Eigen::RowVectorXd xi = x.row(i);
      for (Eigen::Index j = 0; j < s; ++j)
        pk(i, j) =
            model->survival(xi, eval_grid[static_cast<std::size_t>(j)]);
    }
    preds[k] = std::move(pk);
  }
  auto isse_of = [&](const Matrix& pred) {
    return (pred - truth).squaredNorm() / static_cast<double>(x.rows());
  };
  out.isse.reserve(m + 2);
  for (std::size_t k = 0; k < m; ++k) out.isse.push_back(isse_of(preds[k]));
  Matrix stacked = Matrix::Zero(x.rows(), s);
  for (std::size_t k = 0; k < m; ++k)
    stacked += weights.alpha[static_cast<Eigen::Index>(k)] * preds[k];
  out.isse.push_back(isse_of(stacked));
  out.isse.push_back(out.isse[cv.selected_index]);
  out.alpha = weights.alpha;
  out.ok = true;
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config,
                            const CandidateList& specs) {
  if (config.replicates == 0) throw Error("replicates must be positive");
  const double c = calibrate_censoring(config);
  const std::vector<double> eval_grid = true_event_quantile_grid(config);
  std::vector<ReplicateOutcome> outcomes(config.replicates);
  detail::parallel_for(config.replicates, [&](std::size_t rep) {
    try {
      outcomes[rep] = run_replicate(config, specs, rep, c, eval_grid);
    } catch (const std::exception&) {
      outcomes[rep].ok = false;
    }
  });

  ScenarioResult res;
  res.censoring_constant = c;
  for (const auto& spec : specs) {
    res.estimators.push_back(spec->id());
    res.candidates.push_back(spec->id());
  }
  res.estimators.push_back("stack");
  res.estimators.push_back("cv");
  const std::size_t cols = specs.size() + 2;
  std::vector<double> sum(cols, 0.0), sumsq(cols, 0.0);
  Vector alpha_sum = Vector::Zero(static_cast<Eigen::Index>(specs.size()));
  std::size_t n_ok = 0;
  for (const auto& o : outcomes)
    if (o.ok) ++n_ok;
  res.replicate_isse.resize(static_cast<Eigen::Index>(n_ok),
                            static_cast<Eigen::Index>(cols));
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++res.replicates_failed;
      continue;
    }
    for (std::size_t j = 0; j < cols; ++j) {
      sum[j] += o.isse[j];
      sumsq[j] += o.isse[j] * o.isse[j];
      res.replicate_isse(static_cast<Eigen::Index>(res.replicates_done),
                         static_cast<Eigen::Index>(j)) = o.isse[j];
    }
    alpha_sum += o.alpha;
    ++res.replicates_done;
  }
  if (res.replicates_done == 0) throw Error("all replicates failed");
  const double r = static_cast<double>(res.replicates_done);
  for (std::size_t j = 0; j < cols; ++j) {
    const double mean = sum[j] / r;
    res.mean_isse.push_back(mean);
    const double var = std::max(0.0, (sumsq[j] - r * mean * mean) /
                                         std::max(1.0, r - 1.0));
    res.se_isse.push_back(std::sqrt(var / r));
  }
  for (Eigen::Index k = 0; k < alpha_sum.size(); ++k)
    res.mean_alpha.push_back(alpha_sum[k] / r);
  return res;
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  return run_scenario(config, default_candidates(config.seed));
}

}  // namespace survstack
