#include "survstack/model_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace survstack {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json vec_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vec_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(),
                                  static_cast<Eigen::Index>(data.size()));
}

json aft_to_json(const AftFit& fit) {
  return {{"coefficients", vec_to_json(fit.coefficients)},
          {"log_scale", fit.log_scale}};
}

AftFit aft_from_json(const json& j, AftFamily family) {
  AftFit fit;
  fit.family = family;
  fit.coefficients = vec_from_json(j.at("coefficients"));
  fit.log_scale = j.at("log_scale").get<double>();
  return fit;
}

json cox_to_json(const CoxFit& fit) {
  return {{"coefficients", vec_to_json(fit.coefficients)},
          {"baseline_times", fit.baseline_times},
          {"baseline_cumhaz", fit.baseline_cumhaz}};
}

CoxFit cox_from_json(const json& j) {
  CoxFit fit;
  fit.coefficients = vec_from_json(j.at("coefficients"));
  fit.baseline_times = j.at("baseline_times").get<std::vector<double>>();
  fit.baseline_cumhaz = j.at("baseline_cumhaz").get<std::vector<double>>();
  return fit;
}

json forest_to_json(const SurvivalForest& forest) {
  json trees = json::array();
  for (const auto& tree : forest.trees()) {
    trees.push_back({{"feature", tree.feature},
                     {"threshold", tree.threshold},
                     {"left", tree.left},
                     {"right", tree.right},
                     {"leaf_id", tree.leaf_id},
                     {"leaf_chf", tree.leaf_chf}});
  }
  const auto& fc = forest.config();
  return {{"n_trees", fc.n_trees},
          {"mtry", fc.mtry},
          {"min_node_events", fc.min_node_events},
          {"n_split_candidates", fc.n_split_candidates},
          {"seed", fc.seed},
          {"event_grid", forest.event_grid()},
          {"trees", trees}};
}

SurvivalForest forest_from_json(const json& j) {
  ForestConfig fc;
  fc.n_trees = j.at("n_trees").get<std::size_t>();
  fc.mtry = j.at("mtry").get<std::size_t>();
  fc.min_node_events = j.at("min_node_events").get<std::size_t>();
  fc.n_split_candidates = j.at("n_split_candidates").get<std::size_t>();
  fc.seed = j.at("seed").get<std::uint64_t>();
  std::vector<SurvivalTree> trees;
  for (const auto& tj : j.at("trees")) {
    SurvivalTree tree;
    tree.feature = tj.at("feature").get<std::vector<int>>();
    tree.threshold = tj.at("threshold").get<std::vector<double>>();
    tree.left = tj.at("left").get<std::vector<int>>();
    tree.right = tj.at("right").get<std::vector<int>>();
    tree.leaf_id = tj.at("leaf_id").get<std::vector<int>>();
    tree.leaf_chf = tj.at("leaf_chf").get<std::vector<std::vector<double>>>();
    trees.push_back(std::move(tree));
  }
  // In-bag membership is training-time state; a loaded forest only predicts.
  return SurvivalForest(fc, j.at("event_grid").get<std::vector<double>>(),
                        std::move(trees), {});
}

}  // namespace

std::shared_ptr<const Candidate> make_candidate(const std::string& id,
                                                const std::string& kind,
                                                const ForestConfig& fc) {
  if (kind == "lognormal")
    return std::make_shared<AftCandidate>(id, AftFamily::lognormal);
  if (kind == "weibull")
    return std::make_shared<AftCandidate>(id, AftFamily::weibull);
  if (kind == "cox") return std::make_shared<CoxCandidate>(id);
  if (kind == "rsf") return std::make_shared<ForestCandidate>(id, fc);
  throw Error("unknown candidate kind '" + kind + "'");
}

nlohmann::json stack_to_json(const StackedModel& model,
                             const std::vector<std::string>& covariate_names) {
  json candidates = json::array();
  for (std::size_t k = 0; k < model.candidates.size(); ++k) {
    json cj;
    cj["id"] = model.candidates[k]->id();
    const auto* cand = model.candidates[k].get();
    if (const auto* aft = dynamic_cast<const AftCandidate*>(cand)) {
      cj["kind"] =
          aft->family() == AftFamily::lognormal ? "lognormal" : "weibull";
      cj["model"] =
          aft_to_json(dynamic_cast<const FittedAft&>(*model.models[k]).fit);
    } else if (dynamic_cast<const CoxCandidate*>(cand)) {
      cj["kind"] = "cox";
      cj["model"] =
          cox_to_json(dynamic_cast<const FittedCox&>(*model.models[k]).fit);
    } else if (dynamic_cast<const ForestCandidate*>(cand)) {
      cj["kind"] = "rsf";
      cj["model"] = forest_to_json(
          dynamic_cast<const FittedForest&>(*model.models[k]).forest);
    } else {
      throw Error("candidate '" + cand->id() + "' is not serializable");
    }
    candidates.push_back(std::move(cj));
  }
  return {{"format", "survstack-model"},
          {"version", kFormatVersion},
          {"covariates", covariate_names},
          {"grid", model.grid.times()},
          {"alpha", vec_to_json(model.weights.alpha)},
          {"objective", model.weights.objective_value},
          {"kkt_residual", model.weights.kkt_residual},
          {"candidates", std::move(candidates)}};
}

PersistedStack stack_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "survstack-model")
    throw Error("not a survstack model file");
  if (j.at("version").get<int>() > kFormatVersion)
    throw Error("model file version is newer than this build supports");
  PersistedStack out;
  out.covariate_names = j.at("covariates").get<std::vector<std::string>>();
  out.model.grid = TimeGrid(j.at("grid").get<std::vector<double>>());
  out.model.weights.alpha = vec_from_json(j.at("alpha"));
  out.model.weights.objective_value = j.at("objective").get<double>();
  out.model.weights.kkt_residual = j.at("kkt_residual").get<double>();
  for (const auto& cj : j.at("candidates")) {
    const std::string kind = cj.at("kind").get<std::string>();
    const std::string id = cj.at("id").get<std::string>();
    if (kind == "lognormal" || kind == "weibull") {
      const auto family =
          kind == "lognormal" ? AftFamily::lognormal : AftFamily::weibull;
      out.model.candidates.push_back(make_candidate(id, kind, {}));
      auto fitted = std::make_unique<FittedAft>();
      fitted->fit = aft_from_json(cj.at("model"), family);
      out.model.models.push_back(std::move(fitted));
    } else if (kind == "cox") {
      out.model.candidates.push_back(make_candidate(id, kind, {}));
      auto fitted = std::make_unique<FittedCox>();
      fitted->fit = cox_from_json(cj.at("model"));
      out.model.models.push_back(std::move(fitted));
    } else if (kind == "rsf") {
      auto fitted = std::make_unique<FittedForest>();
      fitted->forest = forest_from_json(cj.at("model"));
      out.model.candidates.push_back(
          make_candidate(id, kind, fitted->forest.config()));
      out.model.models.push_back(std::move(fitted));
    } else {
      throw Error("unknown candidate kind '" + kind + "' in model file");
    }
  }
  out.model.weights.active.assign(out.model.candidates.size(), false);
  for (Eigen::Index k = 0; k < out.model.weights.alpha.size(); ++k)
    out.model.weights.active[static_cast<std::size_t>(k)] =
        out.model.weights.alpha[k] <= 1e-12;
  return out;
}

void save_stack(const std::string& path, const StackedModel& model,
                const std::vector<std::string>& covariate_names) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path);
  out << stack_to_json(model, covariate_names).dump(2) << "\n";
}

PersistedStack load_stack(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path);
  json j;
  in >> j;
  return stack_from_json(j);
}

}  // namespace survstack
