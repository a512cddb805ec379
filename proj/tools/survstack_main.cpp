#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "survstack/csv.hpp"
#include "survstack/metrics.hpp"
#include "survstack/model_io.hpp"
#include "survstack/sim.hpp"
#include "survstack/stack.hpp"

namespace {

using nlohmann::json;
using namespace survstack;

constexpr double kFiveYears = 5.0 * 365.25;

struct FitOptions {
  std::string data_path;
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  std::size_t grid_size = 9;
  std::size_t trees = 250;
  std::size_t min_node_events = 3;
};

CandidateList candidates_from_config(const FitOptions& opt) {
  ForestConfig fc;
  fc.n_trees = opt.trees;
  fc.min_node_events = opt.min_node_events;
  fc.seed = opt.seed;
  if (opt.config_path.empty()) {
    return {std::make_shared<AftCandidate>("weibull", AftFamily::weibull),
            std::make_shared<AftCandidate>("lognormal", AftFamily::lognormal),
            std::make_shared<CoxCandidate>("cox"),
            std::make_shared<ForestCandidate>("rsf", fc)};
  }
  std::ifstream in(opt.config_path);
  if (!in) throw DataError("cannot open config file: " + opt.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config parse error: " + std::string(e.what()));
  }
  CandidateList specs;
  for (const auto& cj : j.at("candidates")) {
    const std::string kind = cj.at("kind").get<std::string>();
    const std::string id = cj.value("id", kind);
    ForestConfig cand_fc = fc;
    cand_fc.n_trees = cj.value("n_trees", fc.n_trees);
    cand_fc.min_node_events = cj.value("min_node_events", fc.min_node_events);
    cand_fc.mtry = cj.value("mtry", std::size_t{0});
    cand_fc.n_split_candidates =
        cj.value("n_split_candidates", fc.n_split_candidates);
    specs.push_back(make_candidate(id, kind, cand_fc));
  }
  if (specs.empty()) throw DataError("config lists no candidates");
  return specs;
}

int cmd_fit(const FitOptions& opt) {
  const SurvivalDataset data = read_survival_csv_file(opt.data_path);
  const CandidateList specs = candidates_from_config(opt);
  StackConfig config;
  config.seed = opt.seed;
  config.folds = opt.folds;
  config.grid_size = opt.grid_size;
  const StackedModel model = fit_stack(data, specs, config);
  std::ostringstream report;
  report << "stack weights (n=" << data.size()
         << ", events=" << data.n_events() << "):\n";
  for (std::size_t k = 0; k < specs.size(); ++k)
    report << "  " << std::left << std::setw(12) << specs[k]->id()
           << std::setprecision(17)
           << model.weights.alpha[static_cast<Eigen::Index>(k)] << "\n";
  report << "objective " << std::setprecision(17)
         << model.weights.objective_value << ", kkt residual "
         << model.weights.kkt_residual << "\n";
  std::cout << report.str();
  if (!opt.out_path.empty())
    save_stack(opt.out_path, model, data.covariate_names());
  return 0;
}

std::vector<double> parse_times(const std::string& spec) {
  if (spec == "5y") return {kFiveYears};
  std::vector<double> times;
  std::stringstream ss(spec);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      times.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw DataError("cannot parse time '" + cell + "'");
    }
  }
  if (times.empty()) throw DataError("empty time list");
  return times;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& times_spec, const std::string& out_path,
                bool per_candidate) {
  const PersistedStack persisted = load_stack(model_path);
  const Matrix x = read_covariate_csv_file(data_path,
                                           persisted.covariate_names);
  const std::vector<double> times = parse_times(times_spec);
  std::ofstream out;
  std::ostream* os = &std::cout;
  if (!out_path.empty()) {
    out.open(out_path);
    if (!out) throw Error("cannot write: " + out_path);
    os = &out;
  }
  *os << "row";
  for (double t : times) *os << ",s_" << t;
  if (per_candidate)
    for (const auto& c : persisted.model.candidates)
      for (double t : times) *os << "," << c->id() << "_" << t;
  *os << "\n";
  *os << std::setprecision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd xi = x.row(i);
    *os << (i + 1);
    for (double t : times) *os << "," << predict_stack(persisted.model, xi, t);
    if (per_candidate)
      for (const auto& m : persisted.model.models)
        for (double t : times) *os << "," << m->survival(xi, t);
    *os << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::string& data_path, const std::string& pred_path) {
  const SurvivalDataset data = read_survival_csv_file(data_path);
  std::ifstream in(pred_path);
  if (!in) throw DataError("cannot open predictions file: " + pred_path);
  // Prediction file: header of evaluation times, one row per subject.
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty predictions file");
  std::vector<double> times;
  {
    std::stringstream ss(header);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        times.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("prediction header must be numeric times, got '" +
                        cell + "'");
      }
    }
  }
  Matrix pred(data.size(), times.size());
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= data.size()) throw DataError("more prediction rows than subjects");
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= times.size()) throw DataError("too many prediction columns");
      pred(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col++)) =
          std::stod(cell);
    }
    if (col != times.size()) throw DataError("too few prediction columns");
    ++row;
  }
  if (row != data.size())
    throw DataError("prediction rows (" + std::to_string(row) +
                    ") do not match dataset size (" +
                    std::to_string(data.size()) + ")");
  const auto g_hat = km_censoring(data);
  const TimeGrid grid{times};
  const auto wtab = build_weight_table(data, g_hat, grid);
  std::cout << std::setprecision(10);
  for (std::size_t r = 0; r < times.size(); ++r)
    std::cout << "brier t=" << times[r] << ": " << brier_ipcw(wtab, pred, r)
              << "\n";
  std::cout << "ibs: " << integrated_brier(wtab, pred) << "\n";
  return 0;
}

struct SimulateOptions {
  std::string family = "all";
  std::string form = "all";
  std::size_t replicates = 200;
  std::size_t n = 200;
  std::uint64_t seed = 1;
  std::string out_prefix;
  bool check = false;
};

EventFamily parse_family(const std::string& s) {
  if (s == "lognormal") return EventFamily::lognormal;
  if (s == "weibull") return EventFamily::weibull;
  if (s == "gamma") return EventFamily::gamma;
  throw CLI::ValidationError("--family", "unknown family '" + s + "'");
}

EffectForm parse_form(const std::string& s) {
  if (s == "linear") return EffectForm::linear;
  if (s == "nonlinear") return EffectForm::nonlinear;
  throw CLI::ValidationError("--form", "unknown form '" + s + "'");
}

int cmd_simulate(const SimulateOptions& opt) {
  std::vector<EventFamily> families;
  std::vector<EffectForm> forms;
  if (opt.family == "all")
    families = {EventFamily::lognormal, EventFamily::weibull,
                EventFamily::gamma};
  else
    families = {parse_family(opt.family)};
  if (opt.form == "all")
    forms = {EffectForm::linear, EffectForm::nonlinear};
  else
    forms = {parse_form(opt.form)};

  std::ostringstream isse_csv, weights_csv;
  isse_csv << "family,form,estimator,mean_isse,se_isse\n";
  weights_csv << "family,form,candidate,mean_alpha\n";
  json summary = json::array();
  bool check_ok = true;
  for (EventFamily family : families) {
    for (EffectForm form : forms) {
      ScenarioConfig config;
      config.family = family;
      config.form = form;
      config.n = opt.n;
      config.replicates = opt.replicates;
      config.seed = opt.seed;
      const ScenarioResult res = run_scenario(config);
      const std::string fam = family_name(family);
      const std::string frm = form_name(form);
      std::cout << "scenario " << fam << "/" << frm << " ("
                << res.replicates_done << " replicates";
      if (res.replicates_failed > 0)
        std::cout << ", " << res.replicates_failed << " failed";
      std::cout << ")\n" << std::setprecision(4);
      for (std::size_t j = 0; j < res.estimators.size(); ++j) {
        std::cout << "  " << std::left << std::setw(12) << res.estimators[j]
                  << " isse " << res.mean_isse[j] << " (se "
                  << res.se_isse[j] << ")\n";
        isse_csv << fam << "," << frm << "," << res.estimators[j] << ","
                 << std::setprecision(10) << res.mean_isse[j] << ","
                 << res.se_isse[j] << "\n";
      }
      for (std::size_t k = 0; k < res.candidates.size(); ++k) {
        weights_csv << fam << "," << frm << "," << res.candidates[k] << ","
                    << std::setprecision(10) << res.mean_alpha[k] << "\n";
      }
      json sj;
      sj["family"] = fam;
      sj["form"] = frm;
      sj["replicates"] = res.replicates_done;
      sj["failed"] = res.replicates_failed;
      sj["censoring_constant"] = res.censoring_constant;
      sj["estimators"] = res.estimators;
      sj["mean_isse"] = res.mean_isse;
      sj["se_isse"] = res.se_isse;
      sj["candidates"] = res.candidates;
      sj["mean_alpha"] = res.mean_alpha;
      summary.push_back(std::move(sj));

      if (opt.check) {
        const std::size_t m = res.candidates.size();
        const double stack = res.mean_isse[m];
        const double cv = res.mean_isse[m + 1];
        double best_single = res.mean_isse[0];
        for (std::size_t k = 1; k < m; ++k)
          best_single = std::min(best_single, res.mean_isse[k]);
        if (stack > cv) {
          std::cout << "  CHECK FAIL: stack > cv\n";
          check_ok = false;
        }
        if (form == EffectForm::nonlinear && stack >= best_single) {
          std::cout << "  CHECK FAIL: stack not below best single model\n";
          check_ok = false;
        }
      }
    }
  }
  if (!opt.out_prefix.empty()) {
    std::ofstream(opt.out_prefix + "_isse.csv") << isse_csv.str();
    std::ofstream(opt.out_prefix + "_weights.csv") << weights_csv.str();
    std::ofstream(opt.out_prefix + "_summary.json") << summary.dump(2) << "\n";
  }
  if (opt.check && !check_ok) {
    std::cout << "acceptance ordering checks FAILED\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"survstack: stacked conditional survival estimation"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "fit a stacked model from a CSV");
  fit->add_option("--data", fit_opt.data_path, "training data CSV")
      ->required();
  fit->add_option("--config", fit_opt.config_path,
                  "candidate config JSON (default: weibull, lognormal, cox, rsf)");
  fit->add_option("--out", fit_opt.out_path, "model output path (JSON)");
  fit->add_option("--seed", fit_opt.seed, "RNG seed");
  fit->add_option("--folds", fit_opt.folds, "cross-validation folds");
  fit->add_option("--grid-size", fit_opt.grid_size, "stacking grid size");
  fit->add_option("--trees", fit_opt.trees, "forest size");
  fit->add_option("--min-node-events", fit_opt.min_node_events,
                  "forest minimum events per node");

  std::string model_path, pred_data, times_spec = "5y", pred_out;
  bool per_candidate = false;
  auto* predict = app.add_subcommand("predict", "predict survival from a model");
  predict->add_option("--model", model_path, "model JSON")->required();
  predict->add_option("--data", pred_data, "covariate CSV")->required();
  predict->add_option("--times", times_spec,
                      "comma-separated times, or '5y'");
  predict->add_option("--out", pred_out, "output CSV (default stdout)");
  predict->add_flag("--per-candidate", per_candidate,
                    "include per-candidate prediction columns");

  SimulateOptions sim_opt;
  auto* simulate =
      app.add_subcommand("simulate", "run the simulation benchmark");
  simulate->add_option("--family", sim_opt.family,
                       "lognormal|weibull|gamma|all");
  simulate->add_option("--form", sim_opt.form, "linear|nonlinear|all");
  simulate->add_option("--replicates", sim_opt.replicates, "replicates");
  simulate->add_option("--n", sim_opt.n, "sample size per replicate");
  simulate->add_option("--seed", sim_opt.seed, "RNG seed");
  simulate->add_option("--out", sim_opt.out_prefix, "output file prefix");
  simulate->add_flag("--check", sim_opt.check,
                     "fail if acceptance orderings are violated");

  std::string eval_data, eval_pred;
  auto* evaluate =
      app.add_subcommand("evaluate", "IPCW Brier / IBS of a prediction file");
  evaluate->add_option("--data", eval_data, "dataset CSV")->required();
  evaluate->add_option("--predictions", eval_pred,
                       "prediction CSV (header = times)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_opt);
    if (predict->parsed())
      return cmd_predict(model_path, pred_data, times_spec, pred_out,
                         per_candidate);
    if (simulate->parsed()) return cmd_simulate(sim_opt);
    if (evaluate->parsed()) return cmd_evaluate(eval_data, eval_pred);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
