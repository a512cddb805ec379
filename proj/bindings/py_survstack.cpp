#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "survstack/censoring.hpp"
#include "survstack/metrics.hpp"
#include "survstack/model_io.hpp"
#include "survstack/sim.hpp"
#include "survstack/stack.hpp"

namespace py = pybind11;
using namespace survstack;

namespace {

SurvivalDataset make_dataset(const std::vector<double>& time,
                             const std::vector<bool>& event, const Matrix& x,
                             const std::vector<std::string>& names) {
  return SurvivalDataset(time, event, x, names);
}

CandidateList default_spec_list(std::size_t n_trees,
                                std::size_t min_node_events,
                                std::uint64_t seed) {
  ForestConfig fc;
  fc.n_trees = n_trees;
  fc.min_node_events = min_node_events;
  fc.seed = seed;
  return {std::make_shared<AftCandidate>("weibull", AftFamily::weibull),
          std::make_shared<AftCandidate>("lognormal", AftFamily::lognormal),
          std::make_shared<CoxCandidate>("cox"),
          std::make_shared<ForestCandidate>("rsf", fc)};
}

Matrix predict_matrix(const StackedModel& model, const Matrix& x,
                      const std::vector<double>& times) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(times.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd xi = x.row(i);
    for (std::size_t j = 0; j < times.size(); ++j)
      out(i, static_cast<Eigen::Index>(j)) =
          predict_stack(model, xi, times[j]);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_survstack, m) {
  m.doc() = "Stacked conditional survival estimation";

  py::register_exception<Error>(m, "SurvstackError");

  py::class_<SurvivalDataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("time"), py::arg("event"),
           py::arg("covariates"),
           py::arg("covariate_names") = std::vector<std::string>{})
      .def_property_readonly("n", &SurvivalDataset::size)
      .def_property_readonly("n_events", &SurvivalDataset::n_events)
      .def_property_readonly("covariate_names",
                             &SurvivalDataset::covariate_names);

  py::class_<StepSurvivalCurve>(m, "StepSurvivalCurve")
      .def("__call__",
           [](const StepSurvivalCurve& c, double t, bool left) {
             return c(t, left ? CurveSide::left : CurveSide::right);
           },
           py::arg("t"), py::arg("left") = false)
      .def_property_readonly("jump_times", &StepSurvivalCurve::jump_times)
      .def_property_readonly("values", &StepSurvivalCurve::values);

  py::class_<StackedModel>(m, "StackedModel")
      .def_property_readonly("weights",
                             [](const StackedModel& s) {
                               return s.weights.alpha;
                             })
      .def_property_readonly("candidate_ids",
                             [](const StackedModel& s) {
                               std::vector<std::string> ids;
                               for (const auto& c : s.candidates)
                                 ids.push_back(c->id());
                               return ids;
                             })
      .def_property_readonly("grid",
                             [](const StackedModel& s) {
                               return s.grid.times();
                             })
      .def("predict", &predict_matrix, py::arg("covariates"),
           py::arg("times"))
      .def("predict_one",
           [](const StackedModel& s, const Eigen::RowVectorXd& x, double t) {
             return predict_stack(s, x, t);
           },
           py::arg("x"), py::arg("t"));

  m.def(
      "fit_stack",
      [](const SurvivalDataset& data, std::size_t grid_size,
         std::size_t folds, std::uint64_t seed, std::size_t n_trees,
         std::size_t min_node_events) {
        StackConfig config{grid_size, folds, seed};
        return fit_stack(data,
                         default_spec_list(n_trees, min_node_events, seed),
                         config);
      },
      py::arg("data"), py::arg("grid_size") = 9, py::arg("folds") = 5,
      py::arg("seed") = 0, py::arg("n_trees") = 250,
      py::arg("min_node_events") = 3,
      "Fit the default weibull/lognormal/cox/rsf stack.");

  m.def("km_censoring", &km_censoring, py::arg("data"));
  m.def("km_event", &km_event, py::arg("data"));

  m.def("event_time_grid",
        [](const SurvivalDataset& data, std::size_t count) {
          return event_time_grid(data, count).times();
        },
        py::arg("data"), py::arg("count") = 9);

  m.def("empirical_quantiles", &empirical_quantiles, py::arg("values"),
        py::arg("probs"));

  m.def("brier_uncensored", &brier_uncensored, py::arg("z"), py::arg("s_hat"));

  m.def(
      "brier_ipcw",
      [](const SurvivalDataset& data, const Matrix& predictions,
         const std::vector<double>& times) {
        const TimeGrid grid{times};
        const auto wtab = build_weight_table(data, km_censoring(data), grid);
        std::vector<double> out(times.size());
        for (std::size_t r = 0; r < times.size(); ++r)
          out[r] = brier_ipcw(wtab, predictions, r);
        return out;
      },
      py::arg("data"), py::arg("predictions"), py::arg("times"),
      "IPCW Brier score at each time, censoring estimated by marginal KM.");

  m.def(
      "integrated_brier",
      [](const SurvivalDataset& data, const Matrix& predictions,
         const std::vector<double>& times) {
        const TimeGrid grid{times};
        const auto wtab = build_weight_table(data, km_censoring(data), grid);
        return integrated_brier(wtab, predictions);
      },
      py::arg("data"), py::arg("predictions"), py::arg("times"));

  m.def("save_stack", &save_stack, py::arg("path"), py::arg("model"),
        py::arg("covariate_names"));
  m.def("load_stack",
        [](const std::string& path) {
          auto persisted = load_stack(path);
          return std::make_pair(std::move(persisted.model),
                                persisted.covariate_names);
        },
        py::arg("path"));
}
