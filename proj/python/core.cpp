#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "panelcast/error.hpp"
#include "panelcast/harness.hpp"
#include "panelcast/lag_features.hpp"
#include "panelcast/metrics.hpp"
#include "panelcast/panel.hpp"
#include "panelcast/synthetic.hpp"

namespace py = pybind11;
using namespace panelcast;

namespace {

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), out.mutable_data());
    return out;
}

py::array_t<double> to_array(const Vector& v) {
    py::array_t<double> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict metrics_dict(const MetricsReport& r) {
    py::dict d;
    d["mae"] = r.mae;
    d["rmse"] = r.rmse;
    d["mape"] = r.mape;
    d["r2"] = r.r2;
    d["train_seconds"] = r.train_seconds;
    d["predict_seconds"] = r.predict_seconds;
    d["total_seconds"] = r.total_seconds;
    d["n"] = r.n;
    d["flags"] = r.flags;
    return d;
}

py::dict supervised_dict(const SupervisedMatrix& m) {
    py::dict d;
    d["X"] = to_array(m.X);
    d["y"] = to_array(m.y);
    std::vector<std::string> labels, states;
    std::vector<int> years;
    for (const auto& c : m.columns) labels.push_back(c.str());
    for (const auto& p : m.provenance) {
        states.push_back(p.state);
        years.push_back(p.target_year);
    }
    d["columns"] = labels;
    d["states"] = states;
    d["target_years"] = years;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Panel forecasting with lag features, tree ensembles and neural baselines.";
    m.attr("__version__") = kVersion;

    py::register_exception<Error>(m, "PanelcastError", PyExc_RuntimeError);

    py::class_<PanelTable>(m, "Panel")
        .def_property_readonly("states", &PanelTable::states)
        .def_property_readonly("years", &PanelTable::years)
        .def_property_readonly("features",
                               [](const PanelTable& p) {
                                   std::vector<std::string> out;
                                   for (const auto& f : p.features()) out.push_back(f.name);
                                   return out;
                               })
        .def_property_readonly("n_rows", &PanelTable::n_rows)
        .def("values",
             [](const PanelTable& p) {
                 py::array_t<double> out({p.n_years(), p.n_states(), p.n_features()});
                 std::copy(p.values().begin(), p.values().end(), out.mutable_data());
                 return out;
             },
             "Array indexed [year, state, feature].")
        .def("save", [](const PanelTable& p, const std::string& path) { save_panel(p, path); })
        .def("__eq__", [](const PanelTable& a, const PanelTable& b) { return a == b; });

    m.def("synthetic_panel",
          [](std::uint64_t seed, std::size_t states, int first_year, int last_year) {
              return generate_synthetic(seed, states, first_year, last_year);
          },
          py::arg("seed"), py::arg("states") = 51, py::arg("first_year") = 2011, py::arg("last_year") = 2021);
    m.def("load_panel",
          [](const std::string& path, bool strict) { return load_panel(path, {strict, std::nullopt}); },
          py::arg("path"), py::arg("schema_strict") = false);

    m.def("lag_dimension", [](std::size_t predictors, int lag) { return lag_dimension(predictors, lag); },
          py::arg("predictors"), py::arg("lag"));
    m.def("supervised",
          [](const PanelTable& p, int lag, const std::string& split) {
              if (split != "train" && split != "test") throw ConfigError("split must be 'train' or 'test'");
              return supervised_dict(
                  build_supervised(p, LagConfig::for_panel(p, lag), split == "train" ? Split::train : Split::test));
          },
          py::arg("panel"), py::arg("lag"), py::arg("split") = "train");

    m.def("interpolate",
          [](const std::vector<std::pair<int, double>>& points, const std::vector<int>& years) {
              return interpolate_series({"", "", points}, years).points;
          },
          py::arg("points"), py::arg("years"));

    m.def("compute_metrics",
          [](const std::vector<double>& y, const std::vector<double>& yhat) {
              return metrics_dict(compute_metrics(y, yhat));
          },
          py::arg("y"), py::arg("yhat"));

    m.def("render_config", [](const std::string& text) { return render_config(parse_config(text)); },
          py::arg("text") = "", "Resolved configuration for `key = value` text.");
    m.def("fit_cell",
          [](const std::string& model, int lag, const std::string& config_text, std::optional<PanelTable> panel) {
              const auto cfg = parse_config(config_text);
              const auto data = panel ? *panel : load_experiment_panel(cfg);
              const auto cell = run_cell(cfg, data, parse_model(model), lag);
              py::dict d = metrics_dict(*cell.metrics);
              d["n_train"] = cell.n_train;
              d["n_test"] = cell.n_test;
              d["n_features"] = cell.n_features;
              return d;
          },
          py::arg("model"), py::arg("lag"), py::arg("config") = "", py::arg("panel") = py::none(),
          "Train and evaluate one (model, lag) cell; returns its metrics.");
    m.def("run_grid",
          [](const std::string& config_text, bool include_timings) {
              const auto cfg = parse_config(config_text);
              cfg.validate();
              GridReport report;
              {
                  py::gil_scoped_release release;
                  report = run_grid(cfg);
              }
              return report_json(report, include_timings);
          },
          py::arg("config") = "", py::arg("include_timings") = true,
          "Run the model x lag grid and return the structured report as JSON text.");
}
