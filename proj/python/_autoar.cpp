#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "autoar/armodel.hpp"
#include "autoar/autoar.hpp"
#include "autoar/bench.hpp"
#include "autoar/dataio.hpp"
#include "autoar/error.hpp"
#include "autoar/stattests.hpp"

namespace py = pybind11;
using namespace autoar;

namespace {

MultiChannelSeries as_series(const Eigen::MatrixXd& values,
                             std::vector<std::string> names = {}) {
  return MultiChannelSeries(values, std::move(names));
}

AutoArConfig make_config(std::optional<std::vector<std::size_t>> grid,
                         std::size_t max_lookback, double kpss_alpha,
                         std::optional<int> force_d, bool intercept, std::size_t jobs) {
  AutoArConfig c;
  c.max_lookback = max_lookback;
  if (grid) c.lookback_grid = *grid;
  c.kpss_significance = kpss_alpha;
  c.force_d = force_d;
  c.intercept = intercept;
  c.jobs = jobs;
  return c;
}

py::dict selection_dict(const SelectionResult& s) {
  py::dict d;
  d["chosen_p"] = s.chosen_p;
  d["d"] = s.d;
  d["bic_by_p"] = s.bic_by_p;
  d["per_channel_reject"] = s.per_channel_reject;
  d["skipped"] = s.skipped;
  return d;
}

}  // namespace

PYBIND11_MODULE(_autoar, m) {
  m.doc() = "Auto-AR forecasting: KPSS differencing, BIC lookback selection, pooled AR.";

  auto base = py::register_exception<Error>(m, "AutoArError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<ArModel>(m, "ArModel")
      .def(py::init<>())
      .def_readwrite("lookback", &ArModel::lookback)
      .def_readwrite("differencing", &ArModel::differencing)
      .def_readwrite("has_intercept", &ArModel::has_intercept)
      .def_readwrite("intercept", &ArModel::intercept)
      .def_readwrite("coeffs", &ArModel::coeffs)
      .def_readwrite("noise_var", &ArModel::noise_var)
      .def_readwrite("n_train_samples", &ArModel::n_train_samples)
      .def_readwrite("channel_names", &ArModel::channel_names)
      .def_property_readonly("parameter_count", &ArModel::parameter_count)
      .def("to_json", [](const ArModel& model) { return serialize_model(model); })
      .def_static("from_json", [](const std::string& s) { return parse_model(s); });

  py::class_<KpssResult>(m, "KpssResult")
      .def_readonly("statistic", &KpssResult::statistic)
      .def_readonly("bandwidth", &KpssResult::bandwidth)
      .def_readonly("critical_value", &KpssResult::critical_value)
      .def_readonly("reject_stationarity", &KpssResult::reject_stationarity)
      .def_readonly("degenerate", &KpssResult::degenerate);

  m.def("load_csv",
        [](const std::filesystem::path& path) {
          const MultiChannelSeries s = load_csv(path);
          return py::make_tuple(s.values(), s.channel_names());
        },
        py::arg("path"), "Returns (values T x C, channel names).");

  m.def("kpss_level",
        [](const Eigen::VectorXd& x, double significance, std::optional<std::size_t> lags) {
          return kpss_level(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                            significance, lags);
        },
        py::arg("x"), py::arg("significance") = 0.05, py::arg("lags") = py::none());

  m.def("decide_differencing",
        [](const Eigen::MatrixXd& values, double significance) {
          return decide_differencing(as_series(values), significance).d;
        },
        py::arg("values"), py::arg("significance") = 0.05);

  m.def("difference",
        [](const Eigen::MatrixXd& values, int d) { return difference(as_series(values), d).values(); },
        py::arg("values"), py::arg("d"));

  m.def("integrate", &integrate, py::arg("diff_forecast"), py::arg("last_level"));

  m.def("fit",
        [](const Eigen::MatrixXd& values, std::size_t p, int d, bool intercept, std::size_t jobs) {
          const FitResult r = fit(as_series(values), p, d, FitOptions{intercept, jobs});
          py::dict diag;
          diag["rss"] = r.diagnostics.rss;
          diag["n"] = r.diagnostics.n;
          diag["bic"] = r.diagnostics.bic;
          diag["log_likelihood"] = r.diagnostics.log_likelihood;
          return py::make_tuple(r.model, diag);
        },
        py::arg("values"), py::arg("p"), py::arg("d") = 0, py::arg("intercept") = true,
        py::arg("jobs") = 1, "Pooled AR(p) on the d-differenced channels; returns (model, diagnostics).");

  m.def("auto_ar",
        [](const Eigen::MatrixXd& values, std::optional<std::vector<std::size_t>> grid,
           std::size_t max_lookback, double kpss_alpha, std::optional<int> force_d,
           bool intercept, std::size_t jobs) {
          const AutoArResult r = run_auto_ar(
              as_series(values), make_config(grid, max_lookback, kpss_alpha, force_d, intercept, jobs));
          return py::make_tuple(r.fit.model, selection_dict(r.selection));
        },
        py::arg("values"), py::arg("grid") = py::none(), py::arg("max_lookback") = 512,
        py::arg("kpss_alpha") = 0.05, py::arg("force_d") = py::none(),
        py::arg("intercept") = true, py::arg("jobs") = 1,
        "KPSS differencing plus BIC lookback selection; returns (model, selection).");

  m.def("zero_shot_forecast",
        [](const Eigen::MatrixXd& context, std::size_t horizon, std::size_t window,
           std::vector<std::size_t> grid) {
          AutoArConfig c;
          c.zero_shot = true;
          c.zero_shot_window = window;
          c.zero_shot_grid = std::move(grid);
          return run_zero_shot(as_series(context), c, horizon);
        },
        py::arg("context"), py::arg("horizon"), py::arg("window") = 256,
        py::arg("grid") = std::vector<std::size_t>{64, 96, 128, 192});

  m.def("forecast",
        [](const ArModel& model, const Eigen::MatrixXd& context, std::size_t horizon) {
          return forecast(model, as_series(context), horizon);
        },
        py::arg("model"), py::arg("context"), py::arg("horizon"), "Returns H x C.");

  m.def("evaluate",
        [](const ArModel& model, const Eigen::MatrixXd& values, std::size_t test_begin,
           std::size_t test_end, std::vector<std::size_t> horizons, std::size_t context_len,
           std::size_t stride, std::size_t jobs) {
          ArForecaster f(model, context_len);
          const auto metrics = evaluate(f, as_series(values),
                                        EvalWindowSpec{test_begin, test_end, horizons, stride}, jobs);
          py::list out;
          for (const auto& h : metrics) {
            py::dict d;
            d["horizon"] = h.horizon;
            d["mse"] = h.mse;
            d["mae"] = h.mae;
            d["rmse"] = h.rmse;
            d["n_windows"] = h.n_windows;
            out.append(d);
          }
          return out;
        },
        py::arg("model"), py::arg("values"), py::arg("test_begin"), py::arg("test_end"),
        py::arg("horizons"), py::arg("context_len") = 512, py::arg("stride") = 1,
        py::arg("jobs") = 1);

  m.def("aggregate_reference",
        [](std::vector<std::filesystem::path> paths, const std::string& baseline,
           const std::string& metric, const std::string& ties, std::vector<std::string> methods,
           std::vector<std::string> exclude_datasets) {
          std::vector<EvalRecord> records;
          for (const auto& p : paths) {
            auto part = load_reference_results(p);
            records.insert(records.end(), part.begin(), part.end());
          }
          AggregateOptions o;
          o.baseline = baseline;
          if (metric != "rmse" && metric != "mae") throw ConfigError("metric must be rmse or mae");
          if (ties != "average" && ties != "max") throw ConfigError("ties must be average or max");
          o.metric = metric == "mae" ? ScoreMetric::mae : ScoreMetric::rmse;
          o.ties = ties == "max" ? TiePolicy::max : TiePolicy::average;
          o.methods = std::move(methods);
          o.exclude_datasets = std::move(exclude_datasets);
          const AggregateReport r = aggregate(records, o);
          py::dict out;
          for (const auto& [name, s] : r.per_method) {
            py::dict d;
            d["average_score"] = s.average_score;
            d["average_rank"] = s.average_rank;
            d["mean_pct_improvement"] = s.mean_pct_improvement;
            d["median_pct_improvement"] = s.median_pct_improvement;
            d["n_tasks"] = s.n_tasks;
            out[py::str(name)] = d;
          }
          return out;
        },
        py::arg("paths"), py::arg("baseline") = "Auto-ARIMA", py::arg("metric") = "rmse",
        py::arg("ties") = "average", py::arg("methods") = std::vector<std::string>{},
        py::arg("exclude_datasets") = std::vector<std::string>{});
}
