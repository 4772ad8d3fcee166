#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "poolal/error.hpp"
#include "poolal/harness.hpp"
#include "poolal/service.hpp"

namespace py = pybind11;
using namespace poolal;

namespace {

/// Accepts a dict whose values are str, bool, int, float or a list of ints.
ExperimentConfig config_from_dict(const py::dict& values) {
  ExperimentConfig config;
  for (const auto& [key, value] : values) {
    const std::string k = py::str(key);
    std::string text;
    if (py::isinstance<py::bool_>(value)) {
      text = value.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
      for (const auto& item : value) text += (text.empty() ? "" : ",") + std::to_string(item.cast<long>());
      if (text.empty()) text = "none";
    } else if (py::isinstance<py::float_>(value)) {
      text = py::str(py::repr(value));
    } else {
      text = py::str(value);
    }
    set_config_value(config, k, text);
  }
  return config;
}

py::dict record_dict(const RoundRecord& r) {
  py::dict d;
  d["round"] = r.round;
  d["n_labeled"] = r.n_labeled;
  d["accuracy"] = r.accuracy;
  d["selected_indices"] = r.selected;
  d["wall_seconds"] = r.wall_seconds;
  return d;
}

py::list curve_list(const std::vector<RoundRecord>& records) {
  py::list out;
  for (const RoundRecord& r : records) out.append(record_dict(r));
  return out;
}

std::vector<RoundRecord> records_from(const py::list& items) {
  std::vector<RoundRecord> out;
  for (const auto& item : items) {
    const auto d = item.cast<py::dict>();
    RoundRecord r;
    r.round = d["round"].cast<std::size_t>();
    r.n_labeled = d["n_labeled"].cast<std::size_t>();
    r.accuracy = d["accuracy"].cast<double>();
    r.selected = d["selected_indices"].cast<IndexList>();
    out.push_back(std::move(r));
  }
  return out;
}

py::tuple scores_tuple(const ScoreVector& s) {
  return py::make_tuple(s.scores, s.direction == Direction::select_max ? "max" : "min");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the poolal package";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<ValidationError> validation_error(m, "ValidationError", base.ptr());
  static py::exception<ConflictError> conflict_error(m, "ConflictError", base.ptr());
  static py::exception<NotFoundError> not_found_error(m, "NotFoundError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const ConflictError& e) {
      py::set_error(conflict_error, e.what());
    } catch (const NotFoundError& e) {
      py::set_error(not_found_error, e.what());
    } catch (const Error& e) {
      py::set_error(base, (std::string(e.code()) + ": " + e.what()).c_str());
    }
  });

  m.def("config_keys", &config_keys, "Option names accepted in experiment configs.");
  m.def("strategy_names", [] {
    std::vector<std::string> names;
    for (StrategyKind k : all_strategy_kinds()) names.push_back(to_string(k));
    return names;
  });

  m.def(
      "make_two_gaussians",
      [](std::size_t n_per_class, double separation, double noise_sd, std::uint64_t seed) {
        Dataset d = make_two_gaussians(n_per_class, separation, noise_sd, seed);
        return py::make_tuple(std::move(d.features), std::move(d.labels));
      },
      py::arg("n_per_class"), py::arg("separation"), py::arg("noise_sd"), py::arg("seed") = 0);

  m.def("softmax", &softmax_rows, py::arg("logits"));
  m.def("least_confidence_scores", [](const Matrix& p) { return scores_tuple(least_confidence_scores(p)); });
  m.def("margin_scores", [](const Matrix& p) { return scores_tuple(margin_scores(p)); });
  m.def("entropy_scores", [](const Matrix& p) { return scores_tuple(entropy_scores(p)); });
  m.def("bald_scores", [](const std::vector<Matrix>& stack) { return scores_tuple(bald_scores(stack)); },
        py::arg("stack"));
  m.def(
      "kcenter_greedy",
      [](const Matrix& embeddings, const std::vector<bool>& labeled_mask, std::size_t n) {
        return kcenter_greedy(embeddings, labeled_mask, n).selected;
      },
      py::arg("embeddings"), py::arg("labeled_mask"), py::arg("n"));

  m.def(
      "run_experiment", [](const py::dict& config) { return curve_list(run_experiment(config_from_dict(config))); },
      py::arg("config"), "Runs every round and returns the learning curve as a list of dicts.");

  m.def(
      "compare_strategies",
      [](const py::dict& config, const std::vector<std::string>& strategies, const std::vector<std::uint64_t>& seeds,
         double target) {
        std::vector<StrategyKind> kinds;
        for (const auto& s : strategies) kinds.push_back(parse_strategy_kind(s));
        const SummaryTable t = compare_strategies(config_from_dict(config), kinds, seeds, target);
        py::list rows;
        for (const StrategySummary& s : t.rows) {
          py::dict d;
          d["strategy"] = s.strategy;
          d["mean_accuracy"] = s.mean_accuracy;
          d["stddev_accuracy"] = s.stddev_accuracy;
          d["aulc"] = s.aulc;
          d["rounds_to_target"] = s.rounds_to_target;
          d["mean_aulc"] = s.mean_aulc;
          d["mean_rounds_to_target"] = s.mean_rounds_to_target;
          rows.append(d);
        }
        return rows;
      },
      py::arg("config"), py::arg("strategies"), py::arg("seeds"), py::arg("target") = 0.9);

  m.def(
      "format_curve",
      [](const py::list& records, const std::string& format) {
        if (format != "csv" && format != "json") throw ConfigError("format must be 'csv' or 'json'");
        return format_curve(records_from(records), format == "csv" ? CurveFormat::csv : CurveFormat::json);
      },
      py::arg("records"), py::arg("format") = "csv");

  py::class_<ActiveLearner>(m, "ActiveLearner")
      .def(py::init([](const py::dict& config) { return ActiveLearner(config_from_dict(config)); }), py::arg("config"))
      .def("query", [](const ActiveLearner& l) { return l.query().selected; })
      .def("complete_round", [](ActiveLearner& l, const IndexList& selected) { return record_dict(l.complete_round(selected)); })
      .def("complete_round",
           [](ActiveLearner& l, const IndexList& selected, const std::vector<int>& labels) {
             return record_dict(l.complete_round(selected, labels));
           })
      .def("step", [](ActiveLearner& l) { return record_dict(l.step()); })
      .def("done", &ActiveLearner::done)
      .def_property_readonly("rounds_completed", &ActiveLearner::rounds_completed)
      .def_property_readonly("records", [](const ActiveLearner& l) { return curve_list(l.records()); })
      .def_property_readonly("features", [](const ActiveLearner& l) { return l.pool().features(); })
      .def_property_readonly("labeled_mask", [](const ActiveLearner& l) { return l.pool().labeled_mask(); });

  py::class_<SessionManager>(m, "SessionManager")
      .def(py::init<std::optional<std::string>>(), py::arg("snapshot_dir") = py::none())
      .def(
          "request",
          [](SessionManager& s, const std::string& method, const std::string& path, const std::string& body) {
            ApiResponse r;
            {
              py::gil_scoped_release release;
              r = handle_api_request(s, method, path, body);
            }
            return py::make_tuple(r.status, r.body);
          },
          py::arg("method"), py::arg("path"), py::arg("body") = "",
          "Routes one API request; returns (status, JSON body).")
      .def("snapshot", &SessionManager::snapshot)
      .def("restore", &SessionManager::restore);
}
