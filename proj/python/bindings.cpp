#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "aaupower/error.hpp"
#include "aaupower/pipeline.hpp"

namespace py = pybind11;
using namespace aaupower;

namespace {

// Structured values cross the boundary as JSON-shaped dicts.
template <typename T>
py::object to_py(const T& value) {
  return py::module_::import("json").attr("loads")(nlohmann::json(value).dump());
}

template <typename T>
T from_py(const py::object& obj) {
  const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(text).get<T>();
}

py::tuple split_predictions(const std::vector<GaussianPrediction>& preds) {
  py::array_t<double> mean(preds.size()), std(preds.size());
  auto m = mean.mutable_unchecked<1>();
  auto s = std.mutable_unchecked<1>();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    m(i) = preds[i].mean;
    s(i) = preds[i].std;
  }
  return py::make_tuple(mean, std);
}

}  // namespace

PYBIND11_MODULE(_aaupower, m) {
  m.doc() = "AAU power model, Gaussian MLP estimator and analytical distillation";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<SingularSystem>(m, "SingularSystem", PyExc_RuntimeError);

  py::class_<AnalyticalParams>(m, "AnalyticalParams")
      .def(py::init<>())
      .def_readwrite("p0", &AnalyticalParams::p0)
      .def_readwrite("p_bb", &AnalyticalParams::p_bb)
      .def_readwrite("d_tran", &AnalyticalParams::d_tran)
      .def_readwrite("d_pa", &AnalyticalParams::d_pa)
      .def_readwrite("eta", &AnalyticalParams::eta)
      .def_readwrite("m_available", &AnalyticalParams::m_available)
      .def_readwrite("carrier_map", &AnalyticalParams::carrier_map)
      .def("validate", &AnalyticalParams::validate)
      .def("to_dict", [](const AnalyticalParams& p) { return to_py(p); })
      .def_static("from_dict", [](const py::object& d) { return from_py<AnalyticalParams>(d); })
      .def(py::self == py::self)
      .def("__repr__", [](const AnalyticalParams& p) { return "AnalyticalParams(" + nlohmann::json(p).dump() + ")"; });

  py::class_<CarrierState>(m, "CarrierState")
      .def(py::init([](bool active, double prb_load, double p_max) { return CarrierState{active, prb_load, p_max}; }),
           py::arg("active") = true, py::arg("prb_load") = 0.0, py::arg("p_max") = 0.0)
      .def_readwrite("active", &CarrierState::active)
      .def_readwrite("prb_load", &CarrierState::prb_load)
      .def_readwrite("p_max", &CarrierState::p_max);

  py::class_<AAUState>(m, "AAUState")
      .def(py::init([](std::vector<CarrierState> carriers, double m_active, bool symbol, bool dormant) {
             return AAUState{std::move(carriers), m_active, symbol, dormant};
           }),
           py::arg("carriers"), py::arg("m_active"), py::arg("symbol_shutdown") = false,
           py::arg("dormant") = false)
      .def_readwrite("carriers", &AAUState::carriers)
      .def_readwrite("m_active", &AAUState::m_active)
      .def_readwrite("symbol_shutdown", &AAUState::symbol_shutdown)
      .def_readwrite("dormant", &AAUState::dormant);

  m.def("reference_params", &reference_params);
  m.def("reference_state", &reference_state, py::arg("params"));
  m.def("instantaneous_power", &instantaneous_power, py::arg("params"), py::arg("state"));
  m.def("savings_fraction", &savings_fraction, py::arg("params"), py::arg("state"));
  m.def("legacy_linear_model", &legacy_linear_model, py::arg("static_power"), py::arg("slope"),
        py::arg("total_tx"));

  py::class_<AAUCatalogEntry>(m, "AAUCatalogEntry")
      .def_readonly("type_id", &AAUCatalogEntry::type_id)
      .def_readonly("params", &AAUCatalogEntry::params)
      .def_readonly("max_carriers", &AAUCatalogEntry::max_carriers)
      .def_property_readonly("num_carriers", [](const AAUCatalogEntry& e) { return e.carriers.size(); })
      .def("to_dict", [](const AAUCatalogEntry& e) { return to_py(e); });

  m.def("default_catalog", &default_catalog);

  py::class_<Dataset>(m, "Dataset")
      .def("__len__", [](const Dataset& d) { return d.records.size(); })
      .def_readonly("catalog", &Dataset::catalog)
      .def_property_readonly("measured_power",
                             [](const Dataset& d) {
                               const auto y = measured(d.records);
                               return py::array_t<double>(y.size(), y.data());
                             })
      .def_property_readonly("type_ids",
                             [](const Dataset& d) {
                               std::vector<int> ids;
                               for (const auto& r : d.records) ids.push_back(r.type_id);
                               return ids;
                             })
      .def("filter_type", [](const Dataset& d, int type_id) {
        Dataset out{{}, d.catalog};
        for (const auto& r : d.records) {
          if (r.type_id == type_id) out.records.push_back(r);
        }
        return out;
      });

  m.def("generate_synthetic_dataset", &generate_synthetic_dataset, py::arg("catalog"), py::arg("num_aaus"),
        py::arg("num_days"), py::arg("seed") = kDefaultSeed, py::arg("noise_std") = 0.01);
  m.def("split_by_days", &split_by_days, py::arg("dataset"), py::arg("train_days"), py::arg("test_days"));
  m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
  m.def("load_dataset", &load_dataset, py::arg("path"), py::arg("catalog"));

  m.def(
      "encode",
      [](const Dataset& d) {
        const auto norm = fit_normalizer(d.records);
        return encode_all(d.records, norm);
      },
      py::arg("dataset"), "Feature matrix (records x 85) with a normalizer fitted on the same records");

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("iterations", &TrainConfig::iterations)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("final_lr_fraction", &TrainConfig::final_lr_fraction);

  py::class_<TrainedEstimator>(m, "TrainedEstimator")
      .def_property_readonly("loss_trace", [](const TrainedEstimator& e) { return e.loss_trace; })
      .def("save", [](const TrainedEstimator& e, const std::filesystem::path& p) { save_estimator(e, p); })
      .def_static("load", &load_estimator);

  m.def(
      "train_estimator",
      [](const Dataset& train, const TrainConfig& config) { return train_estimator(train.records, config); },
      py::arg("train"), py::arg("config") = TrainConfig{});
  m.def(
      "estimate",
      [](const TrainedEstimator& e, const Dataset& d) { return split_predictions(estimate(e, d.records)); },
      py::arg("estimator"), py::arg("dataset"), "Returns (mean, std) arrays");
  m.def("predict_interval",
        [](double mean, double std, double coverage) { return predict_interval({mean, std}, coverage); },
        py::arg("mean"), py::arg("std"), py::arg("coverage") = 0.95);

  m.def(
      "build_grid_states",
      [](const AAUCatalogEntry& type, int load_levels) { return build_grid(type, load_levels).states(); },
      py::arg("type"), py::arg("load_levels") = 5);

  py::class_<FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def_readwrite("tol", &FitOptions::tol)
      .def_readwrite("max_iter", &FitOptions::max_iter)
      .def_readwrite("lambda0", &FitOptions::lambda0)
      .def_readwrite("lambda_factor", &FitOptions::lambda_factor);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("params", &FitResult::params)
      .def_readonly("residual_norm", &FitResult::residual_norm)
      .def_readonly("iterations", &FitResult::iterations)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("parameter_names", &FitResult::parameter_names)
      .def_readonly("std_errors", &FitResult::std_errors)
      .def_readonly("residual_history", &FitResult::residual_history)
      .def("to_dict", [](const FitResult& r) { return to_py(r); });

  using States = std::vector<AAUState>;
  using Values = std::vector<double>;
  m.def(
      "initial_guess",
      [](const AnalyticalParams& topology, const States& states, const Values& targets) {
        return initial_guess(topology, states, targets);
      },
      py::arg("topology"), py::arg("states"), py::arg("targets"));
  m.def(
      "fit_params",
      [](const Values& targets, const States& states, const AnalyticalParams& init, const FitOptions& options) {
        return fit_params(targets, states, init, options);
      },
      py::arg("targets"), py::arg("states"), py::arg("init"), py::arg("options") = FitOptions{});
  m.def(
      "closed_form_check",
      [](const States& states, const Values& targets, const AnalyticalParams& topology) {
        return closed_form_check(states, targets, topology);
      },
      py::arg("states"), py::arg("targets"), py::arg("topology"));
  m.def(
      "distill",
      [](const Catalog& catalog, int type_id, const TrainedEstimator& e, int load_levels, const FitOptions& o) {
        return distill(find_type(catalog, type_id), e.weights, e.normalizer, load_levels, o).fit;
      },
      py::arg("catalog"), py::arg("type_id"), py::arg("estimator"), py::arg("load_levels") = 5,
      py::arg("options") = FitOptions{});
  m.def(
      "analytical_predict",
      [](const Dataset& d, const std::map<int, AnalyticalParams>& fitted) {
        const auto p = analytical_predict(d.records, d.catalog, fitted);
        return py::array_t<double>(p.size(), p.data());
      },
      py::arg("dataset"), py::arg("fitted"));

  m.def(
      "mape",
      [](const std::vector<double>& predicted, const std::vector<double>& actual) { return mape(predicted, actual); },
      py::arg("predicted"), py::arg("actual"));
  m.def(
      "rmse",
      [](const std::vector<double>& predicted, const std::vector<double>& actual) { return rmse(predicted, actual); },
      py::arg("predicted"), py::arg("actual"));

  m.attr("DEFAULT_SEED") = kDefaultSeed;
  m.attr("FEATURE_WIDTH") = FeatureSchema{}.width();
}
