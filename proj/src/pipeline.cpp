#include "aaupower/pipeline.hpp"

#include <fstream>
#include <set>

#include "aaupower/error.hpp"

namespace aaupower {

void Scenario::validate() const {
  if (num_aaus <= 0) throw InvalidInput("num_aaus must be positive");
  if (train_days <= 0 || test_days <= 0) throw InvalidInput("train_days and test_days must be positive");
  if (!(noise_std >= 0.0)) throw InvalidInput("noise_std must be non-negative");
  if (load_levels < 3) throw InvalidInput("load_levels must be at least 3");
  train.validate();
}

Metrics evaluate(std::span<const GaussianPrediction> predicted, std::span<const double> actual) {
  const auto mu = means(predicted);
  Metrics m = evaluate(std::span<const double>(mu), actual);
  m.coverage = calibration_coverage(predicted, actual, 0.95);
  return m;
}

Metrics evaluate(std::span<const double> predicted, std::span<const double> actual) {
  Metrics m;
  m.rmse = rmse(predicted, actual);
  m.mae = mae(predicted, actual);
  m.mape = mape(predicted, actual);
  m.count = actual.size();
  return m;
}

std::vector<double> analytical_predict(std::span<const HourlyRecord> records, const Catalog& catalog,
                                       const FittedParams& fitted) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto it = fitted.find(r.type_id);
    if (it == fitted.end()) {
      throw InvalidInput("no fitted parameters for type " + std::to_string(r.type_id));
    }
    out.push_back(hourly_energy(it->second, activity_from_record(r, find_type(catalog, r.type_id))));
  }
  return out;
}

std::vector<double> measured(std::span<const HourlyRecord> records) {
  std::vector<double> y;
  y.reserve(records.size());
  for (const auto& r : records) y.push_back(r.measured_power);
  return y;
}

TrainedEstimator train_estimator(const std::vector<HourlyRecord>& train_records,
                                 const TrainConfig& config, const FeatureSchema& schema) {
  TrainedEstimator out;
  out.normalizer = fit_normalizer(train_records, schema);
  const Eigen::MatrixXd x = encode_all(train_records, out.normalizer, schema);
  const auto y = measured(train_records);
  auto sizes = kDefaultLayerSizes;
  sizes.front() = schema.width();
  auto init = init_weights(config.seed, sizes);
  init.schema_hash = schema.hash();
  auto result = train(std::move(init), x, Eigen::Map<const Eigen::VectorXd>(y.data(), y.size()), config);
  out.weights = std::move(result.weights);
  out.loss_trace = std::move(result.loss_trace);
  return out;
}

void save_estimator(const TrainedEstimator& estimator, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << nlohmann::json{{"weights", estimator.weights}, {"normalizer", estimator.normalizer}}.dump(1)
      << '\n';
}

TrainedEstimator load_estimator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  TrainedEstimator out;
  try {
    const auto j = nlohmann::json::parse(in);
    out.weights = j.at("weights").get<MLPWeights>();
    out.normalizer = j.at("normalizer").get<Normalizer>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return out;
}

std::vector<GaussianPrediction> estimate(const TrainedEstimator& estimator,
                                         std::span<const HourlyRecord> records,
                                         const FeatureSchema& schema) {
  if (estimator.weights.schema_hash != schema.hash()) {
    throw SchemaError("estimator was trained on a different feature schema");
  }
  return predict(estimator.weights, encode_all(records, estimator.normalizer, schema));
}

FittedParams DistillAll::params() const {
  FittedParams out;
  for (const auto& [id, r] : results) out.emplace(id, r.fit.params);
  return out;
}

DistillAll distill_types(const Catalog& catalog, const std::vector<int>& type_ids,
                         const TrainedEstimator& estimator, int load_levels,
                         const FitOptions& options, const FeatureSchema& schema) {
  if (estimator.weights.schema_hash != schema.hash()) {
    throw SchemaError("estimator was trained on a different feature schema");
  }
  DistillAll out;
  for (int id : std::set<int>(type_ids.begin(), type_ids.end())) {
    try {
      out.results.emplace(id, distill(find_type(catalog, id), estimator.weights, estimator.normalizer,
                                      load_levels, options, schema));
    } catch (const ConvergenceError& e) {
      out.failures.emplace(id, e.what());
    } catch (const SingularSystem& e) {
      out.failures.emplace(id, e.what());
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const Metrics& m) {
  j = nlohmann::json{{"rmse", m.rmse}, {"mae", m.mae}, {"mape_percent", m.mape},
                     {"coverage_95", m.coverage}, {"count", m.count}};
}

void to_json(nlohmann::json& j, const Scenario& s) {
  j = nlohmann::json{{"num_aaus", s.num_aaus},
                     {"train_days", s.train_days},
                     {"test_days", s.test_days},
                     {"noise_std", s.noise_std},
                     {"seed", s.seed},
                     {"train", s.train},
                     {"load_levels", s.load_levels},
                     {"fit",
                      {{"tol", s.fit.tol},
                       {"max_iter", s.fit.max_iter},
                       {"lambda0", s.fit.lambda0},
                       {"lambda_factor", s.fit.lambda_factor}}}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  static const std::set<std::string> known = {"num_aaus", "train_days", "test_days", "noise_std",
                                              "seed",     "train",      "load_levels", "fit"};
  if (!j.is_object()) throw SchemaError("scenario config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw SchemaError("unknown scenario field '" + key + "'");
  }
  try {
    s.num_aaus = j.value("num_aaus", s.num_aaus);
    s.train_days = j.value("train_days", s.train_days);
    s.test_days = j.value("test_days", s.test_days);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.seed = j.value("seed", s.seed);
    s.load_levels = j.value("load_levels", s.load_levels);
    if (j.contains("train")) {
      TrainConfig t = s.train;
      from_json(j.at("train"), t);
      s.train = t;
    }
    if (j.contains("fit")) {
      const auto& f = j.at("fit");
      s.fit.tol = f.value("tol", s.fit.tol);
      s.fit.max_iter = f.value("max_iter", s.fit.max_iter);
      s.fit.lambda0 = f.value("lambda0", s.fit.lambda0);
      s.fit.lambda_factor = f.value("lambda_factor", s.fit.lambda_factor);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("scenario config: ") + e.what());
  }
}

}  // namespace aaupower
