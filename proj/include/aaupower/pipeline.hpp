#ifndef AAUPOWER_PIPELINE_HPP
#define AAUPOWER_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <json.hpp>

#include "aaupower/distill.hpp"

namespace aaupower {

// Desk-scale synthetic run shared by the CLI, the acceptance suite and the
// Python module.
struct Scenario {
  int num_aaus = 50;
  int train_days = 10;
  int test_days = 2;
  double noise_std = 0.01;
  std::uint64_t seed = kDefaultSeed;
  TrainConfig train;
  int load_levels = 5;  // grid density per carrier; not a measured quantity
  FitOptions fit;

  int num_days() const { return train_days + test_days; }
  void validate() const;
};

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  double mape = 0.0;      // percent
  double coverage = 0.0;  // of the 95% interval; 0 when there is no std
  std::size_t count = 0;
};

Metrics evaluate(std::span<const GaussianPrediction> predicted, std::span<const double> actual);
Metrics evaluate(std::span<const double> predicted, std::span<const double> actual);

using FittedParams = std::map<int, AnalyticalParams>;  // by type id

// Hour-averaged power of each record under the fitted model of its type.
std::vector<double> analytical_predict(std::span<const HourlyRecord> records, const Catalog& catalog,
                                       const FittedParams& fitted);

std::vector<double> measured(std::span<const HourlyRecord> records);

struct TrainedEstimator {
  MLPWeights weights;
  Normalizer normalizer;
  std::vector<double> loss_trace;
};

TrainedEstimator train_estimator(const std::vector<HourlyRecord>& train_records,
                                 const TrainConfig& config, const FeatureSchema& schema = {});

// weights + normalizer in one JSON document; the loss trace is not stored.
void save_estimator(const TrainedEstimator& estimator, const std::filesystem::path& path);
TrainedEstimator load_estimator(const std::filesystem::path& path);

std::vector<GaussianPrediction> estimate(const TrainedEstimator& estimator,
                                         std::span<const HourlyRecord> records,
                                         const FeatureSchema& schema = {});

// Distills every type id in `type_ids`; types whose fit fails are reported in
// `failures` rather than aborting the others.
struct DistillAll {
  std::map<int, DistillResult> results;
  std::map<int, std::string> failures;

  FittedParams params() const;
};

DistillAll distill_types(const Catalog& catalog, const std::vector<int>& type_ids,
                         const TrainedEstimator& estimator, int load_levels,
                         const FitOptions& options = {}, const FeatureSchema& schema = {});

void to_json(nlohmann::json& j, const Metrics& m);
void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

}  // namespace aaupower

#endif  // AAUPOWER_PIPELINE_HPP
