#ifndef AAUPOWER_ESTIMATOR_HPP
#define AAUPOWER_ESTIMATOR_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aaupower/random.hpp"

namespace aaupower {

inline const std::vector<int> kDefaultLayerSizes = {85, 100, 50, 2};

// Floor added to the softplus so the predicted std never reaches zero.
inline constexpr double kStdFloor = 1e-6;

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Fully connected ReLU network whose two outputs are the mean (identity link)
// and the standard deviation (softplus link) of a Gaussian.
struct MLPWeights {
  std::vector<int> layer_sizes;
  std::vector<DenseLayer> layers;
  std::uint64_t schema_hash = 0;

  int input_size() const { return layer_sizes.front(); }
  std::size_t num_parameters() const;
  void validate() const;
};

struct GaussianPrediction {
  double mean = 0.0;
  double std = 1.0;
};

struct TrainConfig {
  double learning_rate = 3e-3;
  int iterations = 10000;
  int batch_size = 256;
  std::uint64_t seed = kDefaultSeed;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Cosine-annealed step size ends at learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.01;

  void validate() const;
};

struct TrainResult {
  MLPWeights weights;
  std::vector<double> loss_trace;  // mean mini-batch NLL per iteration
};

double softplus(double z);

// He-style scaled-uniform weights, zero biases; deterministic per seed.
MLPWeights init_weights(std::uint64_t seed, const std::vector<int>& layer_sizes = kDefaultLayerSizes);

GaussianPrediction forward(const MLPWeights& w, std::span<const double> x);

// One prediction per row of `x`.
std::vector<GaussianPrediction> predict(const MLPWeights& w, const Eigen::MatrixXd& x);

double nll_loss(const GaussianPrediction& pred, double y);

// Mean NLL over the rows of `x`; fills `grad` (same shapes as w.layers) when
// non-null.
double loss_and_gradient(const MLPWeights& w, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::vector<DenseLayer>* grad);

// Mini-batch Adam on the Gaussian NLL. Throws ConvergenceError on a
// non-finite loss, naming the iteration.
TrainResult train(MLPWeights weights, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const TrainConfig& config);

// Central interval mean +/- z * std holding `coverage` probability mass.
std::pair<double, double> predict_interval(const GaussianPrediction& pred, double coverage = 0.95);

double rmse(std::span<const double> predicted, std::span<const double> actual);
double mae(std::span<const double> predicted, std::span<const double> actual);
// Percent.
double mape(std::span<const double> predicted, std::span<const double> actual);

double calibration_coverage(std::span<const GaussianPrediction> predictions,
                            std::span<const double> actual, double coverage = 0.95);

std::vector<double> means(std::span<const GaussianPrediction> predictions);

void to_json(nlohmann::json& j, const MLPWeights& w);
void from_json(const nlohmann::json& j, MLPWeights& w);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void save_weights(const MLPWeights& w, const std::filesystem::path& path);
MLPWeights load_weights(const std::filesystem::path& path);

}  // namespace aaupower

#endif  // AAUPOWER_ESTIMATOR_HPP
