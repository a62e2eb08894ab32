#include "aaupower/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "aaupower/error.hpp"

namespace aaupower {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("metric inputs differ in length");
  if (a.empty()) throw InvalidInput("metric inputs are empty");
}

// Activations of every layer for a batch; the last entry holds raw outputs.
std::vector<Eigen::MatrixXd> forward_batch(const MLPWeights& w, const Eigen::MatrixXd& x) {
  if (x.cols() != w.input_size()) {
    throw InvalidInput("input has " + std::to_string(x.cols()) + " features, network expects " +
                       std::to_string(w.input_size()));
  }
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(w.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto& layer = w.layers[l];
    Eigen::MatrixXd z = acts.back() * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (l + 1 < w.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }
  return acts;
}

GaussianPrediction from_raw(double raw_mean, double raw_std) {
  return {raw_mean, softplus(raw_std) + kStdFloor};
}

}  // namespace

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

std::size_t MLPWeights::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MLPWeights::validate() const {
  if (layer_sizes.size() < 2 || layers.size() + 1 != layer_sizes.size()) {
    throw InvalidInput("layer sizes and layer count disagree");
  }
  if (layer_sizes.back() != 2) throw InvalidInput("output layer must have 2 units (mean, std)");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weight.rows() != layer_sizes[l + 1] || layers[l].weight.cols() != layer_sizes[l] ||
        layers[l].bias.size() != layer_sizes[l + 1]) {
      throw InvalidInput("layer " + std::to_string(l) + " has inconsistent dimensions");
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be > 0");
  if (iterations < 1) throw InvalidInput("iterations must be >= 1");
  if (batch_size < 1) throw InvalidInput("batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidInput("Adam moment coefficients must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be > 0");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    throw InvalidInput("final_lr_fraction must lie in (0, 1]");
  }
}

MLPWeights init_weights(std::uint64_t seed, const std::vector<int>& layer_sizes) {
  MLPWeights w;
  w.layer_sizes = layer_sizes;
  auto rng = make_stream(seed, "init");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / in);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weight(r, c) = bound * unit(rng);
    }
    w.layers.push_back(std::move(layer));
  }
  w.validate();
  return w;
}

GaussianPrediction forward(const MLPWeights& w, std::span<const double> x) {
  if (static_cast<int>(x.size()) != w.input_size()) {
    throw InvalidInput("input has " + std::to_string(x.size()) + " features, network expects " +
                       std::to_string(w.input_size()));
  }
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    Eigen::VectorXd z = w.layers[l].weight * a + w.layers[l].bias;
    a = (l + 1 < w.layers.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return from_raw(a[0], a[1]);
}

std::vector<GaussianPrediction> predict(const MLPWeights& w, const Eigen::MatrixXd& x) {
  std::vector<GaussianPrediction> out;
  out.reserve(x.rows());
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index start = 0; start < x.rows(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, x.rows() - start);
    const auto acts = forward_batch(w, x.middleRows(start, n));
    const auto& raw = acts.back();
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(from_raw(raw(i, 0), raw(i, 1)));
  }
  return out;
}

double nll_loss(const GaussianPrediction& pred, double y) {
  const double r = y - pred.mean;
  return kHalfLog2Pi + std::log(pred.std) + r * r / (2.0 * pred.std * pred.std);
}

double loss_and_gradient(const MLPWeights& w, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::vector<DenseLayer>* grad) {
  if (x.rows() != y.size() || x.rows() == 0) throw InvalidInput("batch shape mismatch");
  const auto acts = forward_batch(w, x);
  const auto& raw = acts.back();
  const Eigen::Index n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  double loss = 0.0;
  Eigen::MatrixXd delta(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GaussianPrediction p = from_raw(raw(i, 0), raw(i, 1));
    loss += nll_loss(p, y[i]);
    const double r = y[i] - p.mean;
    const double var = p.std * p.std;
    delta(i, 0) = -r / var * inv_n;
    delta(i, 1) = (1.0 / p.std - r * r / (var * p.std)) * sigmoid(raw(i, 1)) * inv_n;
  }
  loss *= inv_n;
  if (!grad) return loss;

  grad->resize(w.layers.size());
  for (std::size_t l = w.layers.size(); l-- > 0;) {
    (*grad)[l].weight = delta.transpose() * acts[l];
    (*grad)[l].bias = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * w.layers[l].weight;
    delta = (acts[l].array() > 0.0).select(back, 0.0);
  }
  return loss;
}

TrainResult train(MLPWeights weights, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const TrainConfig& config) {
  config.validate();
  weights.validate();
  if (x.rows() == 0) throw InvalidInput("training set is empty");
  if (x.rows() != y.size()) throw InvalidInput("features and targets differ in length");
  if (x.cols() != weights.input_size()) throw InvalidInput("feature width does not match network");

  std::vector<DenseLayer> m1, m2, grad;
  for (const auto& l : weights.layers) {
    m1.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                  Eigen::VectorXd::Zero(l.bias.size())});
  }
  m2 = m1;

  auto rng = make_stream(config.seed, "shuffle");
  std::vector<Eigen::Index> order(x.rows());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t cursor = order.size();

  const Eigen::Index batch = std::min<Eigen::Index>(config.batch_size, x.rows());
  std::vector<Eigen::Index> idx(batch);
  Eigen::MatrixXd xb(batch, x.cols());
  Eigen::VectorXd yb(batch);

  TrainResult result;
  result.loss_trace.reserve(config.iterations);
  double b1_pow = 1.0, b2_pow = 1.0;
  for (int it = 0; it < config.iterations; ++it) {
    for (Eigen::Index k = 0; k < batch; ++k) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      idx[k] = order[cursor++];
    }
    xb = x(idx, Eigen::all);
    yb = y(idx);

    const double loss = loss_and_gradient(weights, xb, yb, &grad);
    if (!std::isfinite(loss)) {
      throw ConvergenceError("training diverged: non-finite loss at iteration " + std::to_string(it));
    }
    result.loss_trace.push_back(loss);

    b1_pow *= config.beta1;
    b2_pow *= config.beta2;
    const double progress = config.iterations > 1 ? double(it) / (config.iterations - 1) : 1.0;
    const double lr = config.learning_rate *
                      (config.final_lr_fraction + (1.0 - config.final_lr_fraction) * 0.5 *
                                                      (1.0 + std::cos(std::numbers::pi * progress)));
    const double step = lr * std::sqrt(1.0 - b2_pow) / (1.0 - b1_pow);
    auto adam = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
      param.array() -= step * m.array() / (v.array().sqrt() + config.epsilon);
    };
    for (std::size_t l = 0; l < weights.layers.size(); ++l) {
      adam(weights.layers[l].weight, m1[l].weight, m2[l].weight, grad[l].weight);
      adam(weights.layers[l].bias, m1[l].bias, m2[l].bias, grad[l].bias);
    }
  }
  result.weights = std::move(weights);
  return result;
}

std::pair<double, double> predict_interval(const GaussianPrediction& pred, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidInput("coverage must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * coverage);
  return {pred.mean - z * pred.std, pred.mean + z * pred.std};
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  check_lengths(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += (predicted[i] - actual[i]) * (predicted[i] - actual[i]);
  return std::sqrt(s / static_cast<double>(actual.size()));
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
  check_lengths(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(predicted[i] - actual[i]);
  return s / static_cast<double>(actual.size());
}

double mape(std::span<const double> predicted, std::span<const double> actual) {
  check_lengths(predicted, actual);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) throw InvalidInput("MAPE undefined: actual value is zero at index " + std::to_string(i));
    s += std::abs((predicted[i] - actual[i]) / actual[i]);
  }
  return 100.0 * s / static_cast<double>(actual.size());
}

double calibration_coverage(std::span<const GaussianPrediction> predictions,
                            std::span<const double> actual, double coverage) {
  if (predictions.empty()) throw InvalidInput("calibration needs at least one prediction");
  if (predictions.size() != actual.size()) throw InvalidInput("predictions and actuals differ in length");
  std::size_t inside = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const auto [lo, hi] = predict_interval(predictions[i], coverage);
    if (actual[i] >= lo && actual[i] <= hi) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(actual.size());
}

std::vector<double> means(std::span<const GaussianPrediction> predictions) {
  std::vector<double> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.mean);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(nlohmann::json& j, const MLPWeights& w) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& l : w.layers) {
    std::vector<double> flat;
    flat.reserve(l.weight.size());
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    }
    weights.push_back(flat);
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  j = nlohmann::json{{"layer_sizes", w.layer_sizes},
                     {"hidden_activation", "relu"},
                     {"links", {{"mean", "identity"}, {"std", "softplus_plus_1e-6"}}},
                     {"schema_hash", w.schema_hash},
                     {"weights", weights},
                     {"biases", biases}};
}

void from_json(const nlohmann::json& j, MLPWeights& w) {
  try {
    j.at("layer_sizes").get_to(w.layer_sizes);
    w.schema_hash = j.at("schema_hash").get<std::uint64_t>();
    if (j.at("hidden_activation") != "relu" || j.at("links").at("mean") != "identity" ||
        j.at("links").at("std") != "softplus_plus_1e-6") {
      throw SchemaError("weights use unsupported activation or link functions");
    }
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (w.layer_sizes.size() < 2 || weights.size() + 1 != w.layer_sizes.size() ||
        biases.size() != weights.size()) {
      throw SchemaError("weights: layer count does not match layer_sizes");
    }
    w.layers.clear();
    for (std::size_t l = 0; l < weights.size(); ++l) {
      const int in = w.layer_sizes[l], out = w.layer_sizes[l + 1];
      const auto flat = weights[l].get<std::vector<double>>();
      const auto bias = biases[l].get<std::vector<double>>();
      if (flat.size() != static_cast<std::size_t>(in) * out || bias.size() != static_cast<std::size_t>(out)) {
        throw SchemaError("weights: layer " + std::to_string(l) + " has the wrong size");
      }
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
      for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) layer.weight(r, c) = flat[static_cast<std::size_t>(r) * in + c];
        layer.bias[r] = bias[r];
      }
      w.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("weights: ") + e.what());
  }
  w.validate();
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"iterations", c.iterations},
                     {"batch_size", c.batch_size},       {"seed", c.seed},
                     {"beta1", c.beta1},                 {"beta2", c.beta2},
                     {"epsilon", c.epsilon},             {"final_lr_fraction", c.final_lr_fraction}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.iterations = j.value("iterations", c.iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
}

void save_weights(const MLPWeights& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << nlohmann::json(w).dump() << '\n';
}

MLPWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("weights: ") + e.what());
  }
  return j.get<MLPWeights>();
}

}  // namespace aaupower
