#ifndef AAUPOWER_TESTS_GRAD_CHECK_HPP
#define AAUPOWER_TESTS_GRAD_CHECK_HPP

// Central finite differences of the per-sample NLL, evaluated through
// forward() + nll_loss() rather than the backpropagation path.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "aaupower/estimator.hpp"

namespace test_oracles {

struct GradCheckResult {
  double relative_error = 0.0;
  std::size_t coordinates = 0;
};

// One random (weights, x, y) triple. Checks every output-layer parameter plus
// `sampled` random coordinates of the hidden layers.
template <typename Rng>
GradCheckResult gradient_check_case(Rng& rng, double step, int sampled) {
  using namespace aaupower;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);

  MLPWeights w = init_weights(rng());
  for (auto& l : w.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.1 * z(rng);
  }
  std::vector<double> x(w.input_size());
  for (auto& v : x) v = u(rng) < 0.5 ? 0.0 : u(rng);
  x[rng() % 25] = 1.0;

  const double y = forward(w, x).mean + 0.5 * z(rng);

  Eigen::MatrixXd xm = Eigen::Map<const Eigen::RowVectorXd>(x.data(), x.size());
  Eigen::VectorXd ym(1);
  ym[0] = y;
  std::vector<DenseLayer> grad;
  loss_and_gradient(w, xm, ym, &grad);

  struct Coord {
    std::size_t layer;
    bool is_bias;
    Eigen::Index r, c;
  };
  std::vector<Coord> coords;
  const std::size_t last = w.layers.size() - 1;
  for (Eigen::Index r = 0; r < w.layers[last].weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.layers[last].weight.cols(); ++c) coords.push_back({last, false, r, c});
    coords.push_back({last, true, r, 0});
  }
  for (int k = 0; k < sampled; ++k) {
    const std::size_t l = rng() % last;
    const bool is_bias = u(rng) < 0.2;
    const auto& layer = w.layers[l];
    coords.push_back({l, is_bias, static_cast<Eigen::Index>(rng() % layer.weight.rows()),
                      is_bias ? 0 : static_cast<Eigen::Index>(rng() % layer.weight.cols())});
  }

  auto loss_at = [&](const MLPWeights& ww) { return nll_loss(forward(ww, x), y); };
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (const auto& k : coords) {
    MLPWeights plus = w, minus = w;
    double& vp = k.is_bias ? plus.layers[k.layer].bias[k.r] : plus.layers[k.layer].weight(k.r, k.c);
    double& vm = k.is_bias ? minus.layers[k.layer].bias[k.r] : minus.layers[k.layer].weight(k.r, k.c);
    vp += step;
    vm -= step;
    const double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
    const double analytic =
        k.is_bias ? grad[k.layer].bias[k.r] : grad[k.layer].weight(k.r, k.c);
    diff2 += (numeric - analytic) * (numeric - analytic);
    a2 += analytic * analytic;
    n2 += numeric * numeric;
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  return {std::sqrt(diff2) / denom, coords.size()};
}

}  // namespace test_oracles

#endif  // AAUPOWER_TESTS_GRAD_CHECK_HPP
