#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "aaupower/error.hpp"
#include "aaupower/estimator.hpp"
#include "grad_check.hpp"

using namespace aaupower;

TEST_CASE("weight initialization") {
  const auto a = init_weights(1);
  const auto b = init_weights(1);
  const auto c = init_weights(2);
  REQUIRE(a.layers.size() == 3);
  CHECK(a.layers[0].weight.rows() == 100);
  CHECK(a.layers[0].weight.cols() == 85);
  CHECK(a.layers[1].weight.rows() == 50);
  CHECK(a.layers[1].weight.cols() == 100);
  CHECK(a.layers[2].weight.rows() == 2);
  CHECK(a.layers[2].weight.cols() == 50);
  CHECK(a.layers[2].bias.size() == 2);
  CHECK(a.num_parameters() == 85 * 100 + 100 + 100 * 50 + 50 + 50 * 2 + 2);
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(a.layers[l].weight == b.layers[l].weight);
    CHECK(a.layers[l].weight != c.layers[l].weight);
    const double bound = std::sqrt(6.0 / a.layer_sizes[l]);
    CHECK(a.layers[l].weight.cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("forward pass") {
  auto w = init_weights(3);
  for (auto& l : w.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  std::vector<double> x(85, 0.7);
  const auto p = forward(w, x);
  CHECK(p.mean == 0.0);
  CHECK(p.std == doctest::Approx(std::log(2.0) + 1e-6).epsilon(1e-12));
  CHECK(p.std == doctest::Approx(0.693148).epsilon(1e-6));

  std::vector<double> short_x(84, 0.0);
  CHECK_THROWS_AS(forward(w, short_x), InvalidInput);

  SUBCASE("std stays positive even for extreme raw outputs") {
    w.layers[2].bias[1] = -1e4;
    CHECK(forward(w, x).std > 0.0);
    w.layers[2].bias[1] = 1e4;
    CHECK(std::isfinite(forward(w, x).std));
  }
  SUBCASE("batched prediction agrees with single prediction") {
    const auto w2 = init_weights(9);
    Eigen::MatrixXd xs = Eigen::MatrixXd::Random(20, 85);
    const auto batch = predict(w2, xs);
    for (int i = 0; i < 20; ++i) {
      std::vector<double> row(xs.row(i).data(), xs.row(i).data() + 85);
      Eigen::VectorXd r = xs.row(i).transpose();
      const auto single = forward(w2, std::span<const double>(r.data(), 85));
      CHECK(batch[i].mean == doctest::Approx(single.mean).epsilon(1e-12));
      CHECK(batch[i].std == doctest::Approx(single.std).epsilon(1e-12));
    }
  }
}

TEST_CASE("Gaussian negative log-likelihood") {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(nll_loss({1.0, 1.0}, 1.0) == doctest::Approx(0.918939).epsilon(1e-6));
  CHECK(nll_loss({1.0, 1.0}, 1.0) == doctest::Approx(half_log_2pi).epsilon(1e-14));
  CHECK(nll_loss({2.0, std::numbers::e}, 2.0) == doctest::Approx(1.918939).epsilon(1e-6));
  CHECK(nll_loss({0.0, 1.0}, 1.0) == doctest::Approx(1.418939).epsilon(1e-6));
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto result = test_oracles::gradient_check_case(rng, 1e-5, 300);
    CHECK(result.relative_error < 1e-4);
  }
}

TEST_CASE("prediction interval") {
  const auto [lo, hi] = predict_interval({1.0, 0.1}, 0.95);
  CHECK(lo == doctest::Approx(0.804004).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.195996).epsilon(1e-6));

  double prev = 0.0;
  for (double c : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    const auto [l, h] = predict_interval({0.0, 1.0}, c);
    CHECK(h - l > prev);
    prev = h - l;
  }
  const auto [cl, ch] = predict_interval({3.0, 1e-12}, 0.95);
  CHECK(cl == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(ch == doctest::Approx(3.0).epsilon(1e-10));
  CHECK_THROWS_AS(predict_interval({0.0, 1.0}, 1.0), InvalidInput);
  CHECK_THROWS_AS(predict_interval({0.0, 1.0}, 0.0), InvalidInput);
}

TEST_CASE("accuracy metrics") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  CHECK(rmse(a, a) == 0.0);
  CHECK(mae(a, a) == 0.0);
  CHECK(mape(a, a) == 0.0);

  const std::vector<double> p1 = {110.0}, y1 = {100.0};
  CHECK(mae(p1, y1) == doctest::Approx(10.0));
  CHECK(mape(p1, y1) == doctest::Approx(10.0));

  const std::vector<double> p2 = {105.0, 95.0}, y2 = {100.0, 100.0};
  CHECK(rmse(p2, y2) == doctest::Approx(5.0));
  CHECK(mape(p2, y2) == doctest::Approx(5.0));

  const std::vector<double> ones = {1.0, 1.0}, with_zero = {1.0, 0.0};
  CHECK_THROWS_WITH_AS(mape(ones, with_zero), doctest::Contains("index 1"), InvalidInput);
  CHECK_THROWS_AS(rmse(p1, y2), InvalidInput);
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), InvalidInput);
}

TEST_CASE("calibration coverage") {
  std::vector<GaussianPrediction> preds = {{1.0, 0.1}, {2.0, 0.2}, {3.0, 0.3}};
  std::vector<double> at_mean = {1.0, 2.0, 3.0};
  CHECK(calibration_coverage(preds, at_mean) == 1.0);
  std::vector<double> three_sigma = {1.3, 2.6, 3.9};
  CHECK(calibration_coverage(preds, three_sigma, 0.95) == 0.0);
  CHECK_THROWS_AS(calibration_coverage({}, {}), InvalidInput);

  // Monte-Carlo: actuals drawn from the predicted distributions.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<GaussianPrediction> many;
  std::vector<double> actual;
  for (int i = 0; i < 10000; ++i) {
    many.push_back({u(rng), 0.01 + 0.1 * u(rng)});
    actual.push_back(many.back().mean + many.back().std * z(rng));
  }
  const double cov = calibration_coverage(many, actual, 0.95);
  CHECK(cov >= 0.92);
  CHECK(cov <= 0.97);
}

namespace {

struct Toy {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Toy toy_set(int n, int dims, std::uint64_t seed, bool linear) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Toy t{Eigen::MatrixXd(n, dims), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dims; ++d) t.x(i, d) = u(rng);
    t.y[i] = linear ? 0.3 + 0.5 * t.x(i, 0) - 0.2 * t.x(i, 1) + 0.1 * t.x(i, 2) : 0.6;
  }
  return t;
}

}  // namespace

TEST_CASE("training on toy problems") {
  TrainConfig cfg;
  cfg.iterations = 1500;
  cfg.batch_size = 64;
  cfg.seed = 5;

  SUBCASE("constant target") {
    // Noiseless NLL keeps shrinking the std, so a small step size keeps the
    // late iterations stable.
    cfg.learning_rate = 1e-4;
    cfg.iterations = 3000;
    const auto toy = toy_set(512, 85, 1, false);
    const auto out = train(init_weights(4), toy.x, toy.y, cfg);
    const auto preds = predict(out.weights, toy.x);
    std::vector<double> err;
    double avg = 0.0;
    for (const auto& p : preds) {
      err.push_back(std::abs(p.mean - 0.6));
      avg += p.mean / static_cast<double>(preds.size());
    }
    std::nth_element(err.begin(), err.begin() + err.size() / 2, err.end());
    CHECK(std::abs(avg - 0.6) < 1e-2);
    CHECK(err[err.size() / 2] < 1e-2);

    // Loss smoothed over non-overlapping 50-iteration windows.
    std::vector<double> windows;
    for (std::size_t s = 0; s + 50 <= out.loss_trace.size(); s += 50) {
      double m = 0.0;
      for (std::size_t k = s; k < s + 50; ++k) m += out.loss_trace[k];
      windows.push_back(m / 50.0);
    }
    const std::size_t tenth = out.loss_trace.size() / 10;
    double first = 0.0, last = 0.0;
    for (std::size_t k = 0; k < tenth; ++k) {
      first += out.loss_trace[k];
      last += out.loss_trace[out.loss_trace.size() - 1 - k];
    }
    CHECK(last <= first);
    for (std::size_t k = 1; k < windows.size(); ++k) CHECK(windows[k] <= windows[k - 1] + 0.05);
  }

  SUBCASE("noiseless linear target") {
    const auto toy = toy_set(1024, 3, 2, true);
    cfg.iterations = 3000;
    const auto out = train(init_weights(4, {3, 32, 16, 2}), toy.x, toy.y, cfg);
    const auto m = means(predict(out.weights, toy.x));
    std::vector<double> y(toy.y.data(), toy.y.data() + toy.y.size());
    CHECK(rmse(m, y) < 1e-2);
  }

  SUBCASE("deterministic for a fixed seed") {
    const auto toy = toy_set(256, 85, 3, true);
    cfg.iterations = 50;
    const auto a = train(init_weights(4), toy.x, toy.y, cfg);
    const auto b = train(init_weights(4), toy.x, toy.y, cfg);
    for (std::size_t l = 0; l < a.weights.layers.size(); ++l) {
      CHECK(a.weights.layers[l].weight == b.weights.layers[l].weight);
      CHECK(a.weights.layers[l].bias == b.weights.layers[l].bias);
    }
    CHECK(a.loss_trace == b.loss_trace);
  }

  SUBCASE("divergence is reported with the iteration") {
    auto toy = toy_set(64, 85, 3, false);
    toy.y[0] = std::numeric_limits<double>::quiet_NaN();
    cfg.batch_size = 64;
    CHECK_THROWS_WITH_AS(train(init_weights(4), toy.x, toy.y, cfg), doctest::Contains("iteration 0"),
                         ConvergenceError);
  }

  SUBCASE("invalid configuration") {
    const auto toy = toy_set(8, 85, 3, false);
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train(init_weights(4), toy.x, toy.y, cfg), InvalidInput);
    cfg.learning_rate = 1e-3;
    CHECK_THROWS_AS(train(init_weights(4), Eigen::MatrixXd(0, 85), Eigen::VectorXd(0), cfg), InvalidInput);
  }
}

TEST_CASE("weights JSON round trip") {
  auto w = init_weights(8);
  w.schema_hash = 1234567890123456789ULL;
  const nlohmann::json j = w;
  CHECK(j["layer_sizes"] == nlohmann::json::array({85, 100, 50, 2}));
  CHECK(j["links"]["std"] == "softplus_plus_1e-6");
  const auto back = j.get<MLPWeights>();
  CHECK(back.schema_hash == w.schema_hash);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    CHECK(back.layers[l].weight == w.layers[l].weight);
    CHECK(back.layers[l].bias == w.layers[l].bias);
  }
  auto bad = j;
  bad["weights"][0].erase(0);
  CHECK_THROWS_AS(bad.get<MLPWeights>(), SchemaError);
}
