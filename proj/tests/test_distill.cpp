#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "aaupower/distill.hpp"
#include "aaupower/error.hpp"

using namespace aaupower;

namespace {

std::vector<double> model_targets(const AnalyticalParams& p, const FitGrid& grid) {
  std::vector<double> y;
  for (const auto& row : grid.rows) y.push_back(instantaneous_power(p, row.state));
  return y;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

void check_close(const AnalyticalParams& got, const AnalyticalParams& want, double tol) {
  CHECK(rel(got.p0, want.p0) < tol);
  CHECK(rel(got.p_bb, want.p_bb) < tol);
  for (std::size_t t = 0; t < want.d_tran.size(); ++t) CHECK(rel(got.d_tran[t], want.d_tran[t]) < tol);
  CHECK(rel(got.d_pa, want.d_pa) < tol);
  CHECK(rel(got.eta, want.eta) < tol);
}

}  // namespace

TEST_CASE("grid construction") {
  const auto catalog = default_catalog();
  const auto& popular = find_type(catalog, 0);

  SUBCASE("size matches an enumeration of load levels and modes") {
    const auto grid = build_grid(popular, 5);
    // Independent count: every (load0, load1) pair, then dormant, all off,
    // and for each non-empty carrier subset three MCPA levels plus symbol.
    std::size_t count = 0;
    for (int l0 = 0; l0 < 5; ++l0) {
      for (int l1 = 0; l1 < 5; ++l1) {
        count += 2;
        for (int on0 = 0; on0 < 2; ++on0) {
          for (int on1 = 0; on1 < 2; ++on1) {
            if (on0 || on1) count += 3 + 1;
          }
        }
      }
    }
    CHECK(grid.size() == count);
    CHECK(count == 350);
  }
  SUBCASE("identifiability set") {
    const auto grid = build_grid(popular, 5);
    const auto has = [&](auto pred) {
      return std::any_of(grid.rows.begin(), grid.rows.end(), [&](const GridRow& r) { return pred(r.state); });
    };
    CHECK(has([](const AAUState& s) { return s.dormant; }));
    CHECK(has([](const AAUState& s) { return !s.dormant && !s.any_carrier_active(); }));
    CHECK(has([](const AAUState& s) { return s.symbol_shutdown; }));
    CHECK(has([](const AAUState& s) { return s.any_carrier_active() && !s.symbol_shutdown && s.m_active == 64; }));
    CHECK(has([](const AAUState& s) { return s.any_carrier_active() && !s.symbol_shutdown && s.m_active == 32; }));
    CHECK_NOTHROW(check_identifiability(popular.params, grid.states()));
  }
  SUBCASE("deterministic and consistent with its telemetry templates") {
    const auto a = build_grid(popular, 4);
    const auto b = build_grid(popular, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.rows[i].record == b.rows[i].record);
      CHECK(check_record(a.rows[i].record, catalog).empty());
    }
  }
  SUBCASE("large types share the load level across carriers") {
    const auto& six = *std::find_if(catalog.begin(), catalog.end(),
                                    [](const AAUCatalogEntry& e) { return e.carriers.size() == 6; });
    const auto grid = build_grid(six, 3);
    CHECK(grid.size() == 3u * (2u + 4u * 63u));
  }
  SUBCASE("invalid requests") {
    CHECK_THROWS_AS(build_grid(popular, 2), InvalidInput);
    auto empty = popular;
    empty.max_carriers = 0;
    CHECK_THROWS_AS(build_grid(empty, 5), InvalidInput);
  }
}

TEST_CASE("linear reparameterization reproduces the model") {
  const auto catalog = default_catalog();
  for (int type_id : {0, 2, 5, 8}) {
    const auto& type = find_type(catalog, type_id);
    const auto grid = build_grid(type, 3);
    const auto states = grid.states();
    const Eigen::VectorXd pred = design_matrix(type.params, states) * to_linear(type.params);
    for (std::size_t i = 0; i < states.size(); ++i) {
      CHECK(pred[i] == doctest::Approx(instantaneous_power(type.params, states[i])).epsilon(1e-13));
    }
    const auto back = from_linear(type.params, to_linear(type.params));
    CHECK(back.eta == doctest::Approx(type.params.eta).epsilon(1e-15));
  }
}

TEST_CASE("fit on noiseless targets") {
  const auto catalog = default_catalog();
  for (int type_id : {0, 2, 4, 7}) {
    const auto& type = find_type(catalog, type_id);
    const auto grid = build_grid(type, 5);
    const auto states = grid.states();
    const auto y = model_targets(type.params, grid);
    const auto init = initial_guess(type.params, states, y);
    const auto fit = fit_params(y, states, init);
    CHECK(fit.converged);
    check_close(fit.params, type.params, 1e-9);

    const auto oracle = closed_form_check(states, y, type.params);
    check_close(fit.params, oracle, 1e-6);

    for (std::size_t k = 1; k < fit.residual_history.size(); ++k) {
      CHECK(fit.residual_history[k] <= fit.residual_history[k - 1]);
    }
  }
}

TEST_CASE("closed form reproduces the published parameters") {
  const auto catalog = default_catalog();
  const auto& popular = find_type(catalog, 0);
  const auto grid = build_grid(popular, 5);
  const auto p = closed_form_check(grid.states(), model_targets(reference_params(), grid), popular.params);
  CHECK(p.p0 == doctest::Approx(0.22).epsilon(1e-9));
  CHECK(p.p_bb == doctest::Approx(0.16).epsilon(1e-9));
  CHECK(p.d_tran[0] == doctest::Approx(1.47e-3).epsilon(1e-9));
  CHECK(p.d_pa == doctest::Approx(3.81e-3).epsilon(1e-9));
  CHECK(p.eta == doctest::Approx(0.4).epsilon(1e-9));

  const std::vector<double> zeros(grid.size(), 0.0);
  CHECK_THROWS_AS(closed_form_check(grid.states(), zeros, popular.params), SingularSystem);
}

TEST_CASE("noisy targets") {
  const auto catalog = default_catalog();
  const auto& popular = find_type(catalog, 0);
  const auto grid = build_grid(popular, 5);
  const auto states = grid.states();
  const auto clean = model_targets(popular.params, grid);
  double mean = 0.0;
  for (double v : clean) mean += v / static_cast<double>(clean.size());

  std::mt19937_64 rng(31);
  std::normal_distribution<double> z(0.0, 0.01 * mean);
  auto y = clean;
  for (auto& v : y) v += z(rng);
  const auto fit = fit_params(y, states, initial_guess(popular.params, states, y));
  check_close(fit.params, popular.params, 0.05);
  for (std::size_t k = 0; k < fit.std_errors.size(); ++k) CHECK(fit.std_errors[k] > 0.0);
  for (std::size_t k = 1; k < fit.residual_history.size(); ++k) {
    CHECK(fit.residual_history[k] <= fit.residual_history[k - 1]);
  }
  CHECK(fit.params.eta <= 1.0);
}

TEST_CASE("projection keeps parameters feasible") {
  const auto catalog = default_catalog();
  auto truth = find_type(catalog, 0).params;
  truth.d_pa = 0.0;
  const auto grid = build_grid(find_type(catalog, 0), 4);
  const auto states = grid.states();
  auto y = model_targets(truth, grid);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 0.01);
  for (auto& v : y) v += z(rng);
  auto init = truth;
  init.eta = 0.3;
  const auto fit = fit_params(y, states, init);
  CHECK_NOTHROW(fit.params.validate());
  CHECK(fit.params.d_pa >= 0.0);
}

TEST_CASE("rank deficiency names the jointly identifiable parameters") {
  const auto catalog = default_catalog();
  const auto& popular = find_type(catalog, 0);
  const auto grid = build_grid(popular, 5);
  std::vector<AAUState> states;
  std::vector<double> y;
  for (const auto& row : grid.rows) {
    if (row.state.dormant) continue;
    states.push_back(row.state);
    y.push_back(instantaneous_power(popular.params, row.state));
  }
  CHECK_THROWS_WITH_AS(fit_params(y, states, popular.params), doctest::Contains("(p0, p_bb)"),
                       SingularSystem);
  CHECK_THROWS_WITH_AS(closed_form_check(states, y, popular.params), doctest::Contains("(p0, p_bb)"),
                       SingularSystem);
}

TEST_CASE("fit options and non-convergence") {
  const auto catalog = default_catalog();
  const auto& popular = find_type(catalog, 0);
  const auto grid = build_grid(popular, 5);
  const auto states = grid.states();
  auto y = model_targets(popular.params, grid);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 0.01);
  for (auto& v : y) v += z(rng);
  auto init = popular.params;
  init.p0 = 5.0;
  FitOptions options;
  options.max_iter = 1;
  options.lambda0 = 1e6;
  CHECK_THROWS_AS(fit_params(y, states, init, options), ConvergenceError);

  auto bad = popular.params;
  bad.eta = 0.0;
  CHECK_THROWS_AS(fit_params(y, states, bad), InvalidInput);
}

TEST_CASE("fit result JSON") {
  const auto catalog = default_catalog();
  const auto& popular = find_type(catalog, 0);
  const auto grid = build_grid(popular, 3);
  const auto y = model_targets(popular.params, grid);
  const auto fit = fit_params(y, grid.states(), initial_guess(popular.params, grid.states(), y));
  const nlohmann::json j = fit;
  CHECK(j.contains("residual_history"));
  CHECK(j["std_errors"].contains("eta"));
  const auto back = j.get<FitResult>();
  CHECK(back.params == fit.params);
  CHECK(back.residual_history == fit.residual_history);
  CHECK(back.iterations == fit.iterations);
}
