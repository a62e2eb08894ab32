#include <doctest.h>

#include <cmath>
#include <random>

#include "aaupower/error.hpp"
#include "aaupower/power_model.hpp"
#include "oracles.hpp"

using namespace aaupower;

namespace {

AAUState zero_load(const AnalyticalParams& p, double m_active) {
  AAUState s;
  s.carriers.assign(p.num_carriers(), CarrierState{true, 0.0, 0.08});
  s.m_active = m_active;
  return s;
}

}  // namespace

TEST_CASE("transmit power is linear in load and zero when shut down") {
  CHECK(transmit_power({true, 0.5, 0.08}) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(transmit_power({false, 0.5, 0.08}) == 0.0);
  CHECK(transmit_power({true, 0.0, 0.08}) == 0.0);
}

TEST_CASE("instantaneous power with the fitted reference parameters") {
  const auto p = reference_params();
  auto s = zero_load(p, 64);

  SUBCASE("dormant keeps only baseline circuitry") {
    s.dormant = true;
    CHECK(instantaneous_power(p, s) == doctest::Approx(0.22).epsilon(1e-12));
  }
  SUBCASE("all carriers off") {
    for (auto& c : s.carriers) c.active = false;
    CHECK(instantaneous_power(p, s) == doctest::Approx(0.38).epsilon(1e-12));
  }
  SUBCASE("fully active at zero load") {
    CHECK(instantaneous_power(p, s) == doctest::Approx(0.71792).epsilon(1e-12));
  }
  SUBCASE("symbol shutdown drops both PA terms") {
    s.symbol_shutdown = true;
    CHECK(instantaneous_power(p, s) == doctest::Approx(0.47408).epsilon(1e-12));
  }
  SUBCASE("channel shutdown to 32 MCPAs") {
    s.m_active = 32;
    CHECK(instantaneous_power(p, s) == doctest::Approx(0.59600).epsilon(1e-12));
  }
  SUBCASE("one loaded carrier") {
    s.carriers[0].prb_load = 0.5;
    CHECK(instantaneous_power(p, s) == doctest::Approx(0.81792).epsilon(1e-12));
  }
  SUBCASE("topology mismatch is rejected") {
    s.carriers.pop_back();
    CHECK_THROWS_AS(instantaneous_power(p, s), InvalidInput);
  }
  SUBCASE("m_active above the available chains is rejected") {
    s.m_active = 65;
    CHECK_THROWS_AS(instantaneous_power(p, s), InvalidInput);
  }
}

TEST_CASE("hourly energy is the time-weighted mixture") {
  const auto p = reference_params();
  auto dormant = zero_load(p, 64);
  dormant.dormant = true;
  auto off = zero_load(p, 64);
  for (auto& c : off.carriers) c.active = false;

  CHECK(hourly_energy(p, {{{dormant, 1.0}}}) == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(hourly_energy(p, {{{dormant, 0.5}, {off, 0.5}}}) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(hourly_energy(p, {{{zero_load(p, 64), 1.0}}}) == doctest::Approx(0.71792).epsilon(1e-12));
  CHECK_THROWS_AS(hourly_energy(p, {{{dormant, 0.5}, {off, 0.4}}}), InvalidInput);
  CHECK_THROWS_AS(hourly_energy(p, {{{dormant, -0.5}, {off, 1.5}}}), InvalidInput);
}

TEST_CASE("savings relative to zero-load full activity") {
  const auto p = reference_params();
  auto s = zero_load(p, 64);
  s.symbol_shutdown = true;
  CHECK(savings_fraction(p, s) == doctest::Approx(1.0 - 0.47408 / 0.71792).epsilon(1e-12));
  CHECK(savings_fraction(p, s) == doctest::Approx(0.3397).epsilon(1e-3));

  s.symbol_shutdown = false;
  for (auto& c : s.carriers) c.active = false;
  CHECK(savings_fraction(p, s) == doctest::Approx(0.4707).epsilon(1e-3));

  s.dormant = true;
  CHECK(savings_fraction(p, s) == doctest::Approx(1.0 - 0.22 / 0.71792).epsilon(1e-12));

  AnalyticalParams zero = p;
  zero.p0 = zero.p_bb = zero.d_pa = 0.0;
  zero.d_tran = {0.0};
  CHECK_THROWS_AS(savings_fraction(zero, s), InvalidInput);
}

TEST_CASE("legacy linear comparator") {
  CHECK(legacy_linear_model(0.7, 2.5, 0.0) == doctest::Approx(0.7));
  CHECK(legacy_linear_model(0.7, 2.5, 0.1) == doctest::Approx(0.95));
  CHECK(legacy_linear_model(0.0, 1.0, 0.2) == doctest::Approx(0.2));
}

TEST_CASE("parameter invariants") {
  auto p = reference_params();
  CHECK_NOTHROW(p.validate());
  SUBCASE("eta above one") {
    p.eta = 1.5;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
  }
  SUBCASE("negative power") {
    p.d_pa = -1e-3;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
  }
  SUBCASE("carrier mapped to a missing transceiver") {
    p.carrier_map = {0, 1};
    CHECK_THROWS_AS(p.validate(), InvalidInput);
  }
  SUBCASE("more transceivers than carriers") {
    p.carrier_map = {0};
    p.d_tran = {1e-3, 1e-3};
    p.m_available = {64, 64};
    CHECK_THROWS_AS(p.validate(), InvalidInput);
  }
}

TEST_CASE("params JSON uses the documented field names") {
  const auto p = reference_params();
  const nlohmann::json j = p;
  for (const char* f : {"p0", "p_bb", "d_tran", "d_pa", "eta", "m_available", "carrier_map"}) {
    CHECK(j.contains(f));
  }
  CHECK(j.size() == 7);
  CHECK(j.get<AnalyticalParams>() == p);

  auto missing = j;
  missing.erase("eta");
  CHECK_THROWS_AS(missing.get<AnalyticalParams>(), SchemaError);
  auto extra = j;
  extra["gain"] = 1.0;
  CHECK_THROWS_AS(extra.get<AnalyticalParams>(), SchemaError);
}

TEST_CASE("properties over random states") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto p = reference_params();

  SUBCASE("monotone in PRB load") {
    for (int trial = 0; trial < 500; ++trial) {
      auto s = test_oracles::random_state(p, rng);
      const double before = instantaneous_power(p, s);
      auto& c = s.carriers[trial % 2];
      c.prb_load = std::min(1.0, c.prb_load + u(rng) * (1.0 - c.prb_load));
      CHECK(instantaneous_power(p, s) >= before);
    }
  }

  SUBCASE("mode ordering at zero load") {
    auto full = zero_load(p, 64);
    auto symbol = full;
    symbol.symbol_shutdown = true;
    auto off = full;
    for (auto& c : off.carriers) c.active = false;
    auto dormant = off;
    dormant.dormant = true;
    CHECK(instantaneous_power(p, dormant) < instantaneous_power(p, off));
    CHECK(instantaneous_power(p, off) < instantaneous_power(p, symbol));
    CHECK(instantaneous_power(p, symbol) < instantaneous_power(p, full));
  }

  SUBCASE("switching off one of two carriers on a shared transceiver saves nothing at zero load") {
    auto both = zero_load(p, 64);
    auto one = both;
    one.carriers[1].active = false;
    CHECK(instantaneous_power(p, one) == instantaneous_power(p, both));
  }

  SUBCASE("affine in m_active with slope d_pa") {
    for (int trial = 0; trial < 200; ++trial) {
      auto s = test_oracles::random_state(p, rng);
      s.dormant = false;
      s.symbol_shutdown = false;
      s.carriers[0].active = true;
      const double m1 = 64 * u(rng), m2 = 64 * u(rng);
      auto a = s, b = s;
      a.m_active = m1;
      b.m_active = m2;
      CHECK(instantaneous_power(p, a) - instantaneous_power(p, b) ==
            doctest::Approx((m1 - m2) * p.d_pa).epsilon(1e-9).scale(1.0));
    }
  }

  SUBCASE("hourly energy stays within its segment powers") {
    for (int trial = 0; trial < 200; ++trial) {
      HourlyActivity act;
      double lo = 1e9, hi = -1e9, total = 0.0;
      const int n = 1 + trial % 4;
      for (int i = 0; i < n; ++i) {
        auto s = test_oracles::random_state(p, rng);
        const double w = u(rng) + 1e-3;
        total += w;
        act.segments.push_back({s, w});
        lo = std::min(lo, instantaneous_power(p, s));
        hi = std::max(hi, instantaneous_power(p, s));
      }
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < act.segments.size(); ++i) {
        act.segments[i].fraction /= total;
        acc += act.segments[i].fraction;
      }
      act.segments.back().fraction = 1.0 - acc;
      const double e = hourly_energy(p, act);
      CHECK(e >= lo - 1e-12);
      CHECK(e <= hi + 1e-12);
    }
  }
}

TEST_CASE("brute-force equivalence with a term-by-term oracle for up to 3 carriers") {
  for (const auto& p : test_oracles::small_topologies()) {
    const auto states = test_oracles::enumerate_states(p);
    for (const auto& s : states) {
      CHECK(instantaneous_power(p, s) == doctest::Approx(test_oracles::term_sum_power(p, s)).epsilon(1e-13));
    }
  }
}
