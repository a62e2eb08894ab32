#include "aaupower/power_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aaupower/error.hpp"

namespace aaupower {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

int AnalyticalParams::full_m_active() const {
  if (m_available.empty()) return 0;
  return *std::max_element(m_available.begin(), m_available.end());
}

void AnalyticalParams::validate() const {
  require(finite_nonneg(p0), "p0 must be >= 0");
  require(finite_nonneg(p_bb), "p_bb must be >= 0");
  require(finite_nonneg(d_pa), "d_pa must be >= 0");
  require(std::isfinite(eta) && eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  require(!d_tran.empty(), "at least one transceiver is required");
  require(d_tran.size() == m_available.size(),
          "d_tran and m_available must have one entry per transceiver");
  for (double d : d_tran) require(finite_nonneg(d), "d_tran entries must be >= 0");
  for (int m : m_available) require(m >= 1, "m_available entries must be >= 1");
  require(!carrier_map.empty(), "at least one carrier is required");
  require(num_transceivers() <= num_carriers(), "more transceivers than carriers");
  for (int t : carrier_map) {
    require(t >= 0 && static_cast<std::size_t>(t) < num_transceivers(),
            "carrier_map refers to a transceiver that does not exist");
  }
}

AnalyticalParams reference_params() {
  AnalyticalParams p;
  p.p0 = 0.22;
  p.p_bb = 0.16;
  p.d_tran = {1.47e-3};
  p.d_pa = 3.81e-3;
  p.eta = 0.4;
  p.m_available = {64};
  p.carrier_map = {0, 0};
  return p;
}

void CarrierState::validate() const {
  require(std::isfinite(prb_load) && prb_load >= 0.0 && prb_load <= 1.0,
          "prb_load must lie in [0, 1]");
  require(finite_nonneg(p_max), "p_max must be >= 0");
}

bool AAUState::any_carrier_active() const {
  return std::any_of(carriers.begin(), carriers.end(),
                     [](const CarrierState& c) { return c.active; });
}

void HourlyActivity::validate() const {
  require(!segments.empty(), "activity has no segments");
  double sum = 0.0;
  for (const auto& s : segments) {
    require(std::isfinite(s.fraction) && s.fraction >= 0.0, "segment fraction must be >= 0");
    sum += s.fraction;
  }
  require(std::abs(sum - 1.0) <= kFractionSumTolerance,
          "segment fractions must sum to 1 (got " + std::to_string(sum) + ")");
}

AAUState reference_state(const AnalyticalParams& params) {
  AAUState s;
  s.carriers.assign(params.num_carriers(), CarrierState{true, 0.0, 0.0});
  s.m_active = params.full_m_active();
  return s;
}

double transmit_power(const CarrierState& carrier) {
  return carrier.active ? carrier.p_max * carrier.prb_load : 0.0;
}

double instantaneous_power(const AnalyticalParams& params, const AAUState& state) {
  if (state.carriers.size() != params.num_carriers()) {
    throw InvalidInput("state has " + std::to_string(state.carriers.size()) +
                       " carriers, params describe " + std::to_string(params.num_carriers()));
  }
  require(state.m_active >= 0.0 && state.m_active <= params.full_m_active(),
          "m_active outside [0, max m_available]");
  for (const auto& c : state.carriers) c.validate();

  if (state.dormant) return params.p0;

  double power = params.p0 + params.p_bb;
  if (!state.any_carrier_active()) return power;

  // A transceiver stays on while any carrier it serves is on.
  std::vector<bool> transceiver_on(params.num_transceivers(), false);
  for (std::size_t c = 0; c < state.carriers.size(); ++c) {
    if (state.carriers[c].active) transceiver_on[params.carrier_map[c]] = true;
  }
  for (std::size_t t = 0; t < transceiver_on.size(); ++t) {
    if (transceiver_on[t]) power += params.m_available[t] * params.d_tran[t];
  }

  if (!state.symbol_shutdown) {
    double tx = 0.0;
    for (const auto& c : state.carriers) tx += transmit_power(c);
    power += state.m_active * params.d_pa + tx / params.eta;
  }
  return power;
}

double hourly_energy(const AnalyticalParams& params, const HourlyActivity& activity) {
  activity.validate();
  double energy = 0.0;
  for (const auto& seg : activity.segments) {
    energy += seg.fraction * instantaneous_power(params, seg.state);
  }
  return energy;
}

double savings_fraction(const AnalyticalParams& params, const AAUState& state) {
  const double reference = instantaneous_power(params, reference_state(params));
  if (!(reference > 0.0)) throw InvalidInput("reference power is zero; savings undefined");
  return 1.0 - instantaneous_power(params, state) / reference;
}

double legacy_linear_model(double static_power, double slope, double total_tx) {
  return static_power + slope * total_tx;
}

void to_json(nlohmann::json& j, const AnalyticalParams& p) {
  j = nlohmann::json{{"p0", p.p0},
                     {"p_bb", p.p_bb},
                     {"d_tran", p.d_tran},
                     {"d_pa", p.d_pa},
                     {"eta", p.eta},
                     {"m_available", p.m_available},
                     {"carrier_map", p.carrier_map}};
}

void from_json(const nlohmann::json& j, AnalyticalParams& p) {
  static const char* const kFields[] = {"p0",  "p_bb",        "d_tran",     "d_pa",
                                        "eta", "m_available", "carrier_map"};
  if (!j.is_object()) throw SchemaError("AnalyticalParams must be a JSON object");
  for (const char* f : kFields) {
    if (!j.contains(f)) throw SchemaError(std::string("AnalyticalParams missing field '") + f + "'");
  }
  for (const auto& item : j.items()) {
    if (std::find_if(std::begin(kFields), std::end(kFields),
                     [&](const char* f) { return item.key() == f; }) == std::end(kFields)) {
      throw SchemaError("AnalyticalParams has unknown field '" + item.key() + "'");
    }
  }
  try {
    j.at("p0").get_to(p.p0);
    j.at("p_bb").get_to(p.p_bb);
    j.at("d_tran").get_to(p.d_tran);
    j.at("d_pa").get_to(p.d_pa);
    j.at("eta").get_to(p.eta);
    j.at("m_available").get_to(p.m_available);
    j.at("carrier_map").get_to(p.carrier_map);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("AnalyticalParams: ") + e.what());
  }
  p.validate();
}

}  // namespace aaupower
