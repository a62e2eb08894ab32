#ifndef AAUPOWER_POWER_MODEL_HPP
#define AAUPOWER_POWER_MODEL_HPP

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace aaupower {

// Parameters of the analytical AAU power model. All powers are normalized.
//
//   P = p0 + p_bb
//     + sum_t m_available[t] * d_tran[t]     (transceivers serving >= 1 active carrier)
//     + m_active * d_pa                      (MCPA static power, PAs on)
//     + (1 / eta) * sum_c P_tx,c             (radiated power, PAs on)
struct AnalyticalParams {
  double p0 = 0.0;                 // baseline circuitry, survives deep dormancy
  double p_bb = 0.0;               // baseband processing
  std::vector<double> d_tran;      // per-RF-chain power of each transceiver
  double d_pa = 0.0;               // static power per active MCPA
  double eta = 1.0;                // MCPA + antenna efficiency, (0, 1]
  std::vector<int> m_available;    // RF chains per transceiver
  std::vector<int> carrier_map;    // carrier index -> transceiver index

  std::size_t num_transceivers() const { return d_tran.size(); }
  std::size_t num_carriers() const { return carrier_map.size(); }
  // Largest RF-chain count across transceivers; the "all MCPAs on" level.
  int full_m_active() const;

  // Throws InvalidInput naming the first violated invariant.
  void validate() const;

  bool operator==(const AnalyticalParams&) const = default;
};

// The normalized parameters fitted for the popular 2-carrier, 64-chain AAU.
AnalyticalParams reference_params();

struct CarrierState {
  bool active = true;      // false = carrier shutdown
  double prb_load = 0.0;   // [0, 1]
  double p_max = 0.0;      // normalized max transmit power

  void validate() const;
  bool operator==(const CarrierState&) const = default;
};

struct AAUState {
  std::vector<CarrierState> carriers;
  // Active MCPA count. Real-valued so that a time-averaged channel shutdown
  // level (e.g. half the hour at 32 of 64) is represented exactly.
  double m_active = 0.0;
  bool symbol_shutdown = false;
  bool dormant = false;

  bool any_carrier_active() const;
  bool operator==(const AAUState&) const = default;
};

struct ActivitySegment {
  AAUState state;
  double fraction = 0.0;  // share of the hour spent in `state`

  bool operator==(const ActivitySegment&) const = default;
};

struct HourlyActivity {
  std::vector<ActivitySegment> segments;

  // Throws InvalidInput unless fractions are >= 0 and sum to 1 within 1e-9.
  void validate() const;
  bool operator==(const HourlyActivity&) const = default;
};

inline constexpr double kFractionSumTolerance = 1e-9;

// The fully active, zero-load, no-shutdown state for `params`; the savings
// reference.
AAUState reference_state(const AnalyticalParams& params);

double transmit_power(const CarrierState& carrier);

double instantaneous_power(const AnalyticalParams& params, const AAUState& state);

// Time-weighted mean power over one hour, i.e. normalized watt-hours.
double hourly_energy(const AnalyticalParams& params, const HourlyActivity& activity);

// 1 - P(state) / P(reference_state(params)).
double savings_fraction(const AnalyticalParams& params, const AAUState& state);

// Shutdown-unaware comparator: static_power + slope * total_tx.
double legacy_linear_model(double static_power, double slope, double total_tx);

void to_json(nlohmann::json& j, const AnalyticalParams& p);
void from_json(const nlohmann::json& j, AnalyticalParams& p);

}  // namespace aaupower

#endif  // AAUPOWER_POWER_MODEL_HPP
