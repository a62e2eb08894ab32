#ifndef AAUPOWER_TELEMETRY_HPP
#define AAUPOWER_TELEMETRY_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aaupower/power_model.hpp"

namespace aaupower {

inline constexpr int kNumAAUTypes = 25;
inline constexpr int kMaxCarriers = 6;

struct CarrierConfig {
  double frequency_mhz = 0.0;
  double bandwidth_mhz = 0.0;
  double p_max = 0.0;  // normalized
  int transceiver_index = 0;

  bool operator==(const CarrierConfig&) const = default;
};

struct AAUCatalogEntry {
  int type_id = 0;  // [0, 24]
  int num_transceivers = 1;
  std::vector<int> m_available;
  int max_carriers = 1;
  // Ground-truth model for synthetic generation. Its carrier_map fixes how
  // many carriers an AAU of this type deploys.
  AnalyticalParams params;
  // Deployed carrier configurations, one per params carrier.
  std::vector<CarrierConfig> carriers;
  // A carrier whose hourly PRB load falls below this level gets shut down for
  // part of the hour in synthetic telemetry.
  double carrier_shutdown_threshold = 0.3;

  int full_m_active() const { return params.full_m_active(); }
  void validate() const;
  bool operator==(const AAUCatalogEntry&) const = default;
};

using Catalog = std::vector<AAUCatalogEntry>;

// Throws InvalidInput on duplicate or unknown type ids.
const AAUCatalogEntry& find_type(const Catalog& catalog, int type_id);
void validate_catalog(const Catalog& catalog);

// 25 synthetic AAU types spanning 1-6 carriers. Type 0 is the popular
// 2-carrier, 64-chain unit carrying reference_params().
Catalog default_catalog();

struct CarrierRecord {
  CarrierConfig config;
  double prb_load = 0.0;
  // Fraction of the hour the carrier is shut down (outside dormancy).
  double off_fraction = 0.0;

  bool operator==(const CarrierRecord&) const = default;
};

// One hour of telemetry for one AAU.
//
// Fraction semantics:
//   dormancy_fraction   share of the hour in deep dormancy.
//   carrier off_fraction share of the hour each carrier is shut down; shutdown
//                        periods are nested, so the carrier with the largest
//                        value is off whenever any other one is.
//   symbol_fraction     share of the carrier-active time (>= 1 carrier on,
//                        not dormant) spent with PAs muted.
//   channel_fraction    time-averaged share of MCPAs switched off while PAs
//                        are on (0.5 = halved, 0.75 = quartered).
struct HourlyRecord {
  std::int64_t timestamp = 0;  // hour index
  int aau_id = 0;
  int type_id = 0;
  std::vector<CarrierRecord> carriers;
  double channel_fraction = 0.0;
  double symbol_fraction = 0.0;
  double dormancy_fraction = 0.0;
  double measured_power = 0.0;

  bool operator==(const HourlyRecord&) const = default;
};

struct Dataset {
  std::vector<HourlyRecord> records;
  Catalog catalog;

  bool operator==(const Dataset&) const = default;
};

// Every violated invariant, empty if the record is valid.
std::vector<std::string> check_record(const HourlyRecord& record, const Catalog& catalog);

// Returns `record` unchanged, or throws InvalidInput listing every violation.
const HourlyRecord& validate_record(const HourlyRecord& record, const Catalog& catalog);

void validate_dataset(const Dataset& dataset);

// Expands the hour into instantaneous states. Mode nesting: dormancy, then
// carrier shutdown, then symbol shutdown inside the carrier-active remainder.
HourlyActivity activity_from_record(const HourlyRecord& record, const AAUCatalogEntry& type);

Dataset generate_synthetic_dataset(const Catalog& catalog, int num_aaus, int num_days,
                                   std::uint64_t seed, double noise_std);

// Temporal split on day boundaries counted from the earliest timestamp. Days
// past train_days + test_days are dropped.
std::pair<Dataset, Dataset> split_by_days(const Dataset& dataset, int train_days, int test_days);

int days_present(const Dataset& dataset);

inline constexpr const char* kDatasetCsvHeader =
    "timestamp,aau_id,type_id,carrier_idx,freq_mhz,bw_mhz,p_max,prb_load,"
    "carrier_off_frac,channel_off_frac,symbol_off_frac,dormancy_frac,measured_power";

// CSV holds telemetry only; transceiver indices come from the catalog.
void save_dataset_csv(const std::vector<HourlyRecord>& records, const std::filesystem::path& path);
void save_dataset_csv(const std::vector<HourlyRecord>& records, std::ostream& out);
std::vector<HourlyRecord> load_dataset_csv(std::istream& in, const Catalog& catalog);

void save_dataset(const Dataset& dataset, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path, const Catalog& catalog);

void save_catalog(const Catalog& catalog, const std::filesystem::path& path);
Catalog load_catalog(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const CarrierConfig& c);
void from_json(const nlohmann::json& j, CarrierConfig& c);
void to_json(nlohmann::json& j, const AAUCatalogEntry& e);
void from_json(const nlohmann::json& j, AAUCatalogEntry& e);

}  // namespace aaupower

#endif  // AAUPOWER_TELEMETRY_HPP
