#include "aaupower/telemetry.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "aaupower/error.hpp"
#include "aaupower/random.hpp"

namespace aaupower {

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalog

void AAUCatalogEntry::validate() const {
  const std::string id = "type " + std::to_string(type_id) + ": ";
  if (type_id < 0 || type_id >= kNumAAUTypes) throw InvalidInput(id + "type_id outside [0, 24]");
  params.validate();
  if (static_cast<std::size_t>(num_transceivers) != params.num_transceivers() ||
      m_available != params.m_available) {
    throw InvalidInput(id + "topology disagrees with ground-truth params");
  }
  if (max_carriers < 1 || max_carriers > kMaxCarriers) {
    throw InvalidInput(id + "max_carriers outside [1, 6]");
  }
  if (carriers.size() != params.num_carriers()) {
    throw InvalidInput(id + "carrier configs disagree with params carrier_map");
  }
  if (carriers.size() > static_cast<std::size_t>(max_carriers)) {
    throw InvalidInput(id + "carrier count exceeds max_carriers");
  }
  for (std::size_t c = 0; c < carriers.size(); ++c) {
    if (carriers[c].transceiver_index != params.carrier_map[c]) {
      throw InvalidInput(id + "carrier transceiver index disagrees with carrier_map");
    }
  }
  if (!in_unit(carrier_shutdown_threshold)) {
    throw InvalidInput(id + "carrier_shutdown_threshold outside [0, 1]");
  }
}

const AAUCatalogEntry& find_type(const Catalog& catalog, int type_id) {
  auto it = std::find_if(catalog.begin(), catalog.end(),
                         [&](const AAUCatalogEntry& e) { return e.type_id == type_id; });
  if (it == catalog.end()) throw InvalidInput("unknown type_id " + std::to_string(type_id));
  return *it;
}

void validate_catalog(const Catalog& catalog) {
  std::set<int> seen;
  for (const auto& e : catalog) {
    e.validate();
    if (!seen.insert(e.type_id).second) {
      throw InvalidInput("duplicate type_id " + std::to_string(e.type_id));
    }
  }
}

Catalog default_catalog() {
  constexpr std::array<double, kMaxCarriers> kFreq = {3500, 2600, 4900, 2100, 1800, 700};
  constexpr std::array<double, kMaxCarriers> kBandwidth = {100, 60, 100, 20, 20, 10};
  constexpr std::array<int, 3> kChains = {64, 32, 16};

  Catalog catalog;
  catalog.reserve(kNumAAUTypes);

  AAUCatalogEntry popular;
  popular.type_id = 0;
  popular.params = reference_params();
  popular.num_transceivers = 1;
  popular.m_available = popular.params.m_available;
  popular.max_carriers = 2;
  popular.carriers = {{3500, 100, 0.08, 0}, {3500, 60, 0.08, 0}};
  popular.carrier_shutdown_threshold = 0.3;
  catalog.push_back(popular);

  for (int k = 1; k < kNumAAUTypes; ++k) {
    AAUCatalogEntry e;
    e.type_id = k;
    const int num_carriers = 1 + k % kMaxCarriers;
    const int num_tx = (num_carriers >= 2 && k % 2 == 0) ? 2 : 1;
    e.num_transceivers = num_tx;
    e.max_carriers = num_carriers;
    for (int t = 0; t < num_tx; ++t) e.m_available.push_back(kChains[(k + t) % 3]);

    AnalyticalParams& p = e.params;
    p.p0 = 0.15 + 0.01 * (k % 8);
    p.p_bb = 0.10 + 0.015 * (k % 5);
    p.m_available = e.m_available;
    for (int t = 0; t < num_tx; ++t) {
      p.d_tran.push_back((1.2 + 0.1 * (k % 5)) * 1e-3 * 64.0 / e.m_available[t]);
    }
    p.d_pa = (3.2 + 0.15 * (k % 6)) * 1e-3 * 64.0 / p.full_m_active();
    p.eta = 0.30 + 0.04 * (k % 5);
    for (int c = 0; c < num_carriers; ++c) {
      p.carrier_map.push_back(c % num_tx);
      e.carriers.push_back({kFreq[c], kBandwidth[c], 0.04 + 0.01 * ((k + c) % 5), c % num_tx});
    }
    e.carrier_shutdown_threshold = 0.2 + 0.05 * (k % 3);
    catalog.push_back(std::move(e));
  }
  return catalog;
}

// ---------------------------------------------------------------------------
// Records

std::vector<std::string> check_record(const HourlyRecord& r, const Catalog& catalog) {
  std::vector<std::string> errors;
  auto it = std::find_if(catalog.begin(), catalog.end(),
                         [&](const AAUCatalogEntry& e) { return e.type_id == r.type_id; });
  const AAUCatalogEntry* type = it == catalog.end() ? nullptr : &*it;
  if (!type) errors.push_back("unknown type_id " + std::to_string(r.type_id));

  if (r.carriers.empty()) errors.push_back("record has no carriers");
  if (type && r.carriers.size() > static_cast<std::size_t>(type->max_carriers)) {
    errors.push_back("carrier count exceeds max (" + std::to_string(r.carriers.size()) + " > " +
                     std::to_string(type->max_carriers) + ")");
  }

  auto fraction = [&](double v, const std::string& name) {
    if (!in_unit(v)) errors.push_back("fraction out of range: " + name);
  };
  fraction(r.channel_fraction, "channel_off_frac");
  fraction(r.symbol_fraction, "symbol_off_frac");
  fraction(r.dormancy_fraction, "dormancy_frac");

  for (std::size_t c = 0; c < r.carriers.size(); ++c) {
    const auto& cr = r.carriers[c];
    const std::string tag = "[carrier " + std::to_string(c) + "]";
    fraction(cr.prb_load, "prb_load" + tag);
    fraction(cr.off_fraction, "carrier_off_frac" + tag);
    if (!(cr.config.frequency_mhz > 0.0)) errors.push_back("frequency must be > 0" + tag);
    if (!(cr.config.bandwidth_mhz > 0.0)) errors.push_back("bandwidth must be > 0" + tag);
    if (!(cr.config.p_max >= 0.0)) errors.push_back("p_max must be >= 0" + tag);
    if (type && (cr.config.transceiver_index < 0 ||
                 cr.config.transceiver_index >= type->num_transceivers)) {
      errors.push_back("transceiver index out of range" + tag);
    }
    if (in_unit(cr.off_fraction) && in_unit(r.dormancy_fraction) &&
        cr.off_fraction + r.dormancy_fraction > 1.0 + kFractionSumTolerance) {
      errors.push_back("inconsistent fractions: dormancy + carrier shutdown > 1" + tag);
    }
  }
  if (!(std::isfinite(r.measured_power) && r.measured_power >= 0.0)) {
    errors.push_back("measured_power must be >= 0");
  }
  return errors;
}

const HourlyRecord& validate_record(const HourlyRecord& record, const Catalog& catalog) {
  auto errors = check_record(record, catalog);
  if (!errors.empty()) {
    throw InvalidInput("invalid record (aau " + std::to_string(record.aau_id) + ", t=" +
                       std::to_string(record.timestamp) + "): " + join(errors, "; "));
  }
  return record;
}

void validate_dataset(const Dataset& dataset) {
  validate_catalog(dataset.catalog);
  std::map<int, std::int64_t> last_seen;
  for (const auto& r : dataset.records) {
    validate_record(r, dataset.catalog);
    auto [it, inserted] = last_seen.try_emplace(r.aau_id, r.timestamp);
    if (!inserted) {
      if (r.timestamp < it->second) {
        throw InvalidInput("timestamps decrease for aau " + std::to_string(r.aau_id));
      }
      it->second = r.timestamp;
    }
  }
}

HourlyActivity activity_from_record(const HourlyRecord& record, const AAUCatalogEntry& type) {
  const std::size_t n = record.carriers.size();
  const double dormancy = record.dormancy_fraction;
  for (const auto& c : record.carriers) {
    if (c.off_fraction + dormancy > 1.0 + kFractionSumTolerance) {
      throw InvalidInput("inconsistent fractions: dormancy + carrier shutdown exceed the hour");
    }
  }
  const double full_m = type.full_m_active();

  AAUState base;
  base.carriers.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    base.carriers[c] = {true, record.carriers[c].prb_load, record.carriers[c].config.p_max};
  }
  base.m_active = full_m;

  HourlyActivity activity;
  if (dormancy > 0.0) {
    AAUState s = base;
    s.dormant = true;
    for (auto& c : s.carriers) c.active = false;
    activity.segments.push_back({s, dormancy});
  }

  // Carrier c is off during the first off_fraction[c] of the awake time, so
  // the distinct off fractions are the breakpoints between carrier sets.
  const double awake = 1.0 - dormancy;
  std::vector<double> cuts = {0.0, awake};
  for (const auto& c : record.carriers) cuts.push_back(std::min(c.off_fraction, awake));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double length = cuts[i + 1] - cuts[i];
    if (length <= 0.0) continue;
    AAUState s = base;
    for (std::size_t c = 0; c < n; ++c) {
      s.carriers[c].active = !(record.carriers[c].off_fraction >= cuts[i + 1]);
    }
    if (!s.any_carrier_active()) {
      activity.segments.push_back({s, length});
      continue;
    }
    const double muted = length * record.symbol_fraction;
    if (muted > 0.0) {
      AAUState m = s;
      m.symbol_shutdown = true;
      activity.segments.push_back({m, muted});
    }
    if (length - muted > 0.0) {
      s.m_active = full_m * (1.0 - record.channel_fraction);
      activity.segments.push_back({s, length - muted});
    }
  }
  activity.validate();
  return activity;
}

// ---------------------------------------------------------------------------
// Synthetic generation

Dataset generate_synthetic_dataset(const Catalog& catalog, int num_aaus, int num_days,
                                   std::uint64_t seed, double noise_std) {
  if (catalog.empty()) throw InvalidInput("catalog is empty");
  if (num_aaus < 1) throw InvalidInput("num_aaus must be >= 1");
  if (num_days < 1) throw InvalidInput("num_days must be >= 1");
  if (!(noise_std >= 0.0)) throw InvalidInput("noise_std must be >= 0");
  validate_catalog(catalog);

  auto rng = make_stream(seed, "generator");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.04);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  // Half of the fleet is the first (popular) catalog type; the other half
  // cycles through the rest.
  auto type_of = [&](int a) -> const AAUCatalogEntry& {
    if (catalog.size() == 1 || a % 2 == 0) return catalog.front();
    return catalog[1 + static_cast<std::size_t>(a / 2) % (catalog.size() - 1)];
  };

  struct Profile {
    double base, amplitude, peak_hour;
  };
  std::vector<Profile> profiles;
  for (int a = 0; a < num_aaus; ++a) {
    profiles.push_back({uniform(0.02, 0.15), uniform(0.3, 0.8), uniform(12.0, 16.0)});
  }

  Dataset ds;
  ds.catalog = catalog;
  ds.records.reserve(static_cast<std::size_t>(num_aaus) * num_days * 24);

  for (std::int64_t t = 0; t < static_cast<std::int64_t>(num_days) * 24; ++t) {
    const int hour = static_cast<int>(t % 24);
    for (int a = 0; a < num_aaus; ++a) {
      const AAUCatalogEntry& type = type_of(a);
      const Profile& prof = profiles[a];
      const double curve =
          0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * (hour - prof.peak_hour) / 24.0));

      HourlyRecord r;
      r.timestamp = t;
      r.aau_id = a;
      r.type_id = type.type_id;

      // Deep dormancy at night, 01:00-06:00.
      if (hour >= 1 && hour < 6 && unit(rng) < 0.85) {
        r.dormancy_fraction = unit(rng) < 0.3 ? 1.0 : uniform(0.4, 1.0);
      }
      const double awake = 1.0 - r.dormancy_fraction;

      double load_sum = 0.0;
      for (std::size_t c = 0; c < type.carriers.size(); ++c) {
        CarrierRecord cr;
        cr.config = type.carriers[c];
        const double scale = 1.0 - 0.12 * static_cast<double>(c);
        cr.prb_load = std::clamp(prof.base + prof.amplitude * curve * scale + jitter(rng), 0.0, 1.0);
        if (cr.prb_load < type.carrier_shutdown_threshold) {
          cr.off_fraction = awake * (unit(rng) < 0.3 ? 1.0 : uniform(0.1, 1.0));
        }
        load_sum += cr.prb_load;
        r.carriers.push_back(cr);
      }
      const double mean_load = load_sum / static_cast<double>(type.carriers.size());

      // Near-idle hours often have every symbol empty.
      r.symbol_fraction = mean_load < 0.1 && unit(rng) < 0.3
                              ? 1.0
                              : std::clamp((1.0 - mean_load) * unit(rng), 0.0, 1.0);
      // MCPA shutdown gets likelier as load drops; the depth is halved or
      // quartered, held for part or all of the hour.
      if (unit(rng) < 0.8 * (1.0 - mean_load)) {
        const double depth = unit(rng) < 0.5 ? 0.5 : 0.75;
        r.channel_fraction = depth * (unit(rng) < 0.3 ? 1.0 : uniform(0.2, 1.0));
      }

      const double truth = hourly_energy(type.params, activity_from_record(r, type));
      r.measured_power = noise_std > 0.0 ? std::max(0.0, truth + noise_std * noise(rng)) : truth;
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Splitting

int days_present(const Dataset& dataset) {
  if (dataset.records.empty()) return 0;
  auto [lo, hi] = std::minmax_element(
      dataset.records.begin(), dataset.records.end(),
      [](const HourlyRecord& a, const HourlyRecord& b) { return a.timestamp < b.timestamp; });
  return static_cast<int>((hi->timestamp - lo->timestamp) / 24 + 1);
}

std::pair<Dataset, Dataset> split_by_days(const Dataset& dataset, int train_days, int test_days) {
  if (train_days < 0 || test_days < 0) throw InvalidInput("day counts must be >= 0");
  const int available = days_present(dataset);
  if (train_days + test_days > available) {
    throw InvalidInput("insufficient days: requested " + std::to_string(train_days + test_days) +
                       ", dataset spans " + std::to_string(available));
  }
  Dataset train{{}, dataset.catalog};
  Dataset test{{}, dataset.catalog};
  if (dataset.records.empty()) return {train, test};

  std::int64_t origin = dataset.records.front().timestamp;
  for (const auto& r : dataset.records) origin = std::min(origin, r.timestamp);
  for (const auto& r : dataset.records) {
    const auto day = (r.timestamp - origin) / 24;
    if (day < train_days) {
      train.records.push_back(r);
    } else if (day < train_days + test_days) {
      test.records.push_back(r);
    }
  }
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::array<const char*, 13> kColumns = {
    "timestamp",        "aau_id",           "type_id",         "carrier_idx",  "freq_mhz",
    "bw_mhz",           "p_max",            "prb_load",        "carrier_off_frac",
    "channel_off_frac", "symbol_off_frac",  "dormancy_frac",   "measured_power"};

enum Column {
  kTimestamp, kAauId, kTypeId, kCarrierIdx, kFreq, kBw, kPmax, kLoad,
  kCarrierOff, kChannelOff, kSymbolOff, kDormancy, kMeasured
};

void write_number(std::ostream& out, double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.write(buf.data(), res.ptr - buf.data());
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line_no, const char* column) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw SchemaError("line " + std::to_string(line_no) + ": malformed " + column + " '" +
                      std::string(text) + "'");
  }
  return value;
}

}  // namespace

void save_dataset_csv(const std::vector<HourlyRecord>& records, std::ostream& out) {
  out << kDatasetCsvHeader << '\n';
  for (const auto& r : records) {
    for (std::size_t c = 0; c < r.carriers.size(); ++c) {
      const auto& cr = r.carriers[c];
      out << r.timestamp << ',' << r.aau_id << ',' << r.type_id << ',' << c << ',';
      for (double v : {cr.config.frequency_mhz, cr.config.bandwidth_mhz, cr.config.p_max,
                       cr.prb_load, cr.off_fraction, r.channel_fraction, r.symbol_fraction,
                       r.dormancy_fraction}) {
        write_number(out, v);
        out << ',';
      }
      write_number(out, r.measured_power);
      out << '\n';
    }
  }
}

void save_dataset_csv(const std::vector<HourlyRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  save_dataset_csv(records, out);
}

std::vector<HourlyRecord> load_dataset_csv(std::istream& in, const Catalog& catalog) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: a valid header is required");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::array<int, kColumns.size()> index{};
  index.fill(-1);
  const auto header = split_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto it = std::find(kColumns.begin(), kColumns.end(), header[i]);
    if (it == kColumns.end()) throw SchemaError("unknown column '" + std::string(header[i]) + "'");
    auto& slot = index[it - kColumns.begin()];
    if (slot >= 0) throw SchemaError("duplicate column '" + std::string(header[i]) + "'");
    slot = static_cast<int>(i);
  }
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    if (index[k] < 0) throw SchemaError(std::string("missing column '") + kColumns[k] + "'");
  }

  std::vector<HourlyRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != kColumns.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(kColumns.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }
    auto num = [&](Column col) { return parse_field<double>(fields[index[col]], line_no, kColumns[col]); };
    auto integer = [&](Column col) {
      return parse_field<std::int64_t>(fields[index[col]], line_no, kColumns[col]);
    };

    const auto timestamp = integer(kTimestamp);
    const int aau_id = static_cast<int>(integer(kAauId));
    const int type_id = static_cast<int>(integer(kTypeId));
    const auto carrier_idx = integer(kCarrierIdx);

    const bool continues = !records.empty() && records.back().timestamp == timestamp &&
                           records.back().aau_id == aau_id;
    if (!continues) {
      if (carrier_idx != 0) {
        throw SchemaError("line " + std::to_string(line_no) + ": record must start at carrier_idx 0");
      }
      HourlyRecord r;
      r.timestamp = timestamp;
      r.aau_id = aau_id;
      r.type_id = type_id;
      r.channel_fraction = num(kChannelOff);
      r.symbol_fraction = num(kSymbolOff);
      r.dormancy_fraction = num(kDormancy);
      r.measured_power = num(kMeasured);
      records.push_back(std::move(r));
    } else {
      const auto& r = records.back();
      if (carrier_idx != static_cast<std::int64_t>(r.carriers.size())) {
        throw SchemaError("line " + std::to_string(line_no) + ": carrier_idx out of sequence");
      }
      if (r.type_id != type_id || r.channel_fraction != num(kChannelOff) ||
          r.symbol_fraction != num(kSymbolOff) || r.dormancy_fraction != num(kDormancy) ||
          r.measured_power != num(kMeasured)) {
        throw SchemaError("line " + std::to_string(line_no) +
                          ": record-level fields differ between carrier rows");
      }
    }

    auto& r = records.back();
    CarrierRecord cr;
    cr.config.frequency_mhz = num(kFreq);
    cr.config.bandwidth_mhz = num(kBw);
    cr.config.p_max = num(kPmax);
    cr.prb_load = num(kLoad);
    cr.off_fraction = num(kCarrierOff);
    const auto& type = find_type(catalog, type_id);
    if (carrier_idx < static_cast<std::int64_t>(type.params.carrier_map.size())) {
      cr.config.transceiver_index = type.params.carrier_map[carrier_idx];
    }
    r.carriers.push_back(cr);
  }
  return records;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& csv_path) {
  save_dataset_csv(dataset.records, csv_path);
}

Dataset load_dataset(const std::filesystem::path& csv_path, const Catalog& catalog) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  Dataset ds{load_dataset_csv(in, catalog), catalog};
  validate_dataset(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const CarrierConfig& c) {
  j = nlohmann::json{{"frequency_mhz", c.frequency_mhz},
                     {"bandwidth_mhz", c.bandwidth_mhz},
                     {"p_max", c.p_max},
                     {"transceiver_index", c.transceiver_index}};
}

void from_json(const nlohmann::json& j, CarrierConfig& c) {
  j.at("frequency_mhz").get_to(c.frequency_mhz);
  j.at("bandwidth_mhz").get_to(c.bandwidth_mhz);
  j.at("p_max").get_to(c.p_max);
  j.at("transceiver_index").get_to(c.transceiver_index);
}

void to_json(nlohmann::json& j, const AAUCatalogEntry& e) {
  j = nlohmann::json{{"type_id", e.type_id},
                     {"num_transceivers", e.num_transceivers},
                     {"m_available", e.m_available},
                     {"max_carriers", e.max_carriers},
                     {"params", e.params},
                     {"carriers", e.carriers},
                     {"carrier_shutdown_threshold", e.carrier_shutdown_threshold}};
}

void from_json(const nlohmann::json& j, AAUCatalogEntry& e) {
  j.at("type_id").get_to(e.type_id);
  j.at("num_transceivers").get_to(e.num_transceivers);
  j.at("m_available").get_to(e.m_available);
  j.at("max_carriers").get_to(e.max_carriers);
  j.at("params").get_to(e.params);
  j.at("carriers").get_to(e.carriers);
  e.carrier_shutdown_threshold = j.value("carrier_shutdown_threshold", 0.3);
}

void save_catalog(const Catalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << nlohmann::json(catalog).dump(2) << '\n';
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Catalog catalog;
  try {
    auto j = nlohmann::json::parse(in);
    if (!j.is_array()) throw SchemaError("catalog must be a JSON array");
    catalog = j.get<Catalog>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("catalog: ") + e.what());
  }
  validate_catalog(catalog);
  return catalog;
}

}  // namespace aaupower
