#include "aaupower/features.hpp"

#include <algorithm>
#include <limits>

#include "aaupower/error.hpp"
#include "aaupower/random.hpp"

namespace aaupower {

const std::vector<std::string>& default_carrier_features() {
  static const std::vector<std::string> names = {
      "freq_mhz",        "bw_mhz",          "p_max",         "prb_load",
      "carrier_off_frac", "channel_off_frac", "symbol_off_frac", "dormancy_frac",
      "transceiver_index", kFeatureConfigured};
  return names;
}

std::uint64_t FeatureSchema::hash() const {
  std::string text = "types=" + std::to_string(num_types) + ";carriers=" + std::to_string(max_carriers);
  for (const auto& f : per_carrier_features) text += ";" + f;
  return fnv1a64(text);
}

void FeatureSchema::validate() const {
  if (num_types < 1 || max_carriers < 1 || per_carrier_features.empty()) {
    throw InvalidInput("feature schema dimensions must be positive");
  }
  const auto& known = default_carrier_features();
  for (const auto& f : per_carrier_features) {
    if (std::find(known.begin(), known.end(), f) == known.end()) {
      throw InvalidInput("unknown per-carrier feature '" + f + "'");
    }
  }
}

double raw_carrier_feature(const HourlyRecord& r, std::size_t carrier, const std::string& name) {
  const CarrierRecord& c = r.carriers.at(carrier);
  if (name == "freq_mhz") return c.config.frequency_mhz;
  if (name == "bw_mhz") return c.config.bandwidth_mhz;
  if (name == "p_max") return c.config.p_max;
  if (name == "prb_load") return c.prb_load;
  if (name == "carrier_off_frac") return c.off_fraction;
  if (name == "channel_off_frac") return r.channel_fraction;
  if (name == "symbol_off_frac") return r.symbol_fraction;
  if (name == "dormancy_frac") return r.dormancy_fraction;
  if (name == "transceiver_index") return c.config.transceiver_index;
  if (name == kFeatureConfigured) return 1.0;
  throw InvalidInput("unknown per-carrier feature '" + name + "'");
}

Normalizer::Normalizer(std::map<std::string, std::pair<double, double>> ranges)
    : ranges_(std::move(ranges)) {
  for (const auto& [name, r] : ranges_) {
    if (!(r.second >= r.first)) throw InvalidInput("normalizer range for " + name + " has max < min");
  }
}

const std::pair<double, double>& Normalizer::range(const std::string& feature) const {
  auto it = ranges_.find(feature);
  if (it == ranges_.end()) throw InvalidInput("normalizer has no range for '" + feature + "'");
  return it->second;
}

double Normalizer::transform(const std::string& feature, double value) const {
  const auto& [lo, hi] = range(feature);
  if (hi == lo) return 0.0;
  return (value - lo) / (hi - lo);
}

double Normalizer::inverse(const std::string& feature, double scaled) const {
  const auto& [lo, hi] = range(feature);
  return lo + scaled * (hi - lo);
}

Normalizer fit_normalizer(std::span<const HourlyRecord> train, const FeatureSchema& schema) {
  schema.validate();
  if (train.empty()) throw InvalidInput("cannot fit a normalizer on an empty training set");
  std::map<std::string, std::pair<double, double>> ranges;
  for (const auto& name : schema.per_carrier_features) {
    if (name == kFeatureConfigured) continue;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& r : train) {
      for (std::size_t c = 0; c < r.carriers.size(); ++c) {
        const double v = raw_carrier_feature(r, c, name);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    ranges.emplace(name, std::make_pair(lo, hi));
  }
  return Normalizer(std::move(ranges));
}

namespace {

void encode_into(const HourlyRecord& r, const Normalizer& normalizer, const FeatureSchema& schema,
                 std::span<double> out) {
  if (r.type_id < 0 || r.type_id >= schema.num_types) {
    throw InvalidInput("type_id " + std::to_string(r.type_id) + " outside one-hot range");
  }
  if (r.carriers.size() > static_cast<std::size_t>(schema.max_carriers)) {
    throw InvalidInput("record has more carriers than the feature schema supports");
  }
  std::fill(out.begin(), out.end(), 0.0);
  out[r.type_id] = 1.0;
  const std::size_t block = schema.per_carrier_features.size();
  for (std::size_t c = 0; c < r.carriers.size(); ++c) {
    for (std::size_t f = 0; f < block; ++f) {
      const auto& name = schema.per_carrier_features[f];
      const double raw = raw_carrier_feature(r, c, name);
      out[schema.num_types + c * block + f] =
          name == kFeatureConfigured ? raw : normalizer.transform(name, raw);
    }
  }
}

}  // namespace

FeatureVector encode(const HourlyRecord& record, const Normalizer& normalizer,
                     const FeatureSchema& schema) {
  FeatureVector v;
  v.values.resize(schema.width());
  encode_into(record, normalizer, schema, v.values);
  return v;
}

Eigen::MatrixXd encode_all(std::span<const HourlyRecord> records, const Normalizer& normalizer,
                           const FeatureSchema& schema) {
  // Row-major scratch so each record writes a contiguous span.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(records.size(),
                                                                           schema.width());
  for (std::size_t i = 0; i < records.size(); ++i) {
    encode_into(records[i], normalizer, schema, std::span<double>(x.row(i).data(), schema.width()));
  }
  return x;
}

void to_json(nlohmann::json& j, const Normalizer& n) {
  j = nlohmann::json::object();
  for (const auto& [name, r] : n.ranges()) j[name] = {r.first, r.second};
}

void from_json(const nlohmann::json& j, Normalizer& n) {
  if (!j.is_object()) throw SchemaError("normalizer must be a JSON object");
  std::map<std::string, std::pair<double, double>> ranges;
  for (const auto& item : j.items()) {
    const auto& v = item.value();
    if (!v.is_array() || v.size() != 2) {
      throw SchemaError("normalizer entry '" + item.key() + "' must be [min, max]");
    }
    ranges.emplace(item.key(), std::make_pair(v[0].get<double>(), v[1].get<double>()));
  }
  n = Normalizer(std::move(ranges));
}

}  // namespace aaupower
