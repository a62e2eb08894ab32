#ifndef AAUPOWER_FEATURES_HPP
#define AAUPOWER_FEATURES_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aaupower/telemetry.hpp"

namespace aaupower {

// Per-carrier feature names understood by the encoder.
inline constexpr const char* kFeatureConfigured = "configured";
const std::vector<std::string>& default_carrier_features();

// Input layout: [one-hot type (num_types) | carrier 0 block | ... | carrier N-1 block].
struct FeatureSchema {
  int num_types = kNumAAUTypes;
  int max_carriers = kMaxCarriers;
  std::vector<std::string> per_carrier_features = default_carrier_features();

  int width() const {
    return num_types + max_carriers * static_cast<int>(per_carrier_features.size());
  }
  // Stable hash of the layout, stored alongside trained weights.
  std::uint64_t hash() const;
  void validate() const;
};

// Min-max scaling per numeric feature name, fitted on training data only.
class Normalizer {
 public:
  Normalizer() = default;
  explicit Normalizer(std::map<std::string, std::pair<double, double>> ranges);

  // (v - min) / (max - min); 0 for a constant feature. Not clipped.
  double transform(const std::string& feature, double value) const;
  double inverse(const std::string& feature, double scaled) const;

  const std::map<std::string, std::pair<double, double>>& ranges() const { return ranges_; }
  bool operator==(const Normalizer&) const = default;

 private:
  const std::pair<double, double>& range(const std::string& feature) const;
  std::map<std::string, std::pair<double, double>> ranges_;
};

struct FeatureVector {
  std::vector<double> values;
};

// Raw (unscaled) value of a per-carrier feature.
double raw_carrier_feature(const HourlyRecord& record, std::size_t carrier, const std::string& name);

Normalizer fit_normalizer(std::span<const HourlyRecord> train, const FeatureSchema& schema = {});

FeatureVector encode(const HourlyRecord& record, const Normalizer& normalizer,
                     const FeatureSchema& schema = {});

// One encoded record per row.
Eigen::MatrixXd encode_all(std::span<const HourlyRecord> records, const Normalizer& normalizer,
                           const FeatureSchema& schema = {});

void to_json(nlohmann::json& j, const Normalizer& n);
void from_json(const nlohmann::json& j, Normalizer& n);

}  // namespace aaupower

#endif  // AAUPOWER_FEATURES_HPP
