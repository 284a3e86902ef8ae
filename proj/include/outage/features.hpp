#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "outage/datastore.hpp"

namespace outage::feat {

// Onset feature layout (19 dims):
//   0..4   time: month, day-of-week, day-of-year, hour-of-day (ordinal scaled
//          to [0,1)), weekend flag
//   5..13  weather: temperature, apparent temperature, cloud cover, dew point,
//          humidity, precip intensity, precip probability, pressure, wind speed
//   14..15 location: overhead(0)/underground(1) flag, smoothed feeder mean
//          repair hours
//   16..18 load: log(1+customers), outages in last 3 h, outages in last 8 h
// With the oracle cause flag, a one-hot block over the cause taxonomy follows.
inline constexpr int kOnsetDim = 19;

const std::vector<std::string>& cause_taxonomy();  // 6 causes, "other" last
int cause_index(const std::string& cause);         // unknown -> "other"

// Dims that get (x - mu) / sigma; time ordinals, flags, and the one-hot block
// pass through.
const std::array<bool, kOnsetDim>& standardized_dims();

class FeederStats {
 public:
  // Built from the training split only.
  static FeederStats build(const std::vector<data::OutageRecord>& train);

  // (n * feeder_mean + m0 * global_mean) / (n + m0), m0 = 10.
  // Unknown feeders get the global mean.
  double smoothed_mean(const std::string& feeder) const;
  double global_mean() const { return global_mean_; }

  static constexpr double kPseudoCount = 10.0;

  void save(std::ostream& out) const;
  static FeederStats load(std::istream& in);

 private:
  std::unordered_map<std::string, std::pair<int, double>> per_feeder_;  // n, mean
  double global_mean_ = 0.0;
};

struct StandardizationStats {
  std::vector<double> mu, sigma;  // sized to the feature vector length

  static StandardizationStats build(const std::vector<std::vector<double>>& train);

  void save(std::ostream& out) const;
  static StandardizationStats load(std::istream& in);
};

std::vector<double> extract(const data::OutageRecord& outage,
                            const data::WeatherRow& weather,
                            const std::vector<int64_t>& all_outage_starts,  // sorted
                            const FeederStats& stats, bool include_cause);

std::vector<double> standardize(const std::vector<double>& v,
                                const StandardizationStats& s);
std::vector<double> unstandardize(const std::vector<double>& v,
                                  const StandardizationStats& s);

}  // namespace outage::feat
