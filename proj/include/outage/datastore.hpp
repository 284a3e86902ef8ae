#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "outage/tensor.hpp"

namespace outage::data {

struct OutageRecord {
  std::string id;
  int64_t start = 0;
  int64_t end = 0;
  std::string feeder;
  bool underground = false;
  std::string cause;
  int customers = 0;
  bool planned = false;

  double duration_hours() const { return double(end - start) / 3600.0; }
};

struct RepairLog {
  std::string feeder;
  int64_t t = 0;
  std::string text;
};

struct WeatherRow {
  int64_t t = 0;
  double temperature = 0;
  double apparent_temperature = 0;
  double cloud_cover = 0;
  double dew_point = 0;
  double humidity = 0;
  double precip_intensity = 0;
  double precip_probability = 0;
  double pressure = 0;
  double wind_speed = 0;
};

struct Corpus {
  std::vector<OutageRecord> outages;
  std::vector<RepairLog> logs;
  std::vector<WeatherRow> weather;  // time-sorted
};

struct SplitSpec {
  int64_t train_end;  // outage start < train_end -> train
  int64_t val_end;    // train_end <= start < val_end -> validation, else test

  SplitSpec(int64_t te, int64_t ve) : train_end(te), val_end(ve) {
    if (!(train_end < val_end))
      throw std::invalid_argument("SplitSpec: train_end must precede val_end");
  }
  static SplitSpec paper_dates();  // 2014-03-15 / 2015-03-15
};

struct LineError {
  std::string file;
  int line;
  std::string field;
  std::string reason;
};

struct LoadReport {
  int lines = 0;
  std::vector<LineError> errors;
};

// Line-delimited JSON record files, format version header on line 1.
Corpus load(const std::string& outage_path, const std::string& log_path,
            const std::string& weather_path, LoadReport* report = nullptr);
void save(const Corpus& corpus, const std::string& dir);

// Keeps unplanned outages with 5 min < duration <= 24 h.
std::vector<OutageRecord> filter_outages(const std::vector<OutageRecord>& records);

struct AlignedOutage {
  OutageRecord outage;
  std::vector<RepairLog> logs;  // time-ordered, tail 2.5% removed
};

// Attaches each log to the outage on the same feeder whose window contains it;
// overlapping windows resolve to the outage with the latest start <= log time.
// Outages left with zero logs are dropped from the result.
std::vector<AlignedOutage> align_logs(const std::vector<OutageRecord>& outages,
                                      const std::vector<RepairLog>& logs);

struct Split {
  std::vector<OutageRecord> train, validation, test;
};
Split split_by_date(const std::vector<OutageRecord>& records, const SplitSpec& spec);

// Nearest-in-time weather row; ties go to the earlier report. Weather must be
// time-sorted and non-empty.
const WeatherRow& nearest_weather(const std::vector<WeatherRow>& weather, int64_t t);

struct CauseSpec {
  std::string name;
  double base_weight;     // prior weight before seasonal modulation
  double duration_k;      // Gamma shape of duration
  double duration_theta;  // Gamma scale, hours
  std::string keyword;    // planted token revealing the cause in repair logs
};

struct GenConfig {
  int n_outages = 600;
  int n_feeders = 20;
  std::string period_start = "2006-06-01T00:00:00";
  std::string period_end = "2016-03-15T00:00:00";
  double prob_no_logs = 0.2;
  int max_logs = 6;
  double cause_reveal_prob = 0.8;   // keyword appears in log j >= 2
  double first_log_reveal_prob = 0.1;
  double feeder_theta_spread = 0.35;  // lognormal sigma of per-feeder multiplier
  double underground_fraction = 0.35;
  double wind_theta_gain = 0.0;       // duration-scale sensitivity to wind speed
  double precip_theta_gain = 0.0;     // duration-scale sensitivity to precipitation
  std::vector<CauseSpec> causes;  // weights must sum to 1

  static GenConfig defaults();
  static GenConfig load(const std::string& path);  // plain-text key-value
  void save(const std::string& path) const;
  const CauseSpec& cause(const std::string& name) const;
  void validate() const;
};

Corpus generate_synthetic(const GenConfig& config, uint64_t seed);

}  // namespace outage::data
