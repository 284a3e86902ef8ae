#include "outage/features.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>

#include "outage/timeutil.hpp"

namespace outage::feat {

namespace tu = outage::timeutil;

const std::vector<std::string>& cause_taxonomy() {
  static const std::vector<std::string> causes = {
      "equipment_failure", "bird_animal", "tree_wind", "vehicle", "dig_in", "other"};
  return causes;
}

int cause_index(const std::string& cause) {
  const auto& tax = cause_taxonomy();
  for (size_t i = 0; i < tax.size(); ++i)
    if (tax[i] == cause) return int(i);
  return int(tax.size()) - 1;
}

const std::array<bool, kOnsetDim>& standardized_dims() {
  static const std::array<bool, kOnsetDim> mask = {
      false, false, false, false, false,               // time ordinals + weekend
      true,  true,  true,  true,  true, true, true, true, true,  // weather
      false, true,                                      // line-type flag, feeder mean
      true,  true,  true};                              // load
  return mask;
}

FeederStats FeederStats::build(const std::vector<data::OutageRecord>& train) {
  FeederStats s;
  double total = 0.0;
  int n = 0;
  for (const auto& r : train) {
    auto& [cnt, mean] = s.per_feeder_[r.feeder];
    double d = r.duration_hours();
    mean = (mean * cnt + d) / (cnt + 1);
    ++cnt;
    total += d;
    ++n;
  }
  s.global_mean_ = n > 0 ? total / n : 0.0;
  return s;
}

double FeederStats::smoothed_mean(const std::string& feeder) const {
  auto it = per_feeder_.find(feeder);
  if (it == per_feeder_.end()) return global_mean_;
  auto [n, mean] = it->second;
  return (n * mean + kPseudoCount * global_mean_) / (n + kPseudoCount);
}

void FeederStats::save(std::ostream& out) const {
  out << std::setprecision(17);
  out << "feeder-stats v1\n";
  out << "global " << global_mean_ << "\n";
  // sorted for byte-stable output
  std::map<std::string, std::pair<int, double>> sorted(per_feeder_.begin(),
                                                       per_feeder_.end());
  for (const auto& [name, nm] : sorted)
    out << name << " " << nm.first << " " << nm.second << "\n";
}

FeederStats FeederStats::load(std::istream& in) {
  std::string header, v;
  in >> header >> v;
  if (header != "feeder-stats" || v != "v1")
    throw std::runtime_error("bad feeder-stats header");
  FeederStats s;
  std::string key;
  in >> key >> s.global_mean_;
  if (key != "global" || !in) throw std::runtime_error("malformed feeder-stats");
  std::string name;
  int n;
  double mean;
  while (in >> name >> n >> mean) s.per_feeder_[name] = {n, mean};
  return s;
}

void StandardizationStats::save(std::ostream& out) const {
  out << std::setprecision(17);
  out << "standardization v1 " << mu.size() << "\n";
  for (size_t i = 0; i < mu.size(); ++i) out << mu[i] << " " << sigma[i] << "\n";
}

StandardizationStats StandardizationStats::load(std::istream& in) {
  std::string header, v;
  size_t n = 0;
  in >> header >> v >> n;
  if (header != "standardization" || v != "v1" || !in)
    throw std::runtime_error("bad standardization header");
  StandardizationStats s;
  s.mu.resize(n);
  s.sigma.resize(n);
  for (size_t i = 0; i < n; ++i) in >> s.mu[i] >> s.sigma[i];
  if (!in) throw std::runtime_error("malformed standardization stats");
  return s;
}

StandardizationStats StandardizationStats::build(
    const std::vector<std::vector<double>>& train) {
  if (train.empty())
    throw std::invalid_argument("StandardizationStats: empty training set");
  size_t dim = train[0].size();
  StandardizationStats s;
  s.mu.assign(dim, 0.0);
  s.sigma.assign(dim, 1.0);
  for (const auto& v : train) {
    if (v.size() != dim)
      throw std::invalid_argument("StandardizationStats: inconsistent dimensions");
    for (size_t i = 0; i < dim; ++i) s.mu[i] += v[i];
  }
  for (double& m : s.mu) m /= double(train.size());
  for (size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (const auto& v : train) acc += (v[i] - s.mu[i]) * (v[i] - s.mu[i]);
    s.sigma[i] = std::max(std::sqrt(acc / double(train.size())), 1e-6);
  }
  return s;
}

std::vector<double> extract(const data::OutageRecord& outage,
                            const data::WeatherRow& weather,
                            const std::vector<int64_t>& all_outage_starts,
                            const FeederStats& stats, bool include_cause) {
  if (outage.customers < 0)
    throw std::invalid_argument("extract: negative customers on outage " + outage.id);
  tu::Calendar cal = tu::calendar(outage.start);

  auto count_recent = [&](double hours) {
    // outages with start in (outage.start - hours, outage.start), self excluded
    int64_t lo = outage.start - int64_t(hours * 3600.0);
    auto lo_it = std::upper_bound(all_outage_starts.begin(), all_outage_starts.end(), lo);
    auto hi_it = std::lower_bound(all_outage_starts.begin(), all_outage_starts.end(),
                                  outage.start);
    return double(hi_it - lo_it);
  };

  std::vector<double> f;
  f.reserve(kOnsetDim + (include_cause ? cause_taxonomy().size() : 0));
  f.push_back((cal.month - 1) / 12.0);
  f.push_back(cal.day_of_week / 7.0);
  f.push_back((cal.day_of_year - 1) / 366.0);
  f.push_back(cal.hour / 24.0);
  f.push_back((cal.day_of_week == 0 || cal.day_of_week == 6) ? 1.0 : 0.0);
  f.push_back(weather.temperature);
  f.push_back(weather.apparent_temperature);
  f.push_back(weather.cloud_cover);
  f.push_back(weather.dew_point);
  f.push_back(weather.humidity);
  f.push_back(weather.precip_intensity);
  f.push_back(weather.precip_probability);
  f.push_back(weather.pressure);
  f.push_back(weather.wind_speed);
  f.push_back(outage.underground ? 1.0 : 0.0);
  f.push_back(stats.smoothed_mean(outage.feeder));
  f.push_back(std::log1p(double(outage.customers)));
  f.push_back(count_recent(3.0));
  f.push_back(count_recent(8.0));
  if (include_cause) {
    std::vector<double> onehot(cause_taxonomy().size(), 0.0);
    onehot[cause_index(outage.cause)] = 1.0;
    f.insert(f.end(), onehot.begin(), onehot.end());
  }
  for (double x : f)
    if (!std::isfinite(x))
      throw std::runtime_error("extract: non-finite feature for outage " + outage.id);
  return f;
}

std::vector<double> standardize(const std::vector<double>& v,
                                const StandardizationStats& s) {
  if (v.size() != s.mu.size())
    throw std::invalid_argument("standardize: dimension mismatch");
  const auto& mask = standardized_dims();
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    bool scale = i < kOnsetDim ? mask[i] : false;  // one-hot block passes through
    out[i] = scale ? (v[i] - s.mu[i]) / s.sigma[i] : v[i];
  }
  return out;
}

std::vector<double> unstandardize(const std::vector<double>& v,
                                  const StandardizationStats& s) {
  if (v.size() != s.mu.size())
    throw std::invalid_argument("unstandardize: dimension mismatch");
  const auto& mask = standardized_dims();
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    bool scale = i < kOnsetDim ? mask[i] : false;
    out[i] = scale ? v[i] * s.sigma[i] + s.mu[i] : v[i];
  }
  return out;
}

}  // namespace outage::feat
