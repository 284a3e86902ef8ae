#include "outage/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "outage/gammadist.hpp"
#include "outage/timeutil.hpp"

namespace outage::data {

using nlohmann::json;
namespace tu = outage::timeutil;

SplitSpec SplitSpec::paper_dates() {
  return SplitSpec(tu::parse("2014-03-15T00:00:00"), tu::parse("2015-03-15T00:00:00"));
}

namespace {

constexpr const char* kOutageHeader = R"({"format":"outages","version":1})";
constexpr const char* kLogHeader = R"({"format":"repair-logs","version":1})";
constexpr const char* kWeatherHeader = R"({"format":"weather","version":1})";

// Reads one JSONL file. parse_record returns a field name on failure.
template <typename T, typename F>
std::vector<T> load_jsonl(const std::string& path, const char* header, F parse_record,
                          LoadReport& report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file: " + path);
  std::string line;
  if (!std::getline(in, line) || json::parse(line, nullptr, false) != json::parse(header))
    throw std::runtime_error("bad or missing format header in " + path);
  std::vector<T> out;
  int lineno = 1;
  int bad = 0;
  while (std::getline(in, line)) {
    ++lineno;
    ++report.lines;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      report.errors.push_back({path, lineno, "", "invalid JSON"});
      ++bad;
      continue;
    }
    T rec;
    std::string field, reason;
    if (parse_record(j, rec, field, reason)) {
      out.push_back(std::move(rec));
    } else {
      report.errors.push_back({path, lineno, field, reason});
      ++bad;
    }
  }
  if (lineno > 1 && bad * 10 > (lineno - 1))
    throw std::runtime_error("more than 10% malformed lines in " + path);
  return out;
}

bool parse_time_field(const json& j, const char* key, int64_t& out, std::string& field,
                      std::string& reason) {
  if (!j.contains(key) || !j[key].is_string()) {
    field = key;
    reason = "missing or non-string timestamp";
    return false;
  }
  try {
    out = tu::parse(j[key].get<std::string>());
  } catch (const std::exception& e) {
    field = key;
    reason = e.what();
    return false;
  }
  return true;
}

}  // namespace

Corpus load(const std::string& outage_path, const std::string& log_path,
            const std::string& weather_path, LoadReport* report_out) {
  LoadReport report;
  Corpus c;
  c.outages = load_jsonl<OutageRecord>(
      outage_path, kOutageHeader,
      [](const json& j, OutageRecord& r, std::string& field, std::string& reason) {
        try {
          if (!parse_time_field(j, "start", r.start, field, reason)) return false;
          if (!parse_time_field(j, "end", r.end, field, reason)) return false;
          r.id = j.at("id").get<std::string>();
          r.feeder = j.at("feeder").get<std::string>();
          std::string lt = j.at("line_type").get<std::string>();
          if (lt != "overhead" && lt != "underground") {
            field = "line_type";
            reason = "must be overhead or underground";
            return false;
          }
          r.underground = (lt == "underground");
          r.cause = j.at("cause").get<std::string>();
          r.customers = j.at("customers").get<int>();
          r.planned = j.at("planned").get<bool>();
        } catch (const std::exception& e) {
          field = "";
          reason = e.what();
          return false;
        }
        if (r.end <= r.start) {
          field = "end";
          reason = "end must be after start";
          return false;
        }
        if (r.customers < 0) {
          field = "customers";
          reason = "customers must be >= 0";
          return false;
        }
        return true;
      },
      report);
  c.logs = load_jsonl<RepairLog>(
      log_path, kLogHeader,
      [](const json& j, RepairLog& r, std::string& field, std::string& reason) {
        try {
          if (!parse_time_field(j, "time", r.t, field, reason)) return false;
          r.feeder = j.at("feeder").get<std::string>();
          r.text = j.at("text").get<std::string>();
        } catch (const std::exception& e) {
          field = "";
          reason = e.what();
          return false;
        }
        return true;
      },
      report);
  c.weather = load_jsonl<WeatherRow>(
      weather_path, kWeatherHeader,
      [](const json& j, WeatherRow& r, std::string& field, std::string& reason) {
        try {
          if (!parse_time_field(j, "time", r.t, field, reason)) return false;
          r.temperature = j.at("temperature").get<double>();
          r.apparent_temperature = j.at("apparent_temperature").get<double>();
          r.cloud_cover = j.at("cloud_cover").get<double>();
          r.dew_point = j.at("dew_point").get<double>();
          r.humidity = j.at("humidity").get<double>();
          r.precip_intensity = j.at("precip_intensity").get<double>();
          r.precip_probability = j.at("precip_probability").get<double>();
          r.pressure = j.at("pressure").get<double>();
          r.wind_speed = j.at("wind_speed").get<double>();
        } catch (const std::exception& e) {
          field = "";
          reason = e.what();
          return false;
        }
        for (double x : {r.temperature, r.apparent_temperature, r.cloud_cover,
                         r.dew_point, r.humidity, r.precip_intensity,
                         r.precip_probability, r.pressure, r.wind_speed}) {
          if (!std::isfinite(x)) {
            field = "";
            reason = "non-finite weather value";
            return false;
          }
        }
        return true;
      },
      report);
  std::sort(c.weather.begin(), c.weather.end(),
            [](const WeatherRow& a, const WeatherRow& b) { return a.t < b.t; });
  if (report_out) *report_out = report;
  return c;
}

void save(const Corpus& corpus, const std::string& dir) {
  {
    std::ofstream out(dir + "/outages.jsonl");
    if (!out) throw std::runtime_error("cannot write " + dir + "/outages.jsonl");
    out << kOutageHeader << "\n";
    for (const OutageRecord& r : corpus.outages) {
      json j;
      j["id"] = r.id;
      j["start"] = tu::format(r.start);
      j["end"] = tu::format(r.end);
      j["feeder"] = r.feeder;
      j["line_type"] = r.underground ? "underground" : "overhead";
      j["cause"] = r.cause;
      j["customers"] = r.customers;
      j["planned"] = r.planned;
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir + "/logs.jsonl");
    if (!out) throw std::runtime_error("cannot write " + dir + "/logs.jsonl");
    out << kLogHeader << "\n";
    for (const RepairLog& r : corpus.logs) {
      json j;
      j["feeder"] = r.feeder;
      j["time"] = tu::format(r.t);
      j["text"] = r.text;
      out << j.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir + "/weather.jsonl");
    if (!out) throw std::runtime_error("cannot write " + dir + "/weather.jsonl");
    out << kWeatherHeader << "\n";
    for (const WeatherRow& r : corpus.weather) {
      json j;
      j["time"] = tu::format(r.t);
      j["temperature"] = r.temperature;
      j["apparent_temperature"] = r.apparent_temperature;
      j["cloud_cover"] = r.cloud_cover;
      j["dew_point"] = r.dew_point;
      j["humidity"] = r.humidity;
      j["precip_intensity"] = r.precip_intensity;
      j["precip_probability"] = r.precip_probability;
      j["pressure"] = r.pressure;
      j["wind_speed"] = r.wind_speed;
      out << j.dump() << "\n";
    }
  }
}

std::vector<OutageRecord> filter_outages(const std::vector<OutageRecord>& records) {
  std::vector<OutageRecord> out;
  for (const OutageRecord& r : records) {
    double d = r.duration_hours();
    if (!r.planned && d > 5.0 / 60.0 && d <= 24.0) out.push_back(r);
  }
  return out;
}

std::vector<AlignedOutage> align_logs(const std::vector<OutageRecord>& outages,
                                      const std::vector<RepairLog>& logs) {
  std::vector<AlignedOutage> out;
  out.reserve(outages.size());
  for (const OutageRecord& o : outages) out.push_back({o, {}});

  // index outages per feeder, sorted by start
  std::map<std::string, std::vector<int>> by_feeder;
  for (size_t i = 0; i < out.size(); ++i)
    by_feeder[out[i].outage.feeder].push_back(int(i));
  for (auto& [_, idx] : by_feeder)
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return out[a].outage.start < out[b].outage.start;
    });

  for (const RepairLog& log : logs) {
    auto it = by_feeder.find(log.feeder);
    if (it == by_feeder.end()) continue;
    // candidates whose window contains the log; overlaps resolve to the
    // outage with the latest start at or before the log time
    int chosen = -1;
    for (int i : it->second) {
      const OutageRecord& o = out[i].outage;
      if (o.start > log.t) break;
      if (log.t <= o.end) chosen = i;
    }
    if (chosen < 0) continue;
    const OutageRecord& o = out[chosen].outage;
    double frac = double(log.t - o.start) / double(o.end - o.start);
    if (frac > 0.975) continue;  // conclusion notes, removed
    out[chosen].logs.push_back(log);
  }

  std::vector<AlignedOutage> kept;
  for (AlignedOutage& ao : out) {
    if (ao.logs.empty()) continue;
    std::sort(ao.logs.begin(), ao.logs.end(),
              [](const RepairLog& a, const RepairLog& b) { return a.t < b.t; });
    kept.push_back(std::move(ao));
  }
  return kept;
}

Split split_by_date(const std::vector<OutageRecord>& records, const SplitSpec& spec) {
  Split s;
  for (const OutageRecord& r : records) {
    if (r.start < spec.train_end)
      s.train.push_back(r);
    else if (r.start < spec.val_end)
      s.validation.push_back(r);
    else
      s.test.push_back(r);
  }
  return s;
}

const WeatherRow& nearest_weather(const std::vector<WeatherRow>& weather, int64_t t) {
  if (weather.empty()) throw std::runtime_error("nearest_weather: no weather rows");
  auto it = std::lower_bound(
      weather.begin(), weather.end(), t,
      [](const WeatherRow& w, int64_t tt) { return w.t < tt; });
  if (it == weather.begin()) return *it;
  if (it == weather.end()) return weather.back();
  const WeatherRow& later = *it;
  const WeatherRow& earlier = *(it - 1);
  // ties break toward the earlier report
  return (later.t - t < t - earlier.t) ? later : earlier;
}

// --- synthetic generator --------------------------------------------------

GenConfig GenConfig::defaults() {
  GenConfig c;
  c.causes = {
      {"equipment_failure", 0.30, 2.0, 2.2, "arrestor"},
      {"bird_animal", 0.12, 3.0, 0.4, "crow"},
      {"tree_wind", 0.18, 2.5, 3.0, "tree"},
      {"vehicle", 0.08, 2.0, 1.5, "vehicle"},
      {"dig_in", 0.08, 2.5, 2.0, "excavation"},
      {"other", 0.24, 1.5, 2.0, "unknown"},
  };
  return c;
}

void GenConfig::validate() const {
  if (n_outages <= 0 || n_feeders <= 0)
    throw std::invalid_argument("GenConfig: counts must be positive");
  if (causes.empty()) throw std::invalid_argument("GenConfig: no causes");
  double sum = 0.0;
  for (const CauseSpec& c : causes) {
    if (c.base_weight < 0 || c.duration_k <= 0 || c.duration_theta <= 0)
      throw std::invalid_argument("GenConfig: bad cause spec for " + c.name);
    sum += c.base_weight;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("GenConfig: cause weights must sum to 1");
  for (double p : {prob_no_logs, cause_reveal_prob, first_log_reveal_prob,
                   underground_fraction})
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("GenConfig: probability out of [0,1]");
  if (wind_theta_gain < 0.0 || precip_theta_gain < 0.0)
    throw std::invalid_argument("GenConfig: weather theta gains must be >= 0");
}

const CauseSpec& GenConfig::cause(const std::string& name) const {
  for (const CauseSpec& c : causes)
    if (c.name == name) return c;
  throw std::invalid_argument("unknown cause: " + name);
}

void GenConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write gen config: " + path);
  out << "n_outages " << n_outages << "\n";
  out << "n_feeders " << n_feeders << "\n";
  out << "period_start " << period_start << "\n";
  out << "period_end " << period_end << "\n";
  out << "prob_no_logs " << prob_no_logs << "\n";
  out << "max_logs " << max_logs << "\n";
  out << "cause_reveal_prob " << cause_reveal_prob << "\n";
  out << "first_log_reveal_prob " << first_log_reveal_prob << "\n";
  out << "feeder_theta_spread " << feeder_theta_spread << "\n";
  out << "underground_fraction " << underground_fraction << "\n";
  out << "wind_theta_gain " << wind_theta_gain << "\n";
  out << "precip_theta_gain " << precip_theta_gain << "\n";
  for (const CauseSpec& c : causes)
    out << "cause " << c.name << " " << c.base_weight << " " << c.duration_k << " "
        << c.duration_theta << " " << c.keyword << "\n";
}

GenConfig GenConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gen config: " + path);
  GenConfig c = defaults();
  c.causes.clear();
  bool any_cause = false;
  std::string key;
  while (in >> key) {
    if (key == "n_outages") in >> c.n_outages;
    else if (key == "n_feeders") in >> c.n_feeders;
    else if (key == "period_start") in >> c.period_start;
    else if (key == "period_end") in >> c.period_end;
    else if (key == "prob_no_logs") in >> c.prob_no_logs;
    else if (key == "max_logs") in >> c.max_logs;
    else if (key == "cause_reveal_prob") in >> c.cause_reveal_prob;
    else if (key == "first_log_reveal_prob") in >> c.first_log_reveal_prob;
    else if (key == "feeder_theta_spread") in >> c.feeder_theta_spread;
    else if (key == "underground_fraction") in >> c.underground_fraction;
    else if (key == "wind_theta_gain") in >> c.wind_theta_gain;
    else if (key == "precip_theta_gain") in >> c.precip_theta_gain;
    else if (key == "cause") {
      CauseSpec cs;
      in >> cs.name >> cs.base_weight >> cs.duration_k >> cs.duration_theta >> cs.keyword;
      c.causes.push_back(cs);
      any_cause = true;
    } else {
      throw std::runtime_error("unknown gen config key: " + key);
    }
    if (!in) throw std::runtime_error("malformed gen config near key: " + key);
  }
  if (!any_cause) c.causes = defaults().causes;
  c.validate();
  return c;
}

namespace {

struct WeatherModel {
  // Seasonal/diurnal shapes with noise; wind is the channel that carries cause
  // signal (tree outages).
  static WeatherRow at(int64_t t, num::Rng& rng) {
    tu::Calendar cal = tu::calendar(t);
    double doy = cal.day_of_year;
    double season = std::sin(2.0 * M_PI * (doy - 100.0) / 365.0);  // peak ~ July
    double daily = std::sin(2.0 * M_PI * (cal.hour - 9.0) / 24.0);
    WeatherRow w;
    w.t = t;
    w.temperature = 11.0 + 8.0 * season + 3.5 * daily + 1.5 * rng.normal();
    double winter = 0.5 * (1.0 - season);
    w.wind_speed = std::max(0.0, 2.0 + 3.0 * winter - 1.2 * std::log(std::max(1e-12, rng.uniform())));
    w.cloud_cover = std::clamp(0.45 + 0.3 * winter + 0.25 * rng.normal(), 0.0, 1.0);
    w.precip_probability = std::clamp(0.2 + 0.4 * w.cloud_cover + 0.15 * rng.normal(), 0.0, 1.0);
    w.precip_intensity = w.precip_probability > 0.5 ? std::max(0.0, 0.8 * rng.normal() + 0.5) : 0.0;
    w.humidity = std::clamp(0.65 + 0.15 * winter + 0.1 * rng.normal(), 0.05, 1.0);
    w.dew_point = w.temperature - (1.0 - w.humidity) * 20.0;
    w.apparent_temperature = w.temperature - 0.25 * w.wind_speed + 0.5 * rng.normal();
    w.pressure = 1015.0 - 1.5 * w.wind_speed + 3.0 * rng.normal();
    return w;
  }
};

}  // namespace

Corpus generate_synthetic(const GenConfig& config, uint64_t seed) {
  config.validate();
  int64_t t0 = tu::parse(config.period_start);
  int64_t t1 = tu::parse(config.period_end);
  if (t1 <= t0) throw std::invalid_argument("generator: empty period");
  int64_t hours = (t1 - t0) / 3600;

  Corpus corpus;
  num::Rng master(seed);
  num::Rng weather_rng = master.fork(1);
  num::Rng outage_rng = master.fork(2);
  num::Rng text_rng = master.fork(3);

  corpus.weather.reserve(size_t(hours));
  for (int64_t h = 0; h < hours; ++h)
    corpus.weather.push_back(WeatherModel::at(t0 + h * 3600, weather_rng));

  std::vector<double> feeder_mult(config.n_feeders);
  for (int i = 0; i < config.n_feeders; ++i)
    feeder_mult[i] = std::exp(config.feeder_theta_spread * outage_rng.normal());

  const char* streets[] = {"Cherry St", "Maple Ave", "Pine St",   "Denny Way",
                           "Union St",  "Madison St", "Olive Way", "Boren Ave"};
  const char* openers[] = {"EMS urgent alarm and breaker trip", "SLSVC reports outage",
                           "NAS reports lights out", "duty supervisor notified",
                           "crew dispatched to investigate"};
  const char* fillers[] = {"awaiting assessment", "to investigate", "need nurd",
                           "checking 26kv cables", "part out on north section"};

  std::vector<RepairLog> logs;
  for (int i = 0; i < config.n_outages; ++i) {
    OutageRecord r;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "O%06d", i + 1);
    r.id = idbuf;
    int64_t start = t0 + int64_t(outage_rng.below(uint64_t(hours))) * 3600 +
                    int64_t(outage_rng.below(3600));
    r.start = start;
    int feeder = int(outage_rng.below(uint64_t(config.n_feeders)));
    char fbuf[16];
    std::snprintf(fbuf, sizeof fbuf, "F%02d", feeder + 1);
    r.feeder = fbuf;
    r.underground = outage_rng.uniform() < config.underground_fraction;
    r.planned = false;
    r.customers = int(std::lround(std::exp(1.2 * outage_rng.normal() + 3.5)));

    // cause priors depend on season, hour, weekend, and the wind right now
    tu::Calendar cal = tu::calendar(start);
    const WeatherRow& wx = nearest_weather(corpus.weather, start);
    bool summer = cal.month >= 6 && cal.month <= 8;
    bool active_hours = (cal.hour >= 5 && cal.hour <= 8) || (cal.hour >= 16 && cal.hour <= 19);
    bool weekend = cal.day_of_week == 0 || cal.day_of_week == 6;
    bool late_night = cal.hour >= 22 || cal.hour <= 3;
    std::vector<double> w(config.causes.size());
    double wsum = 0.0;
    for (size_t ci = 0; ci < config.causes.size(); ++ci) {
      const CauseSpec& cs = config.causes[ci];
      double m = 1.0;
      if (cs.name == "bird_animal") m = (summer && active_hours) ? 6.0 : (summer || active_hours) ? 1.5 : 0.3;
      else if (cs.name == "tree_wind") m = 0.3 + 0.25 * wx.wind_speed;
      else if (cs.name == "vehicle") m = (weekend && late_night) ? 4.0 : 0.7;
      else if (cs.name == "dig_in") m = (!weekend && cal.hour >= 8 && cal.hour <= 17) ? 2.0 : 0.3;
      w[ci] = cs.base_weight * m;
      wsum += w[ci];
    }
    double u = outage_rng.uniform() * wsum;
    size_t ci = 0;
    for (; ci + 1 < w.size(); ++ci) {
      if (u < w[ci]) break;
      u -= w[ci];
    }
    const CauseSpec& cs = config.causes[ci];
    r.cause = cs.name;

    double theta = cs.duration_theta * feeder_mult[feeder];
    theta *= std::exp(config.wind_theta_gain * (wx.wind_speed - 4.0));
    theta *= std::exp(config.precip_theta_gain * wx.precip_intensity);
    theta *= 1.0 + 0.04 * (std::log1p(double(r.customers)) - 3.5);
    if (r.underground) theta *= 1.25;
    theta = std::max(theta, 0.05);
    double d;
    do {
      d = gamma::sample({cs.duration_k, theta}, outage_rng);
    } while (d < 0.1 || d > 23.99);  // margin inside the (5 min, 24 h] filter window
    r.end = start + int64_t(std::lround(d * 3600.0));
    if (r.end <= r.start) r.end = r.start + 360;
    corpus.outages.push_back(r);

    // repair logs
    if (text_rng.uniform() < config.prob_no_logs) continue;
    int nlogs = 1 + int(text_rng.below(uint64_t(config.max_logs)));
    std::vector<double> fracs(nlogs);
    for (double& f : fracs) f = text_rng.uniform(0.02, 0.93);
    std::sort(fracs.begin(), fracs.end());
    for (int li = 0; li < nlogs; ++li) {
      RepairLog log;
      log.feeder = r.feeder;
      log.t = r.start + int64_t(fracs[li] * double(r.end - r.start));
      std::ostringstream text;
      text << openers[text_rng.below(std::size(openers))];
      double reveal_p = (li == 0) ? config.first_log_reveal_prob : config.cause_reveal_prob;
      if (text_rng.uniform() < reveal_p) {
        const char* forms[] = {"found %s on line", "cause %s confirmed",
                               "crew reports %s at scene"};
        char buf[80];
        std::snprintf(buf, sizeof buf, forms[text_rng.below(std::size(forms))],
                      cs.keyword.c_str());
        text << " " << buf;
      } else {
        text << " " << fillers[text_rng.below(std::size(fillers))];
      }
      if (text_rng.uniform() < 0.5) {
        text << " at " << (100 + text_rng.below(900)) << " "
             << streets[text_rng.below(std::size(streets))];
      } else if (text_rng.uniform() < 0.4) {
        text << " TP " << (200 + text_rng.below(700));
      }
      if (li == nlogs - 1 && text_rng.uniform() < 0.5)
        text << " CL " << (10000 + text_rng.below(80000));
      log.text = text.str();
      logs.push_back(log);
    }
  }
  corpus.logs = std::move(logs);
  return corpus;
}

}  // namespace outage::data
