#include "outage/modelio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "outage/timeutil.hpp"

namespace outage::io {

namespace fs = std::filesystem;

FeatureSet feature_set_from_string(const std::string& s) {
  if (s == "none") return FeatureSet::None;
  if (s == "time") return FeatureSet::Time;
  if (s == "time-weather") return FeatureSet::TimeWeather;
  if (s == "onset") return FeatureSet::Onset;
  if (s == "cause-onset") return FeatureSet::CauseOnset;
  throw std::invalid_argument("unknown feature set: " + s);
}

std::string to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::None: return "none";
    case FeatureSet::Time: return "time";
    case FeatureSet::TimeWeather: return "time-weather";
    case FeatureSet::Onset: return "onset";
    case FeatureSet::CauseOnset: return "cause-onset";
  }
  throw std::invalid_argument("bad FeatureSet");
}

int feature_dim(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::None: return 0;
    case FeatureSet::Time: return 5;
    case FeatureSet::TimeWeather: return 14;
    case FeatureSet::Onset: return feat::kOnsetDim;
    case FeatureSet::CauseOnset:
      return feat::kOnsetDim + int(feat::cause_taxonomy().size());
  }
  throw std::invalid_argument("bad FeatureSet");
}

std::vector<double> select_features(FeatureSet fs, const std::vector<double>& onset19,
                                    const std::vector<double>& onehot) {
  if (int(onset19.size()) != feat::kOnsetDim)
    throw std::invalid_argument("select_features: expected 19-dim onset vector");
  switch (fs) {
    case FeatureSet::None:
      return {};
    case FeatureSet::Time:
      return std::vector<double>(onset19.begin(), onset19.begin() + 5);
    case FeatureSet::TimeWeather:
      return std::vector<double>(onset19.begin(), onset19.begin() + 14);
    case FeatureSet::Onset:
      return onset19;
    case FeatureSet::CauseOnset: {
      if (onehot.size() != feat::cause_taxonomy().size())
        throw std::invalid_argument("select_features: missing cause one-hot");
      std::vector<double> out = onset19;
      out.insert(out.end(), onehot.begin(), onehot.end());
      return out;
    }
  }
  throw std::invalid_argument("bad FeatureSet");
}

PreparedData prepare(const data::Corpus& corpus, const data::SplitSpec& spec) {
  auto filtered = data::filter_outages(corpus.outages);
  if (filtered.empty()) throw std::runtime_error("prepare: no outages after filtering");
  data::Split split = data::split_by_date(filtered, spec);
  if (split.train.empty()) throw std::runtime_error("prepare: empty training split");

  PreparedData out;
  out.feeder = feat::FeederStats::build(split.train);

  std::vector<int64_t> starts;
  starts.reserve(filtered.size());
  for (const auto& r : filtered) starts.push_back(r.start);
  std::sort(starts.begin(), starts.end());

  auto raw = [&](const data::OutageRecord& r) {
    const data::WeatherRow& wx = data::nearest_weather(corpus.weather, r.start);
    return feat::extract(r, wx, starts, out.feeder, false);
  };

  std::vector<std::vector<double>> train_raw;
  for (const auto& r : split.train) train_raw.push_back(raw(r));
  out.stats = feat::StandardizationStats::build(train_raw);

  auto fill = [&](const std::vector<data::OutageRecord>& recs,
                  std::vector<PreparedData::Example>& dst) {
    for (const auto& r : recs) {
      PreparedData::Example ex;
      ex.id = r.id;
      ex.onset19 = feat::standardize(raw(r), out.stats);
      ex.onehot.assign(feat::cause_taxonomy().size(), 0.0);
      ex.onehot[feat::cause_index(r.cause)] = 1.0;
      ex.duration_hours = r.duration_hours();
      dst.push_back(std::move(ex));
    }
  };
  fill(split.train, out.train);
  fill(split.validation, out.val);
  fill(split.test, out.test);
  return out;
}

std::vector<train::InitialExample> initial_examples(
    const std::vector<PreparedData::Example>& split, FeatureSet fs) {
  std::vector<train::InitialExample> out;
  out.reserve(split.size());
  for (const auto& ex : split)
    out.push_back({select_features(fs, ex.onset19, ex.onehot), ex.duration_hours});
  return out;
}

RealtimePrepared prepare_realtime(const PreparedData& prepared,
                                  const data::Corpus& corpus, int vocab_cutoff,
                                  const data::SplitSpec& spec,
                                  const text::Patterns& patterns) {
  auto filtered = data::filter_outages(corpus.outages);
  auto aligned = data::align_logs(filtered, corpus.logs);

  std::map<std::string, const PreparedData::Example*> by_id;
  for (const auto& ex : prepared.train) by_id[ex.id] = &ex;
  for (const auto& ex : prepared.val) by_id[ex.id] = &ex;
  for (const auto& ex : prepared.test) by_id[ex.id] = &ex;

  // vocabulary from normalized training-split logs only
  std::vector<std::vector<std::string>> train_tokens;
  for (const auto& ao : aligned) {
    if (ao.outage.start >= spec.train_end) continue;
    for (const auto& lg : ao.logs)
      train_tokens.push_back(text::normalize(lg.text, patterns).tokens);
  }
  if (train_tokens.empty())
    throw std::runtime_error("prepare_realtime: no training logs");

  RealtimePrepared out;
  out.vocab = text::Vocab::build(train_tokens, vocab_cutoff);

  for (const auto& ao : aligned) {
    auto it = by_id.find(ao.outage.id);
    if (it == by_id.end()) continue;
    train::RealtimeExample ex;
    ex.f = it->second->onset19;
    ex.duration_hours = ao.outage.duration_hours();
    std::vector<text::NormalizedLog> norms;
    for (const auto& lg : ao.logs) {
      text::NormalizedLog norm = text::normalize(lg.text, patterns);
      net::EncodedLog el;
      el.tokens = out.vocab.encode(norm);
      el.elapsed_hours = timeutil::hours_between(ao.outage.start, lg.t);
      ex.logs.push_back(std::move(el));
      norms.push_back(std::move(norm));
    }
    if (ao.outage.start < spec.train_end) {
      out.train.push_back(std::move(ex));
      out.train_ids.push_back(ao.outage.id);
    } else if (ao.outage.start < spec.val_end) {
      out.val.push_back(std::move(ex));
      out.val_ids.push_back(ao.outage.id);
    } else {
      out.test.push_back(std::move(ex));
      out.test_ids.push_back(ao.outage.id);
      out.test_norm.push_back(std::move(norms));
    }
  }
  return out;
}

void ModelConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model config: " + path);
  out << "model-config v1\n";
  out << "h1 " << sizes.h1 << "\n";
  out << "h2 " << sizes.h2 << "\n";
  out << "embed " << sizes.embed << "\n";
  out << "bi_cell " << sizes.bi_cell << "\n";
  out << "state " << sizes.state << "\n";
  out << "heads " << sizes.heads << "\n";
  out << "layer_norm " << (sizes.layer_norm ? 1 : 0) << "\n";
  out << "initial_features " << to_string(initial_features) << "\n";
  out << "target_remaining " << (target_remaining ? 1 : 0) << "\n";
  out << "vocab_cutoff " << vocab_cutoff << "\n";
  out << "seed " << seed << "\n";
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model config: " + path);
  std::string header, v;
  in >> header >> v;
  if (header != "model-config" || v != "v1")
    throw std::runtime_error("bad model config header in " + path);
  ModelConfig c;
  std::string key;
  int ln = 1, tr = 1;
  while (in >> key) {
    if (key == "h1") in >> c.sizes.h1;
    else if (key == "h2") in >> c.sizes.h2;
    else if (key == "embed") in >> c.sizes.embed;
    else if (key == "bi_cell") in >> c.sizes.bi_cell;
    else if (key == "state") in >> c.sizes.state;
    else if (key == "heads") in >> c.sizes.heads;
    else if (key == "layer_norm") { in >> ln; c.sizes.layer_norm = ln != 0; }
    else if (key == "initial_features") {
      std::string s;
      in >> s;
      c.initial_features = feature_set_from_string(s);
    }
    else if (key == "target_remaining") { in >> tr; c.target_remaining = tr != 0; }
    else if (key == "vocab_cutoff") in >> c.vocab_cutoff;
    else if (key == "seed") in >> c.seed;
    else throw std::runtime_error("unknown model config key: " + key);
    if (!in) throw std::runtime_error("malformed model config near: " + key);
  }
  return c;
}

void save_model_dir(const std::string& dir, const ModelConfig& config,
                    const feat::StandardizationStats& stats,
                    const feat::FeederStats& feeder) {
  fs::create_directories(dir);
  config.save(dir + "/config.txt");
  std::ofstream out(dir + "/stats.txt");
  if (!out) throw std::runtime_error("cannot write " + dir + "/stats.txt");
  stats.save(out);
  feeder.save(out);
}

LoadedModel load_model_dir(const std::string& dir) {
  LoadedModel m;
  m.config = ModelConfig::load(dir + "/config.txt");
  std::ifstream in(dir + "/stats.txt");
  if (!in) throw std::runtime_error("cannot open " + dir + "/stats.txt");
  m.stats = feat::StandardizationStats::load(in);
  m.feeder = feat::FeederStats::load(in);
  return m;
}

void save_initial(const std::string& dir, const net::InitialPredictor& model) {
  model.params().save(dir + "/initial.ckpt", 0);
}

net::InitialPredictor load_initial(const std::string& dir, const ModelConfig& config) {
  net::InitialPredictor model(feature_dim(config.initial_features), config.sizes.h1,
                              config.sizes.h2, config.seed);
  num::ParamSet loaded = num::ParamSet::load(dir + "/initial.ckpt");
  model.params().restore(loaded.snapshot());
  return model;
}

void save_realtime(const std::string& dir, const net::RealtimeModel& model,
                   const text::Vocab& vocab, const text::Patterns& patterns) {
  model.params().save(dir + "/realtime.ckpt", 0);
  vocab.save(dir + "/vocab.txt");
  patterns.save(dir + "/patterns.txt");
}

bool has_realtime(const std::string& dir) {
  return fs::exists(dir + "/realtime.ckpt");
}

net::RealtimeModel load_realtime(const std::string& dir, const ModelConfig& config,
                                 text::Vocab& vocab_out) {
  vocab_out = text::Vocab::load(dir + "/vocab.txt");
  net::RealtimeModel model(feat::kOnsetDim, vocab_out.size(), config.sizes, config.seed);
  num::ParamSet loaded = num::ParamSet::load(dir + "/realtime.ckpt");
  model.params().restore(loaded.snapshot());
  return model;
}

}  // namespace outage::io
