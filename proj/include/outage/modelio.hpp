#pragma once

#include <string>
#include <vector>

#include "outage/datastore.hpp"
#include "outage/evalreport.hpp"
#include "outage/features.hpp"
#include "outage/netmodel.hpp"
#include "outage/textprep.hpp"
#include "outage/training.hpp"

namespace outage::io {

// Feature subsets used in the ablation table; Onset is the full 19-dim vector,
// CauseOnset appends the oracle cause one-hot.
enum class FeatureSet { None, Time, TimeWeather, Onset, CauseOnset };

FeatureSet feature_set_from_string(const std::string& s);
std::string to_string(FeatureSet fs);
int feature_dim(FeatureSet fs);

// Slice a standardized 19-dim onset vector (plus one-hot) down to a subset.
std::vector<double> select_features(FeatureSet fs, const std::vector<double>& onset19,
                                    const std::vector<double>& onehot);

// Filtered/split/featurized corpus, everything fit on the training split only.
struct PreparedData {
  struct Example {
    std::string id;
    std::vector<double> onset19;  // standardized
    std::vector<double> onehot;   // cause one-hot (unstandardized)
    double duration_hours;
  };
  std::vector<Example> train, val, test;
  feat::FeederStats feeder;
  feat::StandardizationStats stats;  // over the raw 19-dim training vectors
};

PreparedData prepare(const data::Corpus& corpus,
                     const data::SplitSpec& spec = data::SplitSpec::paper_dates());

std::vector<train::InitialExample> initial_examples(
    const std::vector<PreparedData::Example>& split, FeatureSet fs);

// Aligned log sequences for the realtime model, restricted to outages that
// kept at least one log. Vocabulary is built from the training split.
struct RealtimePrepared {
  text::Vocab vocab;
  std::vector<train::RealtimeExample> train, val, test;
  std::vector<std::string> train_ids, val_ids, test_ids;
  // normalized token strings per test example/log, for attention exports
  std::vector<std::vector<text::NormalizedLog>> test_norm;
};

RealtimePrepared prepare_realtime(const PreparedData& prepared,
                                  const data::Corpus& corpus, int vocab_cutoff,
                                  const data::SplitSpec& spec = data::SplitSpec::paper_dates(),
                                  const text::Patterns& patterns = text::Patterns::defaults());

// Model directory layout: config.txt, stats.txt, initial.ckpt and, when the
// realtime model exists, realtime.ckpt + vocab.txt + patterns.txt.
struct ModelConfig {
  net::ModelSizes sizes;
  FeatureSet initial_features = FeatureSet::Onset;
  bool target_remaining = true;
  int vocab_cutoff = 1;
  uint64_t seed = 1;

  void save(const std::string& path) const;
  static ModelConfig load(const std::string& path);
};

void save_model_dir(const std::string& dir, const ModelConfig& config,
                    const feat::StandardizationStats& stats,
                    const feat::FeederStats& feeder);

struct LoadedModel {
  ModelConfig config;
  feat::StandardizationStats stats;
  feat::FeederStats feeder;
};

LoadedModel load_model_dir(const std::string& dir);

void save_initial(const std::string& dir, const net::InitialPredictor& model);
net::InitialPredictor load_initial(const std::string& dir, const ModelConfig& config);

void save_realtime(const std::string& dir, const net::RealtimeModel& model,
                   const text::Vocab& vocab, const text::Patterns& patterns);
bool has_realtime(const std::string& dir);
net::RealtimeModel load_realtime(const std::string& dir, const ModelConfig& config,
                                 text::Vocab& vocab_out);

}  // namespace outage::io
