#pragma once

#include <functional>
#include <string>
#include <vector>

#include "outage/netmodel.hpp"

namespace outage::train {

using num::ParamSet;

struct TrainConfig {
  double lr = 0.001;
  int max_epochs = 30;
  int patience = 5;
  double dropout = 0.0;   // variational dropout rate on the GRUs
  int vocab_cutoff = 1;   // carried for the pipeline / search space
  net::ModelSizes sizes;
  bool clip_gradients = true;
  double clip_norm = 5.0;
  bool target_remaining = true;  // realtime target: remaining vs total duration
  uint64_t seed = 1;

  void validate() const;
};

struct AdamState {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t t = 0;
  int skipped = 0;  // updates skipped because of non-finite gradients
};

// Bias-corrected Adam over every parameter; zeroes gradients afterwards.
// Moments live in Param::m / Param::v2.
void adam_step(ParamSet& params, AdamState& state, double lr);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_grad_norm(ParamSet& params, double max_norm);

// Inverted-dropout Bernoulli masks: entries are 0 or 1/(1-rate). Sampled once
// per sequence and reused at every step; rate 0 gives all-ones.
net::GruMasks sample_masks(int in, int cell, double rate, num::Rng& rng);
net::RealtimeDropout sample_dropout(const net::RealtimeModel& model, double rate,
                                    num::Rng& rng);

struct EpochStats {
  int epoch;
  double train_nll;
  double val_nll;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double best_val_nll = 0.0;
  int skipped_updates = 0;
};

struct InitialExample {
  std::vector<double> f;  // standardized features (may be empty)
  double duration_hours;
};

double initial_nll(const net::InitialPredictor& model,
                   const std::vector<InitialExample>& examples);

History train_initial(net::InitialPredictor& model,
                      const std::vector<InitialExample>& train,
                      const std::vector<InitialExample>& val,
                      const TrainConfig& cfg);

struct RealtimeExample {
  std::vector<double> f;  // standardized features for the update net
  std::vector<net::EncodedLog> logs;
  double duration_hours;  // total outage duration
};

// Per-report target: remaining time d - T (floored at one minute) or total d.
double realtime_target(const RealtimeExample& ex, size_t log_index, bool remaining);

// Mean NLL over all reports of all examples (no dropout).
double realtime_nll(const net::RealtimeModel& model,
                    const std::vector<RealtimeExample>& examples, bool remaining);

History train_realtime(net::RealtimeModel& model,
                       const std::vector<RealtimeExample>& train,
                       const std::vector<RealtimeExample>& val,
                       const TrainConfig& cfg);

struct SearchSpace {
  std::vector<int> vocab_cutoff = {1, 2, 4};
  std::vector<int> embed = {16, 32, 64};
  std::vector<int> state = {32, 64, 128};
  std::vector<int> bi_cell = {16, 32, 64};
  std::vector<int> heads = {1, 2};
  std::vector<int> max_epochs = {20, 30};
  std::vector<double> dropout = {0.0, 0.1, 0.3};
  std::vector<double> lr = {0.001};
  std::vector<char> layer_norm = {0, 1};

  void validate() const;  // every list non-empty
};

struct Trial {
  TrainConfig config;
  double val_nll;
};

// Samples `budget` configs uniformly from the space (seeds derived from rng),
// scores each with evaluate, and returns the leaderboard sorted ascending by
// validation NLL.
std::vector<Trial> random_search(const SearchSpace& space, int budget,
                                 const TrainConfig& base, num::Rng& rng,
                                 const std::function<double(const TrainConfig&)>& evaluate);

// Delimited tables for the CLI.
std::string history_table(const History& h);
std::string leaderboard_table(const std::vector<Trial>& trials);

}  // namespace outage::train
