#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "outage/autodiff.hpp"
#include "outage/gammadist.hpp"
#include "outage/textprep.hpp"

namespace outage::net {

using num::Param;
using num::ParamSet;
using num::Tensor;
using num::Value;

struct ModelSizes {
  int h1 = 32, h2 = 32;   // initial predictor hidden layers
  int embed = 32;         // word embedding width
  int bi_cell = 32;       // bi-GRU cell size c (word repr is 2c)
  int state = 64;         // update-RNN state size d
  int heads = 2;          // attention heads (1 or 2)
  bool layer_norm = true;
};

// Two ReLU layers into softplus Gamma heads. input_dim 0 gives the
// no-features configuration (a single learned distribution).
class InitialPredictor {
 public:
  InitialPredictor(int input_dim, int h1, int h2, uint64_t seed);

  std::pair<Value, Value> forward_ktheta(const std::vector<double>& f) const;
  gamma::GammaParams predict(const std::vector<double>& f) const;

  int input_dim() const { return input_dim_; }
  int h1() const { return h1_; }
  int h2() const { return h2_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  int input_dim_, h1_, h2_;
  mutable ParamSet params_;
};

// One variational dropout mask pair per GRU, sampled once per sequence and
// reused at every step. All-ones means disabled.
struct GruMasks {
  Tensor x;  // input connection
  Tensor h;  // recurrent connection
};

// Layer-normalized GRU gate parameters (pointers into a ParamSet).
struct GruParams {
  int in = 0, cell = 0;
  bool layer_norm = true;
  Param *wz = nullptr, *uz = nullptr, *bz = nullptr;
  Param *wr = nullptr, *ur = nullptr, *br = nullptr;
  Param *wh = nullptr, *uh = nullptr, *bh = nullptr;
  Param *gz = nullptr, *gr = nullptr, *gh = nullptr;  // layer-norm gains
};

struct EncodedLog {
  text::TokenSeq tokens;
  double elapsed_hours = 0.0;  // T since outage start
};

struct RealtimeDropout {
  GruMasks fwd, bwd, upd;
};

// Bi-GRU over embedded tokens plus multi-head attention queried from the
// update state, and the update GRU with Gamma heads.
class RealtimeModel {
 public:
  RealtimeModel(int feat_dim, int vocab_size, const ModelSizes& sizes, uint64_t seed);

  struct StepResult {
    Value o;
    Value k, theta;
    std::vector<Tensor> attn;  // per head, n x 1 raw weights
  };

  // One StepResult per repair log; logs must be in non-decreasing elapsed
  // order. Dropout masks apply only during training.
  std::vector<StepResult> forward(const std::vector<double>& f_std,
                                  const std::vector<EncodedLog>& logs,
                                  const RealtimeDropout* dropout = nullptr) const;

  // Exposed for unit tests: a single encoder pass over one log.
  struct EncodeResult {
    Value s;
    std::vector<Tensor> attn;
  };
  EncodeResult encode_log(const text::TokenSeq& tokens, const Value& o_prev,
                          const RealtimeDropout* dropout = nullptr) const;
  Value project_onset(const std::vector<double>& f_std) const;  // o0 = P f

  int feat_dim() const { return feat_dim_; }
  int vocab_size() const { return vocab_size_; }
  const ModelSizes& sizes() const { return sizes_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

 private:
  int feat_dim_, vocab_size_;
  ModelSizes sizes_;
  mutable ParamSet params_;
  GruParams fwd_, bwd_, upd_;
};

// Standalone layer-normalized GRU cell step (shared by encoder and update
// networks); exposed for gradient tests.
Value gru_cell(const GruParams& p, const Value& x, const Value& h_prev,
               const GruMasks* masks);
GruParams make_gru(ParamSet& ps, const std::string& prefix, int in, int cell,
                   bool layer_norm);

GruMasks ones_masks(int in, int cell);

struct SequencePrediction {
  std::vector<gamma::GammaParams> dists;          // initial + one per log
  std::vector<std::vector<Tensor>> attn;          // per log, per head
};

// Initial prediction from the feedforward model, then the update chain.
// f_initial may differ from f_update when the two models use different
// feature sets. Logs must be sorted by elapsed time.
SequencePrediction predict_sequence(const InitialPredictor& initial,
                                    const RealtimeModel& realtime,
                                    const std::vector<double>& f_initial,
                                    const std::vector<double>& f_update,
                                    const std::vector<EncodedLog>& logs);

}  // namespace outage::net
