#include "outage/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "outage/gammadist.hpp"

namespace outage::train {

using namespace outage::num;

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("TrainConfig: dropout must be in [0, 1)");
  if (sizes.heads < 1 || sizes.heads > 2)
    throw std::invalid_argument("TrainConfig: heads must be 1 or 2");
  if (vocab_cutoff < 0) throw std::invalid_argument("TrainConfig: vocab_cutoff < 0");
}

void adam_step(ParamSet& params, AdamState& st, double lr) {
  // a non-finite gradient anywhere voids the whole step
  bool finite = true;
  for (Param* p : params.all())
    for (double g : p->grad.v)
      if (!std::isfinite(g)) finite = false;
  if (!finite) {
    ++st.skipped;
    params.zero_grads();
    return;
  }
  ++st.t;
  double b1t = 1.0 - std::pow(st.beta1, double(st.t));
  double b2t = 1.0 - std::pow(st.beta2, double(st.t));
  for (Param* p : params.all()) {
    if (p->m.size() != p->data.size()) {
      p->m = Tensor(p->data.rows, p->data.cols);
      p->v2 = Tensor(p->data.rows, p->data.cols);
    }
    for (int i = 0; i < p->data.size(); ++i) {
      double g = p->grad.v[i];
      p->m.v[i] = st.beta1 * p->m.v[i] + (1.0 - st.beta1) * g;
      p->v2.v[i] = st.beta2 * p->v2.v[i] + (1.0 - st.beta2) * g * g;
      double mhat = p->m.v[i] / b1t;
      double vhat = p->v2.v[i] / b2t;
      p->data.v[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
  params.zero_grads();
}

double clip_grad_norm(ParamSet& params, double max_norm) {
  double sq = 0.0;
  for (Param* p : params.all())
    for (double g : p->grad.v) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double s = max_norm / norm;
    for (Param* p : params.all())
      for (double& g : p->grad.v) g *= s;
  }
  return norm;
}

net::GruMasks sample_masks(int in, int cell, double rate, num::Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("sample_masks: rate must be in [0, 1)");
  net::GruMasks m = net::ones_masks(in, cell);
  if (rate == 0.0) return m;
  double keep = 1.0 - rate;
  for (double& x : m.x.v) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
  for (double& x : m.h.v) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return m;
}

net::RealtimeDropout sample_dropout(const net::RealtimeModel& model, double rate,
                                    num::Rng& rng) {
  const net::ModelSizes& sz = model.sizes();
  net::RealtimeDropout d;
  d.fwd = sample_masks(sz.embed, sz.bi_cell, rate, rng);
  d.bwd = sample_masks(sz.embed, sz.bi_cell, rate, rng);
  int upd_in = model.feat_dim() + 2 * sz.bi_cell * sz.heads + 1;
  d.upd = sample_masks(upd_in, sz.state, rate, rng);
  return d;
}

double initial_nll(const net::InitialPredictor& model,
                   const std::vector<InitialExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("initial_nll: empty set");
  double total = 0.0;
  for (const auto& ex : examples)
    total += gamma::nll(ex.duration_hours, model.predict(ex.f));
  return total / double(examples.size());
}

namespace {

// Shared early-stopping epoch loop. run_epoch does one shuffled pass of
// updates and returns the mean train NLL; eval_val scores validation.
History fit_loop(ParamSet& params, const TrainConfig& cfg,
                 const std::function<double(num::Rng&)>& run_epoch,
                 const std::function<double()>& eval_val) {
  History h;
  std::map<std::string, Tensor> best = params.snapshot();
  double best_val = eval_val();
  h.best_val_nll = best_val;
  h.best_epoch = 0;
  int bad = 0;
  num::Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    num::Rng epoch_rng = order_rng.fork(uint64_t(epoch));
    double train_nll = run_epoch(epoch_rng);
    double val_nll = eval_val();
    h.epochs.push_back({epoch, train_nll, val_nll});
    if (val_nll < best_val) {
      best_val = val_nll;
      best = params.snapshot();
      h.best_epoch = epoch;
      h.best_val_nll = best_val;
      bad = 0;
    } else if (++bad >= cfg.patience) {
      break;
    }
  }
  params.restore(best);
  return h;
}

std::vector<size_t> shuffled_indices(size_t n, num::Rng& rng) {
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t(0));
  for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace

History train_initial(net::InitialPredictor& model,
                      const std::vector<InitialExample>& train,
                      const std::vector<InitialExample>& val,
                      const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty())
    throw std::invalid_argument("train_initial: empty split");
  AdamState adam;
  auto run_epoch = [&](num::Rng& rng) {
    double total = 0.0;
    for (size_t i : shuffled_indices(train.size(), rng)) {
      const InitialExample& ex = train[i];
      auto [k, theta] = model.forward_ktheta(ex.f);
      Value loss = gamma::nll_node(ex.duration_hours, k, theta);
      total += loss.scalar();
      num::backward(loss);
      if (cfg.clip_gradients) clip_grad_norm(model.params(), cfg.clip_norm);
      adam_step(model.params(), adam, cfg.lr);
    }
    return total / double(train.size());
  };
  auto eval_val = [&] { return initial_nll(model, val); };
  History h = fit_loop(model.params(), cfg, run_epoch, eval_val);
  h.skipped_updates = adam.skipped;
  return h;
}

double realtime_target(const RealtimeExample& ex, size_t log_index, bool remaining) {
  if (!remaining) return ex.duration_hours;
  double r = ex.duration_hours - ex.logs.at(log_index).elapsed_hours;
  return std::max(r, gamma::kMinDurationHours);
}

namespace {

Value realtime_loss(const net::RealtimeModel& model, const RealtimeExample& ex,
                    bool remaining, const net::RealtimeDropout* dropout) {
  if (ex.logs.empty())
    throw std::invalid_argument("realtime loss: outage has no repair logs");
  auto steps = model.forward(ex.f, ex.logs, dropout);
  Value total = num::constant_scalar(0.0);
  for (size_t t = 0; t < steps.size(); ++t) {
    double target = realtime_target(ex, t, remaining);
    total = num::add(total, gamma::nll_node(target, steps[t].k, steps[t].theta));
  }
  return total;
}

}  // namespace

double realtime_nll(const net::RealtimeModel& model,
                    const std::vector<RealtimeExample>& examples, bool remaining) {
  if (examples.empty()) throw std::invalid_argument("realtime_nll: empty set");
  double total = 0.0;
  size_t reports = 0;
  for (const auto& ex : examples) {
    total += realtime_loss(model, ex, remaining, nullptr).scalar();
    reports += ex.logs.size();
  }
  return total / double(reports);
}

History train_realtime(net::RealtimeModel& model,
                       const std::vector<RealtimeExample>& train,
                       const std::vector<RealtimeExample>& val,
                       const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty() || val.empty())
    throw std::invalid_argument("train_realtime: empty split");
  AdamState adam;
  num::Rng dropout_rng(cfg.seed ^ 0xda3e39cb94b95bdbull);
  auto run_epoch = [&](num::Rng& rng) {
    double total = 0.0;
    size_t reports = 0;
    for (size_t i : shuffled_indices(train.size(), rng)) {
      const RealtimeExample& ex = train[i];
      net::RealtimeDropout masks;
      const net::RealtimeDropout* mp = nullptr;
      if (cfg.dropout > 0.0) {
        masks = sample_dropout(model, cfg.dropout, dropout_rng);
        mp = &masks;
      }
      Value loss = realtime_loss(model, ex, cfg.target_remaining, mp);
      total += loss.scalar();
      reports += ex.logs.size();
      num::backward(loss);
      if (cfg.clip_gradients) clip_grad_norm(model.params(), cfg.clip_norm);
      adam_step(model.params(), adam, cfg.lr);
    }
    return total / double(reports);
  };
  auto eval_val = [&] { return realtime_nll(model, val, cfg.target_remaining); };
  History h = fit_loop(model.params(), cfg, run_epoch, eval_val);
  h.skipped_updates = adam.skipped;
  return h;
}

void SearchSpace::validate() const {
  if (vocab_cutoff.empty() || embed.empty() || state.empty() || bi_cell.empty() ||
      heads.empty() || max_epochs.empty() || dropout.empty() || lr.empty() ||
      layer_norm.empty())
    throw std::invalid_argument("SearchSpace: every choice list must be non-empty");
}

std::vector<Trial> random_search(const SearchSpace& space, int budget,
                                 const TrainConfig& base, num::Rng& rng,
                                 const std::function<double(const TrainConfig&)>& evaluate) {
  space.validate();
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  auto pick_i = [&](const std::vector<int>& v) { return v[rng.below(v.size())]; };
  auto pick_d = [&](const std::vector<double>& v) { return v[rng.below(v.size())]; };
  std::vector<Trial> trials;
  for (int t = 0; t < budget; ++t) {
    TrainConfig cfg = base;
    cfg.vocab_cutoff = pick_i(space.vocab_cutoff);
    cfg.sizes.embed = pick_i(space.embed);
    cfg.sizes.state = pick_i(space.state);
    cfg.sizes.bi_cell = pick_i(space.bi_cell);
    cfg.sizes.heads = pick_i(space.heads);
    cfg.max_epochs = pick_i(space.max_epochs);
    cfg.dropout = pick_d(space.dropout);
    cfg.lr = pick_d(space.lr);
    cfg.sizes.layer_norm = space.layer_norm[rng.below(space.layer_norm.size())] != 0;
    cfg.seed = base.seed + uint64_t(t) * 1000003ull;
    trials.push_back({cfg, evaluate(cfg)});
  }
  std::stable_sort(trials.begin(), trials.end(),
                   [](const Trial& a, const Trial& b) { return a.val_nll < b.val_nll; });
  return trials;
}

std::string history_table(const History& h) {
  std::ostringstream out;
  out << "epoch\ttrain_nll\tval_nll\n";
  for (const EpochStats& e : h.epochs)
    out << e.epoch << "\t" << e.train_nll << "\t" << e.val_nll << "\n";
  out << "# best epoch " << h.best_epoch << " val_nll " << h.best_val_nll << "\n";
  return out.str();
}

std::string leaderboard_table(const std::vector<Trial>& trials) {
  std::ostringstream out;
  out << "val_nll\tlr\tdropout\tcutoff\tembed\tbi_cell\tstate\theads\tlayer_norm\tepochs\tseed\n";
  for (const Trial& t : trials)
    out << t.val_nll << "\t" << t.config.lr << "\t" << t.config.dropout << "\t"
        << t.config.vocab_cutoff << "\t" << t.config.sizes.embed << "\t"
        << t.config.sizes.bi_cell << "\t" << t.config.sizes.state << "\t"
        << t.config.sizes.heads << "\t" << (t.config.sizes.layer_norm ? 1 : 0) << "\t"
        << t.config.max_epochs << "\t" << t.config.seed << "\n";
  return out.str();
}

}  // namespace outage::train
