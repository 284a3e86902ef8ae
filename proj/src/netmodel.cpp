#include "outage/netmodel.hpp"

#include <cmath>

namespace outage::net {

using namespace outage::num;

namespace {

Value vec_const(const std::vector<double>& f) {
  return constant(Tensor::column(f));
}

Value maybe_ln(const Value& pre, const Param* gain, bool use_ln) {
  if (!use_ln) return pre;
  Value normed = layer_norm(pre);
  return mul(leaf(*const_cast<Param*>(gain)), normed);
}

}  // namespace

// --- InitialPredictor -----------------------------------------------------

InitialPredictor::InitialPredictor(int input_dim, int h1, int h2, uint64_t seed)
    : input_dim_(input_dim), h1_(h1), h2_(h2), params_(seed) {
  params_.add("init.w1", h1, input_dim, Init::Glorot);
  params_.add("init.b1", h1, 1, Init::Zeros);
  params_.add("init.w2", h2, h1, Init::Glorot);
  params_.add("init.b2", h2, 1, Init::Zeros);
  params_.add("init.wk", 1, h2, Init::Glorot);
  params_.add("init.bk", 1, 1, Init::Zeros);
  params_.add("init.wtheta", 1, h2, Init::Glorot);
  params_.add("init.btheta", 1, 1, Init::Zeros);
}

std::pair<Value, Value> InitialPredictor::forward_ktheta(
    const std::vector<double>& f) const {
  if (int(f.size()) != input_dim_)
    throw ShapeError("InitialPredictor: expected " + std::to_string(input_dim_) +
                     " features, got " + std::to_string(f.size()));
  Value x = vec_const(f);
  Value g1 = relu(add(matmul(leaf(params_.get("init.w1")), x), leaf(params_.get("init.b1"))));
  Value g2 = relu(add(matmul(leaf(params_.get("init.w2")), g1), leaf(params_.get("init.b2"))));
  Value k = softplus(add(matmul(leaf(params_.get("init.wk")), g2), leaf(params_.get("init.bk"))));
  Value theta = softplus(
      add(matmul(leaf(params_.get("init.wtheta")), g2), leaf(params_.get("init.btheta"))));
  return {k, theta};
}

gamma::GammaParams InitialPredictor::predict(const std::vector<double>& f) const {
  auto [k, theta] = forward_ktheta(f);
  return {k.scalar(), theta.scalar()};
}

// --- GRU ------------------------------------------------------------------

GruParams make_gru(ParamSet& ps, const std::string& prefix, int in, int cell,
                   bool layer_norm) {
  GruParams p;
  p.in = in;
  p.cell = cell;
  p.layer_norm = layer_norm;
  p.wz = &ps.add(prefix + ".wz", cell, in, Init::Glorot);
  p.uz = &ps.add(prefix + ".uz", cell, cell, Init::Glorot);
  p.bz = &ps.add(prefix + ".bz", cell, 1, Init::Zeros);
  p.wr = &ps.add(prefix + ".wr", cell, in, Init::Glorot);
  p.ur = &ps.add(prefix + ".ur", cell, cell, Init::Glorot);
  p.br = &ps.add(prefix + ".br", cell, 1, Init::Zeros);
  p.wh = &ps.add(prefix + ".wh", cell, in, Init::Glorot);
  p.uh = &ps.add(prefix + ".uh", cell, cell, Init::Glorot);
  p.bh = &ps.add(prefix + ".bh", cell, 1, Init::Zeros);
  if (layer_norm) {
    auto ones = [&](const std::string& name) {
      Param& g = ps.add(name, cell, 1, Init::Zeros);
      for (double& x : g.data.v) x = 1.0;
      return &g;
    };
    p.gz = ones(prefix + ".lngz");
    p.gr = ones(prefix + ".lngr");
    p.gh = ones(prefix + ".lngh");
  } else {
    p.gz = p.gr = p.gh = nullptr;
  }
  return p;
}

GruMasks ones_masks(int in, int cell) {
  return GruMasks{Tensor(in, 1, 1.0), Tensor(cell, 1, 1.0)};
}

Value gru_cell(const GruParams& p, const Value& x_in, const Value& h_in,
               const GruMasks* masks) {
  if (x_in.rows() != p.in || x_in.cols() != 1)
    throw ShapeError("gru_cell: input expects " + std::to_string(p.in) + "x1, got " +
                     x_in.tensor().shape_str());
  if (h_in.rows() != p.cell || h_in.cols() != 1)
    throw ShapeError("gru_cell: state expects " + std::to_string(p.cell) + "x1, got " +
                     h_in.tensor().shape_str());
  Value x = x_in, h = h_in;
  if (masks) {
    x = mul(x, constant(masks->x));
    h = mul(h, constant(masks->h));
  }
  auto lp = [](Param* q) { return leaf(*q); };
  Value z = sigmoid(add(maybe_ln(add(matmul(lp(p.wz), x), matmul(lp(p.uz), h)), p.gz,
                                 p.layer_norm),
                        lp(p.bz)));
  Value r = sigmoid(add(maybe_ln(add(matmul(lp(p.wr), x), matmul(lp(p.ur), h)), p.gr,
                                 p.layer_norm),
                        lp(p.br)));
  Value htil = tanh_v(add(maybe_ln(add(matmul(lp(p.wh), x), mul(r, matmul(lp(p.uh), h))),
                                   p.gh, p.layer_norm),
                          lp(p.bh)));
  Value one_minus_z = add_const(neg(z), 1.0);
  return add(mul(one_minus_z, h_in), mul(z, htil));
}

// --- RealtimeModel --------------------------------------------------------

RealtimeModel::RealtimeModel(int feat_dim, int vocab_size, const ModelSizes& sizes,
                             uint64_t seed)
    : feat_dim_(feat_dim), vocab_size_(vocab_size), sizes_(sizes), params_(seed) {
  if (sizes.heads < 1 || sizes.heads > 2)
    throw std::invalid_argument("RealtimeModel: heads must be 1 or 2");
  int c = sizes.bi_cell, d = sizes.state, e = sizes.embed;
  params_.add("enc.embed", vocab_size, e, Init::Uniform05);
  fwd_ = make_gru(params_, "enc.fwd", e, c, sizes.layer_norm);
  bwd_ = make_gru(params_, "enc.bwd", e, c, sizes.layer_norm);
  for (int hd = 0; hd < sizes.heads; ++hd) {
    std::string p = "enc.head" + std::to_string(hd);
    params_.add(p + ".m1", 2 * c, d, Init::Glorot);
    params_.add(p + ".b1", 2 * c, 1, Init::Zeros);
    params_.add(p + ".m2", 2 * c, 2 * c, Init::Glorot);
    params_.add(p + ".b2", 1, 2 * c, Init::Zeros);
  }
  params_.add("upd.proj", d, feat_dim, Init::Glorot);
  int upd_in = feat_dim + 2 * c * sizes.heads + 1;  // [f, s_t, log(T+1)]
  upd_ = make_gru(params_, "upd.gru", upd_in, d, sizes.layer_norm);
  params_.add("upd.vk", 1, d, Init::Glorot);
  params_.add("upd.betak", 1, 1, Init::Zeros);
  params_.add("upd.vtheta", 1, d, Init::Glorot);
  params_.add("upd.betatheta", 1, 1, Init::Zeros);
}

Value RealtimeModel::project_onset(const std::vector<double>& f_std) const {
  if (int(f_std.size()) != feat_dim_)
    throw ShapeError("RealtimeModel: expected " + std::to_string(feat_dim_) +
                     " features, got " + std::to_string(f_std.size()));
  return matmul(leaf(params_.get("upd.proj")), vec_const(f_std));
}

RealtimeModel::EncodeResult RealtimeModel::encode_log(
    const text::TokenSeq& tokens, const Value& o_prev,
    const RealtimeDropout* dropout) const {
  if (tokens.ids.empty())
    throw std::invalid_argument("encode_log: empty token sequence");
  int n = int(tokens.ids.size());
  int c = sizes_.bi_cell;
  Param& embed = params_.get("enc.embed");

  std::vector<Value> embs(n);
  for (int i = 0; i < n; ++i) {
    if (tokens.ids[i] < 0 || tokens.ids[i] >= vocab_size_)
      throw ShapeError("encode_log: token id out of vocabulary range");
    embs[i] = embed_row(embed, tokens.ids[i]);
  }

  std::vector<Value> hf(n), hb(n);
  Value h = constant(Tensor(c, 1));
  for (int i = 0; i < n; ++i) {
    h = gru_cell(fwd_, embs[i], h, dropout ? &dropout->fwd : nullptr);
    hf[i] = h;
  }
  h = constant(Tensor(c, 1));
  for (int i = n - 1; i >= 0; --i) {
    h = gru_cell(bwd_, embs[i], h, dropout ? &dropout->bwd : nullptr);
    hb[i] = h;
  }
  std::vector<Value> hi(n);
  for (int i = 0; i < n; ++i) hi[i] = concat_rows({hf[i], hb[i]});
  Value H = stack_rows(hi);  // n x 2c

  EncodeResult out;
  std::vector<Value> head_outputs;
  for (int hd = 0; hd < sizes_.heads; ++hd) {
    std::string p = "enc.head" + std::to_string(hd);
    Value q = relu(add(matmul(leaf(params_.get(p + ".m1")), o_prev),
                       leaf(params_.get(p + ".b1"))));  // 2c x 1
    Value Y = relu(add_rowvec(matmul(H, leaf(params_.get(p + ".m2"))),
                              leaf(params_.get(p + ".b2"))));  // n x 2c
    Value scores = matmul(Y, q);                               // n x 1
    Value alpha = softmax(scores);
    head_outputs.push_back(matmul(transpose(H), alpha));  // 2c x 1
    out.attn.push_back(alpha.tensor());
  }
  out.s = concat_rows(head_outputs);  // 2cH x 1
  return out;
}

std::vector<RealtimeModel::StepResult> RealtimeModel::forward(
    const std::vector<double>& f_std, const std::vector<EncodedLog>& logs,
    const RealtimeDropout* dropout) const {
  for (size_t i = 1; i < logs.size(); ++i)
    if (logs[i].elapsed_hours < logs[i - 1].elapsed_hours)
      throw std::invalid_argument("RealtimeModel: logs not time-ordered");
  Value f = vec_const(f_std);
  Value o = project_onset(f_std);
  std::vector<StepResult> out;
  for (const EncodedLog& log : logs) {
    if (log.elapsed_hours < 0.0)
      throw std::invalid_argument("RealtimeModel: negative elapsed time");
    EncodeResult enc = encode_log(log.tokens, o, dropout);
    Value elapsed = constant_scalar(std::log(log.elapsed_hours + 1.0));
    Value input = concat_rows({f, enc.s, elapsed});
    o = gru_cell(upd_, input, o, dropout ? &dropout->upd : nullptr);
    StepResult step;
    step.o = o;
    step.k = softplus(add(matmul(leaf(params_.get("upd.vk")), o),
                          leaf(params_.get("upd.betak"))));
    step.theta = softplus(add(matmul(leaf(params_.get("upd.vtheta")), o),
                              leaf(params_.get("upd.betatheta"))));
    step.attn = std::move(enc.attn);
    out.push_back(std::move(step));
  }
  return out;
}

SequencePrediction predict_sequence(const InitialPredictor& initial,
                                    const RealtimeModel& realtime,
                                    const std::vector<double>& f_initial,
                                    const std::vector<double>& f_update,
                                    const std::vector<EncodedLog>& logs) {
  SequencePrediction out;
  out.dists.push_back(initial.predict(f_initial));
  auto steps = realtime.forward(f_update, logs, nullptr);
  for (auto& s : steps) {
    out.dists.emplace_back(s.k.scalar(), s.theta.scalar());
    out.attn.push_back(std::move(s.attn));
  }
  return out;
}

}  // namespace outage::net
