#include "outage/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace outage::num {

namespace {

void check_finite(const Tensor& t, const char* op) {
  for (double x : t.v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite value produced by op '") + op + "'");
    }
  }
}

NodePtr make_node(Tensor val, std::vector<NodePtr> parents,
                  std::function<void(Node&)> back, const char* op) {
  check_finite(val, op);
  auto n = std::make_shared<Node>();
  n->grad = Tensor(val.rows, val.cols);
  n->val = std::move(val);
  n->parents = std::move(parents);
  n->back = std::move(back);
  n->op = op;
  return n;
}

void require_same_shape(const Value& a, const Value& b, const char* op) {
  if (!a.tensor().same_shape(b.tensor())) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.tensor().shape_str() +
                     " vs " + b.tensor().shape_str());
  }
}

// Elementwise unary op helper: f(x) and df(x, y) where y = f(x).
Value unary(const Value& a, const char* op, double (*f)(double),
            double (*df)(double, double)) {
  Tensor out(a.rows(), a.cols());
  for (int i = 0; i < out.size(); ++i) out.v[i] = f(a.tensor().v[i]);
  auto pa = a.node();
  return Value(make_node(
      std::move(out), {pa},
      [pa, df](Node& n) {
        for (int i = 0; i < n.val.size(); ++i)
          pa->grad.v[i] += df(pa->val.v[i], n.val.v[i]) * n.grad.v[i];
      },
      op));
}

}  // namespace

double Value::scalar() const {
  if (!n_ || n_->val.size() != 1)
    throw ShapeError("scalar(): value is not 1x1");
  return n_->val.v[0];
}

Value constant(Tensor t) {
  check_finite(t, "constant");
  return Value(make_node(std::move(t), {}, nullptr, "constant"));
}

Value constant_scalar(double x) { return constant(Tensor::scalar(x)); }

Value leaf(Param& p) {
  check_finite(p.data, "leaf");
  Param* pp = &p;
  auto n = make_node(
      p.data, {},
      [pp](Node& n) {
        for (int i = 0; i < n.grad.size(); ++i) pp->grad.v[i] += n.grad.v[i];
      },
      "param");
  return Value(n);
}

Value matmul(const Value& a, const Value& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + a.tensor().shape_str() +
                     " vs " + b.tensor().shape_str());
  }
  const Tensor& A = a.tensor();
  const Tensor& B = b.tensor();
  Tensor out(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      double aik = A.v[size_t(i) * A.cols + k];
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j)
        out.v[size_t(i) * B.cols + j] += aik * B.v[size_t(k) * B.cols + j];
    }
  auto pa = a.node(), pb = b.node();
  return Value(make_node(
      std::move(out), {pa, pb},
      [pa, pb](Node& n) {
        const Tensor& G = n.grad;
        const Tensor& A = pa->val;
        const Tensor& B = pb->val;
        // dA += G * B^T
        for (int i = 0; i < A.rows; ++i)
          for (int k = 0; k < A.cols; ++k) {
            double s = 0.0;
            for (int j = 0; j < B.cols; ++j)
              s += G.v[size_t(i) * G.cols + j] * B.v[size_t(k) * B.cols + j];
            pa->grad.v[size_t(i) * A.cols + k] += s;
          }
        // dB += A^T * G
        for (int k = 0; k < B.rows; ++k)
          for (int j = 0; j < B.cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < A.rows; ++i)
              s += A.v[size_t(i) * A.cols + k] * G.v[size_t(i) * G.cols + j];
            pb->grad.v[size_t(k) * B.cols + j] += s;
          }
      },
      "matmul"));
}

Value transpose(const Value& a) {
  const Tensor& A = a.tensor();
  Tensor out(A.cols, A.rows);
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out.at(j, i) = A.at(i, j);
  auto pa = a.node();
  return Value(make_node(
      std::move(out), {pa},
      [pa](Node& n) {
        for (int i = 0; i < n.grad.rows; ++i)
          for (int j = 0; j < n.grad.cols; ++j) pa->grad.at(j, i) += n.grad.at(i, j);
      },
      "transpose"));
}

Value add(const Value& a, const Value& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.tensor();
  for (int i = 0; i < out.size(); ++i) out.v[i] += b.tensor().v[i];
  auto pa = a.node(), pb = b.node();
  return Value(make_node(
      std::move(out), {pa, pb},
      [pa, pb](Node& n) {
        for (int i = 0; i < n.grad.size(); ++i) {
          pa->grad.v[i] += n.grad.v[i];
          pb->grad.v[i] += n.grad.v[i];
        }
      },
      "add"));
}

Value sub(const Value& a, const Value& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.tensor();
  for (int i = 0; i < out.size(); ++i) out.v[i] -= b.tensor().v[i];
  auto pa = a.node(), pb = b.node();
  return Value(make_node(
      std::move(out), {pa, pb},
      [pa, pb](Node& n) {
        for (int i = 0; i < n.grad.size(); ++i) {
          pa->grad.v[i] += n.grad.v[i];
          pb->grad.v[i] -= n.grad.v[i];
        }
      },
      "sub"));
}

Value mul(const Value& a, const Value& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.tensor();
  for (int i = 0; i < out.size(); ++i) out.v[i] *= b.tensor().v[i];
  auto pa = a.node(), pb = b.node();
  return Value(make_node(
      std::move(out), {pa, pb},
      [pa, pb](Node& n) {
        for (int i = 0; i < n.grad.size(); ++i) {
          pa->grad.v[i] += pb->val.v[i] * n.grad.v[i];
          pb->grad.v[i] += pa->val.v[i] * n.grad.v[i];
        }
      },
      "mul"));
}

Value add_rowvec(const Value& m, const Value& row) {
  if (row.rows() != 1 || row.cols() != m.cols()) {
    throw ShapeError("add_rowvec: need 1x" + std::to_string(m.cols()) + ", got " +
                     row.tensor().shape_str());
  }
  Tensor out = m.tensor();
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j) out.at(i, j) += row.tensor().v[j];
  auto pm = m.node(), pr = row.node();
  return Value(make_node(
      std::move(out), {pm, pr},
      [pm, pr](Node& n) {
        for (int i = 0; i < n.grad.rows; ++i)
          for (int j = 0; j < n.grad.cols; ++j) {
            pm->grad.at(i, j) += n.grad.at(i, j);
            pr->grad.v[j] += n.grad.at(i, j);
          }
      },
      "add_rowvec"));
}

Value scale(const Value& a, double c) {
  Tensor out = a.tensor();
  for (double& x : out.v) x *= c;
  auto pa = a.node();
  return Value(make_node(
      std::move(out), {pa},
      [pa, c](Node& n) {
        for (int i = 0; i < n.grad.size(); ++i) pa->grad.v[i] += c * n.grad.v[i];
      },
      "scale"));
}

Value add_const(const Value& a, double c) {
  Tensor out = a.tensor();
  for (double& x : out.v) x += c;
  auto pa = a.node();
  return Value(make_node(
      std::move(out), {pa},
      [pa](Node& n) {
        for (int i = 0; i < n.grad.size(); ++i) pa->grad.v[i] += n.grad.v[i];
      },
      "add_const"));
}

Value neg(const Value& a) { return scale(a, -1.0); }

Value relu(const Value& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });  // subgradient at 0 is 0
}

Value softplus(const Value& a) {
  return unary(
      a, "softplus",
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Value sigmoid(const Value& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Value tanh_v(const Value& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Value log_v(const Value& a) {
  for (double x : a.tensor().v)
    if (x <= 0.0) throw NumericError("log: non-positive input");
  return unary(
      a, "log", [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Value exp_v(const Value& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Value reciprocal(const Value& a) {
  for (double x : a.tensor().v)
    if (x == 0.0) throw NumericError("reciprocal: zero input");
  return unary(
      a, "reciprocal", [](double x) { return 1.0 / x; },
      [](double, double y) { return -y * y; });
}

Value lgamma_v(const Value& a) {
  for (double x : a.tensor().v)
    if (x <= 0.0) throw NumericError("lgamma: non-positive input");
  return unary(
      a, "lgamma", [](double x) { return lgamma_lanczos(x); },
      [](double x, double) { return digamma(x); });
}

namespace {
// softmax over a contiguous stride-1 range
void softmax_range(const double* in, double* out, int n) {
  double mx = in[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    z += out[i];
  }
  for (int i = 0; i < n; ++i) out[i] /= z;
}
}  // namespace

Value softmax(const Value& a) {
  const Tensor& A = a.tensor();
  if (A.size() == 0) throw ShapeError("softmax: empty input");
  Tensor out(A.rows, A.cols);
  bool column = (A.cols == 1);
  if (column) {
    softmax_range(A.v.data(), out.v.data(), A.rows);
  } else {
    for (int i = 0; i < A.rows; ++i)
      softmax_range(&A.v[size_t(i) * A.cols], &out.v[size_t(i) * A.cols], A.cols);
  }
  auto pa = a.node();
  return Value(make_node(
      std::move(out), {pa},
      [pa, column](Node& n) {
        auto backprop = [](const double* y, const double* g, double* dx, int len) {
          double dot = 0.0;
          for (int i = 0; i < len; ++i) dot += y[i] * g[i];
          for (int i = 0; i < len; ++i) dx[i] += y[i] * (g[i] - dot);
        };
        if (column) {
          backprop(n.val.v.data(), n.grad.v.data(), pa->grad.v.data(), n.val.rows);
        } else {
          for (int i = 0; i < n.val.rows; ++i)
            backprop(&n.val.v[size_t(i) * n.val.cols], &n.grad.v[size_t(i) * n.val.cols],
                     &pa->grad.v[size_t(i) * n.val.cols], n.val.cols);
        }
      },
      "softmax"));
}

Value layer_norm(const Value& a) {
  if (a.cols() != 1) throw ShapeError("layer_norm: expects a column vector");
  const Tensor& A = a.tensor();
  int n = A.rows;
  double mean = 0.0;
  for (double x : A.v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : A.v) var += (x - mean) * (x - mean);
  var /= n;
  double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
  Tensor out(n, 1);
  for (int i = 0; i < n; ++i) out.v[i] = (A.v[i] - mean) * inv_std;
  auto pa = a.node();
  return Value(make_node(
      std::move(out), {pa},
      [pa, inv_std](Node& nd) {
        int n = nd.val.rows;
        double gmean = 0.0, gxmean = 0.0;
        for (int i = 0; i < n; ++i) {
          gmean += nd.grad.v[i];
          gxmean += nd.grad.v[i] * nd.val.v[i];
        }
        gmean /= n;
        gxmean /= n;
        for (int i = 0; i < n; ++i)
          pa->grad.v[i] += inv_std * (nd.grad.v[i] - gmean - nd.val.v[i] * gxmean);
      },
      "layer_norm"));
}

Value sum(const Value& a) {
  double s = 0.0;
  for (double x : a.tensor().v) s += x;
  auto pa = a.node();
  return Value(make_node(
      Tensor::scalar(s), {pa},
      [pa](Node& n) {
        double g = n.grad.v[0];
        for (int i = 0; i < pa->grad.size(); ++i) pa->grad.v[i] += g;
      },
      "sum"));
}

Value concat_rows(const std::vector<Value>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  int total = 0;
  for (const Value& p : parts) {
    if (p.cols() != 1) throw ShapeError("concat_rows: expects column vectors");
    total += p.rows();
  }
  Tensor out(total, 1);
  int off = 0;
  std::vector<NodePtr> ps;
  for (const Value& p : parts) {
    std::copy(p.tensor().v.begin(), p.tensor().v.end(), out.v.begin() + off);
    off += p.rows();
    ps.push_back(p.node());
  }
  return Value(make_node(
      std::move(out), ps,
      [ps](Node& n) {
        int off = 0;
        for (const NodePtr& p : ps) {
          for (int i = 0; i < p->grad.rows; ++i) p->grad.v[i] += n.grad.v[off + i];
          off += p->grad.rows;
        }
      },
      "concat_rows"));
}

Value stack_rows(const std::vector<Value>& vecs) {
  if (vecs.empty()) throw ShapeError("stack_rows: no inputs");
  int d = vecs[0].rows();
  for (const Value& v : vecs) {
    if (v.cols() != 1 || v.rows() != d)
      throw ShapeError("stack_rows: inputs must all be " + std::to_string(d) + "x1");
  }
  Tensor out(int(vecs.size()), d);
  std::vector<NodePtr> ps;
  for (size_t i = 0; i < vecs.size(); ++i) {
    std::copy(vecs[i].tensor().v.begin(), vecs[i].tensor().v.end(),
              out.v.begin() + i * d);
    ps.push_back(vecs[i].node());
  }
  return Value(make_node(
      std::move(out), ps,
      [ps, d](Node& n) {
        for (size_t i = 0; i < ps.size(); ++i)
          for (int j = 0; j < d; ++j) ps[i]->grad.v[j] += n.grad.v[i * d + j];
      },
      "stack_rows"));
}

Value embed_row(Param& table, int row) {
  if (row < 0 || row >= table.data.rows)
    throw ShapeError("embed_row: index " + std::to_string(row) + " out of range for " +
                     table.data.shape_str());
  int e = table.data.cols;
  Tensor out(e, 1);
  for (int j = 0; j < e; ++j) out.v[j] = table.data.at(row, j);
  Param* tp = &table;
  return Value(make_node(
      std::move(out), {},
      [tp, row, e](Node& n) {
        for (int j = 0; j < e; ++j) tp->grad.at(row, j) += n.grad.v[j];
      },
      "embed_row"));
}

void backward(const Value& root) {
  if (!root.valid() || root.tensor().size() != 1)
    throw ShapeError("backward: root must be a 1x1 scalar");
  // Topological order by iterative DFS over parents.
  std::vector<Node*> topo;
  std::unordered_set<Node*> visited;
  struct Frame {
    NodePtr node;
    size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({root.node()});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      NodePtr p = f.node->parents[f.next++];
      if (visited.insert(p.get()).second) stack.push_back({p});
    } else {
      topo.push_back(f.node.get());
      stack.pop_back();
    }
  }
  root.node()->grad.v[0] = 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node* n = *it;
    if (n->back) n->back(*n);
  }
}

// --- special functions ----------------------------------------------------

double lgamma_lanczos(double x) {
  // Lanczos approximation, g = 7, 9 coefficients.
  static const double g = 7.0;
  static const double coef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Reflection formula.
    return std::log(M_PI / std::sin(M_PI * x)) - lgamma_lanczos(1.0 - x);
  }
  double z = x - 1.0;
  double a = coef[0];
  for (int i = 1; i < 9; ++i) a += coef[i] / (z + i);
  double t = z + g + 0.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

double digamma(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw NumericError("digamma: non-positive integer argument");
  double result = 0.0;
  // Recurrence to push the argument above 12, then the asymptotic series.
  while (x < 12.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 -
                                            inv2 * (1.0 / 132.0 -
                                                    inv2 * (691.0 / 32760.0))))));
  return result;
}

// --- ParamSet -------------------------------------------------------------

Param& ParamSet::add(const std::string& name, int rows, int cols, Init init) {
  if (params_.count(name))
    throw std::invalid_argument("ParamSet: duplicate parameter '" + name + "'");
  auto p = std::make_unique<Param>();
  p->name = name;
  p->data = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  Rng rng = Rng(seed_).fork(fnv1a(name));
  switch (init) {
    case Init::Zeros:
      break;
    case Init::Glorot: {
      double lim = std::sqrt(6.0 / (rows + cols));
      for (double& x : p->data.v) x = rng.uniform(-lim, lim);
      break;
    }
    case Init::Uniform05:
      for (double& x : p->data.v) x = rng.uniform(-0.05, 0.05);
      break;
  }
  Param& ref = *p;
  params_[name] = std::move(p);
  return ref;
}

Param& ParamSet::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::invalid_argument("ParamSet: unknown parameter '" + name + "'");
  return *it->second;
}

const Param& ParamSet::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw std::invalid_argument("ParamSet: unknown parameter '" + name + "'");
  return *it->second;
}

void ParamSet::zero_grads() {
  for (auto& [_, p] : params_) p->grad.zero();
}

std::map<std::string, Tensor> ParamSet::snapshot() const {
  std::map<std::string, Tensor> out;
  for (auto& [name, p] : params_) out[name] = p->data;
  return out;
}

void ParamSet::restore(const std::map<std::string, Tensor>& snap) {
  for (auto& [name, t] : snap) get(name).data = t;
}

std::vector<Param*> ParamSet::all() {
  std::vector<Param*> out;
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ParamSet::all() const {
  std::vector<const Param*> out;
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

void ParamSet::save(const std::string& path, uint64_t config_hash) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out << "outage-checkpoint v1\n";
  out << "seed " << seed_ << "\n";
  out << "confighash " << config_hash << "\n";
  char buf[64];
  for (const Param* p : all()) {
    out << "param " << p->name << " " << p->data.rows << " " << p->data.cols << "\n";
    for (int i = 0; i < p->data.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p->data.v[i]);
      out << buf << (i + 1 == p->data.size() ? "\n" : " ");
    }
    if (p->data.size() == 0) out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParamSet ParamSet::load(const std::string& path, uint64_t* config_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "outage-checkpoint v1")
    throw std::runtime_error("bad checkpoint header in " + path);
  uint64_t seed = 0, chash = 0;
  std::string word;
  in >> word >> seed;
  if (word != "seed") throw std::runtime_error("bad checkpoint (seed) in " + path);
  in >> word >> chash;
  if (word != "confighash") throw std::runtime_error("bad checkpoint (confighash) in " + path);
  if (config_hash) *config_hash = chash;
  ParamSet ps(seed);
  while (in >> word) {
    if (word != "param") throw std::runtime_error("bad checkpoint record in " + path);
    std::string name;
    int rows, cols;
    in >> name >> rows >> cols;
    Param& p = ps.add(name, rows, cols, Init::Zeros);
    for (int i = 0; i < rows * cols; ++i) in >> p.data.v[i];
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  }
  return ps;
}

double grad_check(const std::function<Value()>& loss_builder, ParamSet& params,
                  double eps) {
  params.zero_grads();
  Value root = loss_builder();
  double base = root.scalar();
  {
    Value again = loss_builder();
    if (again.scalar() != base)
      throw std::runtime_error("grad_check: loss builder is not deterministic");
  }
  backward(root);
  std::map<std::string, Tensor> analytic;
  for (Param* p : params.all()) analytic[p->name] = p->grad;

  double max_rel = 0.0;
  for (Param* p : params.all()) {
    for (int i = 0; i < p->data.size(); ++i) {
      double orig = p->data.v[i];
      p->data.v[i] = orig + eps;
      double up = loss_builder().scalar();
      p->data.v[i] = orig - eps;
      double dn = loss_builder().scalar();
      p->data.v[i] = orig;
      double numeric = (up - dn) / (2.0 * eps);
      double g = analytic[p->name].v[i];
      double rel = std::abs(g - numeric) /
                   std::max(1e-8, std::abs(g) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace outage::num
