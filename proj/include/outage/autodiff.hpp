#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "outage/tensor.hpp"

namespace outage::num {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Param {
  std::string name;
  Tensor data;
  Tensor grad;
  // Adam moments, owned here so optimizer state follows the parameter.
  Tensor m, v2;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor val;
  Tensor grad;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> back;  // distributes this->grad into parents / param grads
  const char* op = "leaf";
};

// Handle to a node in a define-by-run graph. Graphs are rebuilt per example
// and freed when the last handle goes away.
class Value {
 public:
  Value() = default;
  explicit Value(NodePtr n) : n_(std::move(n)) {}

  bool valid() const { return n_ != nullptr; }
  const Tensor& tensor() const { return n_->val; }
  const Tensor& grad() const { return n_->grad; }
  int rows() const { return n_->val.rows; }
  int cols() const { return n_->val.cols; }
  double scalar() const;
  NodePtr node() const { return n_; }

 private:
  NodePtr n_;
};

// Leaves
Value constant(Tensor t);
Value constant_scalar(double x);
Value leaf(Param& p);

// Primitives
Value matmul(const Value& a, const Value& b);
Value transpose(const Value& a);
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);  // elementwise
Value add_rowvec(const Value& m, const Value& row);  // broadcast 1 x c over rows
Value scale(const Value& a, double c);
Value add_const(const Value& a, double c);
Value neg(const Value& a);
Value relu(const Value& a);
Value softplus(const Value& a);
Value sigmoid(const Value& a);
Value tanh_v(const Value& a);
Value log_v(const Value& a);
Value exp_v(const Value& a);
Value reciprocal(const Value& a);
Value lgamma_v(const Value& a);
Value softmax(const Value& a);    // n x 1: over rows; otherwise per-row over columns
Value layer_norm(const Value& a); // n x 1: normalize to zero mean / unit variance, eps 1e-5
Value sum(const Value& a);        // -> 1 x 1
Value concat_rows(const std::vector<Value>& parts);      // column vectors stacked
Value stack_rows(const std::vector<Value>& vecs);        // d x 1 vectors -> n x d matrix
Value embed_row(Param& table, int row);                  // -> cols x 1

// Backpropagate from a scalar root. Gradients accumulate into Param::grad.
void backward(const Value& root);

inline constexpr double kLayerNormEps = 1e-5;

// Scalar special functions, shared with gammadist. Lanczos g=7, 9 coefficients.
double lgamma_lanczos(double x);
double digamma(double x);

enum class Init { Zeros, Glorot, Uniform05 };

class ParamSet {
 public:
  explicit ParamSet(uint64_t seed) : seed_(seed) {}

  Param& add(const std::string& name, int rows, int cols, Init init);
  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) > 0; }
  uint64_t seed() const { return seed_; }

  void zero_grads();
  std::map<std::string, Tensor> snapshot() const;
  void restore(const std::map<std::string, Tensor>& snap);

  // Stable name order.
  std::vector<Param*> all();
  std::vector<const Param*> all() const;

  void save(const std::string& path, uint64_t config_hash) const;
  // Loads into an empty set; shapes come from the file.
  static ParamSet load(const std::string& path, uint64_t* config_hash = nullptr);

 private:
  uint64_t seed_;
  std::map<std::string, std::unique_ptr<Param>> params_;
};

// Max relative gradient error of the analytic backward pass against central
// finite differences over every entry of every parameter.
double grad_check(const std::function<Value()>& loss_builder, ParamSet& params,
                  double eps = 1e-4);

}  // namespace outage::num
