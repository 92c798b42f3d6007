#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cascade::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// A trainable tensor and its accumulated gradient (same shape).
struct Parameter {
  Matrix value;
  Matrix grad;
};

/// Named parameters in a stable (sorted) order. Element addresses are stable
/// for the lifetime of the store.
class ParameterStore {
 public:
  using Map = std::map<std::string, Parameter>;

  Parameter& create(const std::string& name, Index rows, Index cols);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad();
  void scale_grad(double factor);
  /// Total number of scalar entries.
  Index size() const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }

 private:
  Map params_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense float64 matrices. Build the forward pass with
/// the op methods, then call backward() on a 1x1 result; gradients of
/// parameter leaves are added into Parameter::grad.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);

  const Matrix& value(Var v) const;
  double scalar(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  void backward(Var loss);

  Var matmul(Var a, Var b);
  /// a * b^T
  Var matmul_nt(Var a, Var b);
  Var add(Var a, Var b);
  /// x + broadcast of a 1xn row over every row of x
  Var add_row(Var x, Var row);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var gelu(Var a);
  Var softmax_rows(Var a);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps);
  Var concat_cols(std::span<const Var> parts);
  Var repeat_rows(Var row, Index n);
  Var slice_rows(Var x, Index begin, Index count);
  Var slice_cols(Var x, Index begin, Index count);
  /// Rows `ids` of a parameter table; the gradient is scattered back.
  Var lookup(Parameter& table, std::span<const int> ids);
  /// Single-direction LSTM over the rows of x (gate order i, f, g, o).
  /// wx: in x 4h, wh: h x 4h, b: 1 x 4h. Returns rows of hidden states in
  /// input order.
  Var lstm(Var x, Var wx, Var wh, Var b, bool reverse);
  /// -sum(y log p + (1-y) log(1-p)) with both probabilities clamped below
  /// at eps; clamped terms contribute no gradient.
  Var bernoulli_nll(Var probs, const Matrix& targets, double eps);
  Var sum(std::span<const Var> scalars);

 private:
  struct Node {
    Matrix value;
    Parameter* param = nullptr;
    Matrix grad;
    std::function<void()> backward;
  };

  Var push(Matrix value, std::function<void()> backward = {});
  Matrix& grad(int id);
  const Matrix& out_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

  std::vector<Node> nodes_;
};

}  // namespace cascade::ad
