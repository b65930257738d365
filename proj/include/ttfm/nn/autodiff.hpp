#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ttfm/nn/params.hpp"

namespace ttfm::nn::ad {

class Tape;

/// Handle to a matrix-valued node on a Tape.
class Var {
 public:
  Var() = default;
  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so a reverse sweep over the node list is a valid topological order.
/// Nodes computed only from constants record no backward closure.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Mat& upstream)>;

  Var constant(Mat value);
  /// Trainable leaf. Its gradient is scattered into the flat parameter
  /// gradient at `offset` (column-major).
  Var parameter(Mat value, std::size_t offset, std::string label);
  /// Stop-gradient: same value, no gradient flows back through it.
  Var detach(Var v);

  /// Appends a node. `backprop` is kept only if some input requires grad.
  Var record(Mat value, std::initializer_list<Var> inputs, Backprop backprop);

  /// Seeds d root = 1 (root must be 1 x 1) and sweeps backward.
  void backward(Var root);

  bool has_grad(Var v) const { return node(v).has_grad; }
  /// Gradient accumulated at v; a zero matrix when nothing reached it.
  Mat grad(Var v) const;

  /// Scatters all parameter-leaf gradients into a flat vector of length `size`.
  /// Throws NonFiniteError naming the offending layer on NaN/Inf.
  Vec parameter_gradient(std::size_t size) const;

  const Mat& value_at(std::size_t i) const { return nodes_[i].value; }
  bool requires_grad_at(std::size_t i) const { return nodes_[i].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds g into columns [start, start + g.cols()) of node i's gradient.
  template <typename Derived>
  void accumulate_cols(std::size_t i, Eigen::Index start, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[i];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = Mat::Zero(n.value.rows(), n.value.cols());
      n.has_grad = true;
    }
    n.grad.middleCols(start, g.cols()) += g;
  }

  template <typename Derived>
  void accumulate(std::size_t i, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[i];
    if (!n.requires_grad) return;
    if (n.has_grad) {
      n.grad += g;
    } else {
      n.grad = g;
      n.has_grad = true;
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backprop backprop;
    std::string label;
    std::ptrdiff_t offset = -1;
  };
  const Node& node(Var v) const { return nodes_[v.index()]; }
  friend class Var;

  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Element-wise product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// Column j multiplied by w(j); w is a constant.
Var scale_cols(Var a, const Vec& w);
/// z + b 1^T with b a column vector.
Var add_bias(Var z, Var b);
/// w h + b 1^T in one node.
Var affine(Var w, Var h, Var b);
/// Columns [start, start + n) of a.
Var slice_cols(Var a, Eigen::Index start, Eigen::Index n);
Var elu(Var z);
/// Element-wise derivative of elu; differentiable itself.
Var elu_prime(Var z);
/// (1/n) sum_j ||a_j||^2 over the n columns of a; returns 1 x 1.
Var mean_sq_norm(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

/// Per-layer weight and bias nodes of an MLP bound to a tape.
struct MlpVars {
  std::vector<Var> weights;
  std::vector<Var> biases;
};

/// Binds `params` to the tape, as trainable leaves or as constants.
MlpVars bind(Tape& tape, const ParamStore& params, bool trainable);

Var mlp_forward(const MlpVars& vars, Var input);

struct Dual {
  Var value;
  Var tangent;
};

/// Forward pass carrying one tangent column per primal column (forward mode
/// written in tape operations, so the tangent itself is differentiable).
Dual mlp_forward_dual(const MlpVars& vars, Var input, Var input_tangent);

/// Exact gradient of the 1 x 1 scalar built by `loss` w.r.t. every entry of `params`.
Vec grad_params(const ParamStore& params, const std::function<Var(Tape&, const MlpVars&)>& loss);

}  // namespace ttfm::nn::ad
