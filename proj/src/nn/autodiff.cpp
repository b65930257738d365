#include "ttfm/nn/autodiff.hpp"

#include <cmath>

#include "ttfm/nn/mlp.hpp"

namespace ttfm::nn::ad {

const Mat& Var::value() const { return tape_->value_at(index_); }
bool Var::requires_grad() const { return tape_->requires_grad_at(index_); }

Var Tape::constant(Mat value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Mat value, std::size_t offset, std::string label) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.label = std::move(label);
  n.offset = static_cast<std::ptrdiff_t>(offset);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::detach(Var v) { return constant(v.value()); }

Var Tape::record(Mat value, std::initializer_list<Var> inputs, Backprop backprop) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw DomainError("autodiff: mixing variables from different tapes");
    n.requires_grad = n.requires_grad || nodes_[in.index()].requires_grad;
  }
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var root) {
  if (root.rows() != 1 || root.cols() != 1)
    throw DomainError("autodiff: backward() needs a 1 x 1 root");
  if (!std::isfinite(root.value()(0, 0)))
    throw NonFiniteError("autodiff: non-finite loss value");
  accumulate(root.index(), Mat::Ones(1, 1));
  for (std::size_t i = root.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backprop) continue;
    n.backprop(*this, n.grad);
  }
}

Mat Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.has_grad) return n.grad;
  return Mat::Zero(n.value.rows(), n.value.cols());
}

Vec Tape::parameter_gradient(std::size_t size) const {
  Vec g = Vec::Zero(static_cast<Eigen::Index>(size));
  for (const Node& n : nodes_) {
    if (n.offset < 0 || !n.has_grad) continue;
    if (!n.grad.allFinite())
      throw NonFiniteError("autodiff: non-finite gradient in " + n.label);
    const auto len = n.grad.size();
    g.segment(n.offset, len) += Eigen::Map<const Vec>(n.grad.data(), len);
  }
  return g;
}

Var matmul(Var a, Var b) {
  const std::size_t ia = a.index(), ib = b.index();
  require(a.cols() == b.rows(), "autodiff: matmul shape mismatch");
  return a.tape()->record(a.value() * b.value(), {a, b}, [ia, ib](Tape& t, const Mat& g) {
    if (t.requires_grad_at(ia)) t.accumulate(ia, g * t.value_at(ib).transpose());
    if (t.requires_grad_at(ib)) t.accumulate(ib, t.value_at(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  const std::size_t ia = a.index(), ib = b.index();
  require(a.rows() == b.rows() && a.cols() == b.cols(), "autodiff: add shape mismatch");
  return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  const std::size_t ia = a.index(), ib = b.index();
  require(a.rows() == b.rows() && a.cols() == b.cols(), "autodiff: sub shape mismatch");
  return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  const std::size_t ia = a.index(), ib = b.index();
  require(a.rows() == b.rows() && a.cols() == b.cols(), "autodiff: mul shape mismatch");
  Mat v = a.value().cwiseProduct(b.value());
  return a.tape()->record(std::move(v), {a, b}, [ia, ib](Tape& t, const Mat& g) {
    if (t.requires_grad_at(ia)) t.accumulate(ia, g.cwiseProduct(t.value_at(ib)));
    if (t.requires_grad_at(ib)) t.accumulate(ib, g.cwiseProduct(t.value_at(ia)));
  });
}

Var scale(Var a, double c) {
  const std::size_t ia = a.index();
  return a.tape()->record(c * a.value(), {a},
                          [ia, c](Tape& t, const Mat& g) { t.accumulate(ia, c * g); });
}

Var scale_cols(Var a, const Vec& w) {
  const std::size_t ia = a.index();
  require(w.size() == a.cols(), "autodiff: scale_cols length mismatch");
  Mat v = a.value() * w.asDiagonal();
  return a.tape()->record(std::move(v), {a}, [ia, w](Tape& t, const Mat& g) {
    t.accumulate(ia, g * w.asDiagonal());
  });
}

Var add_bias(Var z, Var b) {
  const std::size_t iz = z.index(), ib = b.index();
  require(b.cols() == 1 && b.rows() == z.rows(), "autodiff: bias shape mismatch");
  Mat v = z.value();
  v.colwise() += b.value().col(0);
  return z.tape()->record(std::move(v), {z, b}, [iz, ib](Tape& t, const Mat& g) {
    t.accumulate(iz, g);
    if (t.requires_grad_at(ib)) t.accumulate(ib, g.rowwise().sum());
  });
}

Var affine(Var w, Var h, Var b) {
  const std::size_t iw = w.index(), ih = h.index(), ib = b.index();
  require(w.cols() == h.rows(), "autodiff: affine shape mismatch");
  require(b.cols() == 1 && b.rows() == w.rows(), "autodiff: bias shape mismatch");
  Mat v(w.rows(), h.cols());
  v.noalias() = w.value() * h.value();
  v.colwise() += b.value().col(0);
  return w.tape()->record(std::move(v), {w, h, b}, [iw, ih, ib](Tape& t, const Mat& g) {
    if (t.requires_grad_at(iw)) t.accumulate(iw, g * t.value_at(ih).transpose());
    if (t.requires_grad_at(ih)) t.accumulate(ih, t.value_at(iw).transpose() * g);
    if (t.requires_grad_at(ib)) t.accumulate(ib, g.rowwise().sum());
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index n) {
  const std::size_t ia = a.index();
  require(start >= 0 && n >= 0 && start + n <= a.cols(), "autodiff: slice_cols out of range");
  return a.tape()->record(a.value().middleCols(start, n), {a},
                          [ia, start](Tape& t, const Mat& g) { t.accumulate_cols(ia, start, g); });
}

Var elu(Var z) {
  const std::size_t iz = z.index();
  Mat v = nn::elu(z.value());
  return z.tape()->record(std::move(v), {z}, [iz](Tape& t, const Mat& g) {
    t.accumulate(iz, g.cwiseProduct(
                         nn::elu_prime(t.value_at(iz))));
  });
}

Var elu_prime(Var z) {
  const std::size_t iz = z.index();
  Mat v = nn::elu_prime(z.value());
  return z.tape()->record(std::move(v), {z}, [iz](Tape& t, const Mat& g) {
    t.accumulate(iz, g.cwiseProduct(
                         nn::elu_second(t.value_at(iz))));
  });
}

Var mean_sq_norm(Var a) {
  const std::size_t ia = a.index();
  require(a.cols() > 0, "autodiff: mean over an empty batch");
  const double n = static_cast<double>(a.cols());
  Mat v(1, 1);
  v(0, 0) = a.value().squaredNorm() / n;
  return a.tape()->record(std::move(v), {a}, [ia, n](Tape& t, const Mat& g) {
    t.accumulate(ia, (2.0 * g(0, 0) / n) * t.value_at(ia));
  });
}

MlpVars bind(Tape& tape, const ParamStore& params, bool trainable) {
  MlpVars vars;
  for (std::size_t i = 0; i < params.n_layers(); ++i) {
    const auto& slot = params.layout()[i];
    if (trainable) {
      vars.weights.push_back(tape.parameter(params.weight(i), slot.weight_offset, slot.name + ".weight"));
      vars.biases.push_back(tape.parameter(params.bias(i), slot.bias_offset, slot.name + ".bias"));
    } else {
      vars.weights.push_back(tape.constant(params.weight(i)));
      vars.biases.push_back(tape.constant(params.bias(i)));
    }
  }
  return vars;
}

Var mlp_forward(const MlpVars& vars, Var input) {
  Var h = input;
  const std::size_t last = vars.weights.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    Var z = affine(vars.weights[i], h, vars.biases[i]);
    h = i < last ? elu(z) : z;
  }
  return h;
}

Dual mlp_forward_dual(const MlpVars& vars, Var input, Var input_tangent) {
  Var h = input;
  Var dh = input_tangent;
  const std::size_t last = vars.weights.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) {
    Var z = affine(vars.weights[i], h, vars.biases[i]);
    Var dz = matmul(vars.weights[i], dh);
    if (i < last) {
      dh = mul(elu_prime(z), dz);
      h = elu(z);
    } else {
      h = z;
      dh = dz;
    }
  }
  return {h, dh};
}

Vec grad_params(const ParamStore& params,
                const std::function<Var(Tape&, const MlpVars&)>& loss) {
  Tape tape;
  const MlpVars vars = bind(tape, params, true);
  Var root = loss(tape, vars);
  tape.backward(root);
  return tape.parameter_gradient(params.size());
}

}  // namespace ttfm::nn::ad
