// Copyright (c) 2026 awplab contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "awplab/tensor.hpp"

namespace awplab {

/// Probability floor applied inside every log (keeps confident predictions
/// away from -inf).
inline constexpr double kProbFloor = 1e-12;

/// Single-threaded reverse-mode tape. Forward ops append nodes; backward()
/// walks the nodes in reverse and accumulates adjoints into every leaf that
/// requires grad. One tape per forward/backward pair.
class Tape {
 public:
  using NodeId = int;

  NodeId leaf(Tensor value, bool requires_grad = true);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }

  // network primitives
  NodeId matmul(NodeId a, NodeId b);           // [m,k] x [k,n] -> [m,n]
  NodeId linear(NodeId x, NodeId w);           // [n,in] x [out,in]^T -> [n,out]
  NodeId conv2d(NodeId x, NodeId k, int pad);  // NCHW x OIHW, stride 1
  NodeId add_bias(NodeId x, NodeId b);         // rowwise [n,f]+[f] or channelwise NCHW+[C]
  NodeId relu(NodeId a);
  NodeId flatten(NodeId a);      // [N,...] -> [N, rest]
  NodeId log_softmax(NodeId a);  // rowwise, max-subtracted

  // loss assembly
  NodeId exp(NodeId a);
  NodeId log_floor(NodeId a);  // log(max(x, kProbFloor))
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId affine(NodeId a, double s, double c);  // s*a + c elementwise
  NodeId sum_all(NodeId a);                     // -> scalar
  NodeId sum_rows(NodeId a);                    // [n,C] -> [n]
  NodeId pick(NodeId a, const std::vector<int>& labels);  // [n,C] -> [n], a[i, y_i]
  NodeId max_off_label(NodeId a, const std::vector<int>& labels);  // [n,C] -> [n]

  void backward(NodeId root);

  const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Tensor& grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // zero-initialized, same shape as value
    std::function<void(Tape&)> back;  // empty for leaves
    bool requires_grad = false;
  };

  NodeId push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
  Tensor& grad_mut(NodeId id) { return nodes_[static_cast<size_t>(id)].grad; }
  bool needs_grad(NodeId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  std::vector<Node> nodes_;
};

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
/// `f` must return the same finite scalar for identical inputs.
double finite_difference_check(const std::function<double(const Tensor&)>& f,
                               const Tensor& at, const Tensor& analytic_grad,
                               double h);

}  // namespace awplab
