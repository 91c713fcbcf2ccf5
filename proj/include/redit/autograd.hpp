// Copyright 2026 The regionedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "redit/tensor.hpp"

/// Minimal tape-free reverse-mode automatic differentiation over float64
/// tensors. Every op builds a node holding its forward value and a closure
/// that scatters the node's gradient into its parents. Nodes only keep
/// parents and closures when some input requires a gradient, so frozen
/// parameters and constants cost nothing on the backward pass.
namespace redit::ag {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  // Lazily allocates a zero gradient shaped like value.
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor& value() const { return node_->value; }
  // Direct access for optimizers; only meaningful on leaves.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }

  // Gradient accumulated by backward(); zeros if none reached this node.
  Tensor grad() const;
  void zero_grad() const;

  // Seeds d(self)/d(self) = 1; self must hold a single element.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var parameter(Tensor value);

// Builds an op result. The closure is kept only if any parent needs grad.
Var make_result(Tensor value, const std::vector<Var>& parents, std::function<void(Node&)> backward_fn);

}  // namespace redit::ag
