/**
 * Copyright (c) histoens Contributors. See CONTRIBUTORS file.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "histoens/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_set>

#include "histoens/error.hpp"

namespace histoens::nn {

namespace {

std::size_t element_count(const std::vector<int> &shape) {
  std::size_t n = 1;
  for (int d : shape) {
    require(d >= 0, "tensor dimension must be non-negative");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

} // namespace

std::string shape_string(const std::vector<int> &shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    s += (i ? "," : "") + std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(std::vector<int> shape, float fill) : shape_(std::move(shape)) {
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(data_.size() == element_count(shape_),
          "tensor storage length does not match shape " + nn::shape_string(shape_));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const { return nn::shape_string(shape_); }

Tensor &Node::grad_buffer() {
  if (grad.size() != value.size()) {
    grad = Tensor(value.shape(), 0.0f);
  }
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_->grad.size() == node_->value.size()) {
    std::fill(node_->grad.data().begin(), node_->grad.data().end(), 0.0f);
  }
}

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node &)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const Var &p : parents) {
    node->requires_grad = node->requires_grad || p.requires_grad();
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const Var &p : parents) {
      node->parents.push_back(p.node());
    }
    node->backward = std::move(backward_fn);
  }
  return Var(std::move(node));
}

void backward(const Var &root, const Tensor &seed) {
  if (!root.requires_grad()) {
    return;
  }
  // Iterative post-order DFS gives a topological order.
  std::vector<Node *> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<Node *, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      Node *p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Tensor &g = root.node()->grad_buffer();
  if (seed.size() == 0) {
    std::fill(g.data().begin(), g.data().end(), 1.0f);
  } else {
    require(seed.size() == g.size(), "backward seed shape mismatch");
    std::transform(g.data().begin(), g.data().end(), seed.data().begin(), g.data().begin(),
                   std::plus<>());
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *n = *it;
    if (n->backward && n->grad.size() == n->value.size()) {
      n->backward(*n);
    }
  }
}

} // namespace histoens::nn
