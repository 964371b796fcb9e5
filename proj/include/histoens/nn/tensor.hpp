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

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace histoens::nn {

/// Dense float32 array with shape (N, C, H, W) or (N, F).
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, float fill = 0.0f);
  Tensor(std::vector<int> shape, std::vector<float> data);

  const std::vector<int> &shape() const noexcept { return shape_; }
  int dim(std::size_t i) const noexcept { return shape_[i]; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float &operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  /// (n, c, h, w) accessors for rank-4 tensors.
  float &at(int n, int c, int h, int w) noexcept { return data_[offset(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const noexcept { return data_[offset(n, c, h, w)]; }

  bool all_finite() const noexcept;
  std::string shape_string() const;
  bool operator==(const Tensor &) const = default;

private:
  std::size_t offset(int n, int c, int h, int w) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }

  std::vector<int> shape_;
  std::vector<float> data_;
};

std::string shape_string(const std::vector<int> &shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the reverse-mode tape. `backward` reads this node's grad
/// and accumulates into the grads of `parents`.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node &)> backward;

  /// Allocates a zero grad on first use.
  Tensor &grad_buffer();
};

/// Handle to a tape node. Copies share the node.
class Var {
public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  const Tensor &value() const noexcept { return node_->value; }
  Tensor &value() noexcept { return node_->value; }
  const Tensor &grad() const noexcept { return node_->grad; }
  bool requires_grad() const noexcept { return node_->requires_grad; }
  const NodePtr &node() const noexcept { return node_; }
  const std::vector<int> &shape() const noexcept { return node_->value.shape(); }
  explicit operator bool() const noexcept { return static_cast<bool>(node_); }

  void zero_grad();

private:
  NodePtr node_;
};

/// Builds a result node whose requires_grad is the OR of its parents'.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node &)> backward);

/// Seeds `root` with `seed` (ones when empty) and runs every reachable
/// backward function in reverse topological order. Gradients accumulate.
void backward(const Var &root, const Tensor &seed = {});

} // namespace histoens::nn
