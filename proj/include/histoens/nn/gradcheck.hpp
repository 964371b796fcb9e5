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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "histoens/nn/model.hpp"
#include "histoens/nn/tensor.hpp"

namespace histoens::nn {

struct GradcheckOptions {
  double step = 1e-3;      ///< central-difference half-width h
  double tolerance = 1e-3; ///< pass when every tensor's error is below this
  /// Check at most this many entries per tensor (evenly strided); 0 = all.
  std::size_t max_entries = 0;
  /// Seed of the random projection applied to non-scalar outputs.
  std::uint64_t seed = 1;
};

/// Per-tensor result. Errors are normwise over the whole check:
///   max_i |a_i - n_i| / max_j max(|a_j|, |n_j|)
/// with j ranging over every checked entry of every tensor. float32 outputs
/// carry ~6e-8 relative rounding, so a central difference at h = 1e-3
/// cannot resolve individual entries far below the gradient's overall
/// scale.
struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  /// Entries checked with a one-sided difference because the other side
  /// selects a different relu / max-pool piece.
  std::size_t one_sided = 0;
  /// Entries where both sides select a different piece.
  std::size_t skipped = 0;
  double rel_error = 0.0;     ///< max_abs_error / report scale
  double max_abs_error = 0.0;
  double scale = 0.0;         ///< largest |a| or |n| in this tensor
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradcheckReport {
  std::vector<TensorCheck> tensors;
  double scale = 0.0; ///< largest |a| or |n| over all tensors
  double max_rel_error = 0.0;
  /// Every tensor had a checked entry and max_rel_error < tolerance.
  bool passed = true;
};

/// Compares reverse-mode gradients of `fn()` with respect to each tensor in
/// `wrt` against central differences. A non-scalar output is reduced to
/// sum(output * r) with fixed random r; the differences of that sum are
/// taken in double from the float outputs. Where a perturbation crosses a
/// relu or max-pool switch the difference is taken on the other side only;
/// entries where both sides cross are skipped. Both cases are counted.
GradcheckReport gradcheck(const std::function<Var()> &fn, const std::vector<Var> &wrt,
                          const std::vector<std::string> &names, const GradcheckOptions &options = {});

/// Gradient check of a model's output on `input` (rank 4) with respect to
/// every parameter and the input.
GradcheckReport gradcheck_model(const Model &model, const Tensor &input, const GradcheckOptions &options = {});

} // namespace histoens::nn
