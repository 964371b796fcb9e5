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

#include <span>
#include <vector>

#include "histoens/image.hpp"
#include "histoens/nn/tensor.hpp"

namespace histoens::nn {

/// Probability clamp used by every loss.
inline constexpr double kProbEpsilon = 1e-7;

/// Mean cross-entropy of softmax(logits) against integer labels. Logits are
/// (N,K) with N labels, or (N,K,H,W) with N*H*W labels in (n,h,w) order.
/// The true-class probability is clamped to [eps, 1-eps].
Var softmax_ce(const Var &logits, std::span<const int> labels);

/// Mean binary log loss of probabilities against (possibly soft) targets in
/// [0,1]; probabilities are clamped to [eps, 1-eps].
Var binary_logloss(const Var &prob, const Tensor &target);

/// Linear boundary ramp: w(p) = min(1, d(p) / ramp) where d is the exact
/// Euclidean distance to the nearest boundary pixel (a pixel with a
/// 4-neighbour of a different label). A mask without boundary gives all 1.
/// Returns H*W row-major weights.
std::vector<float> boundary_weights(const LabelMask &mask, double ramp);

/// Log loss against the attenuated target weights * mask. `mask` must be
/// binary and match prob's spatial size (prob is (1,1,H,W) or (N,1,H,W)
/// with N masks stacked row-major in `target_mask`).
Var weighted_boundary_logloss(const Var &prob, const Tensor &target_mask, const Tensor &weights);

/// Squared Euclidean distance from every pixel to the nearest pixel with
/// `feature[i] != 0` (two-pass lower-envelope transform). Pixels are at
/// infinity when no feature exists.
std::vector<double> squared_distance_transform(std::span<const std::uint8_t> feature, int height,
                                               int width);

} // namespace histoens::nn
