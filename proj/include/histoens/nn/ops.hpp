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
#include <span>
#include <vector>

#include "histoens/nn/tensor.hpp"

namespace histoens::nn {

/// Stride-1 same-padded convolution. x (N,Cin,H,W), weight (Cout,Cin,k,k)
/// with odd k, bias (Cout).
Var conv2d(const Var &x, const Var &weight, const Var &bias);

Var relu(const Var &x);
Var sigmoid(const Var &x);

/// 2x2 windows, stride 2; trailing odd row/column is dropped. Max-pool
/// routes the gradient to the first maximal element of each window.
Var maxpool2(const Var &x);
Var avgpool2(const Var &x);
/// Nearest-neighbour x2.
Var upsample2(const Var &x);

/// Channel concatenation of rank-4 tensors with equal N, H, W.
Var concat_channels(const Var &a, const Var &b);

/// Average spatial pyramid pooling. Level l in 1..levels splits the plane
/// into an l x l grid with cell boundaries floor(i*H/l); each cell is
/// average-pooled. Output (N, C * sum l^2) ordered level, channel, cell
/// (row-major).
Var spp(const Var &x, int levels);
/// Feature length produced by spp().
int spp_features(int channels, int levels);

/// x (N,F), weight (Out,F), bias (Out) -> (N,Out).
Var dense(const Var &x, const Var &weight, const Var &bias);

/// Scalar sum of x * coeffs (elementwise); used to project outputs onto a
/// fixed direction for gradient checking.
Var dot(const Var &x, const Tensor &coeffs);

/// While a trace is open on the calling thread, relu and maxpool2 fold the
/// linear piece they select for every element into a 64-bit fingerprint.
/// Two evaluations with different fingerprints lie on different pieces, so a
/// finite difference between them is not a derivative.
void begin_pattern_trace();
std::uint64_t end_pattern_trace();

/// Softmax over the channel axis of (N,K) or (N,K,H,W). Not part of the
/// differentiable graph; use for inference.
Tensor softmax_channels(const Tensor &logits);

} // namespace histoens::nn
