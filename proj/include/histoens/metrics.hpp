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

#include <array>
#include <span>

#include "histoens/image.hpp"

namespace histoens {

/// Fraction of positions where the two label vectors agree.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Dice 2|P & T| / (|P| + |T|) for one class; 1 when both sets are empty.
double dice(const LabelMask &pred, const LabelMask &truth, int cls);
/// Dice of the "any class > 0" sets.
double dice_abnormal(const LabelMask &pred, const LabelMask &truth);

/// Which pixels the score's denominator counts.
enum class BachGate {
  Both,   ///< ground truth and prediction both abnormal (the default)
  Either, ///< ground truth or prediction abnormal
};

/// 1 - sum |pred - gt| / sum max(gt, 3 - gt) * [gate], summed over all
/// pixels. Not symmetric. Throws UndefinedScoreError when the gate never
/// fires.
double bach_score(const LabelMask &pred, const LabelMask &truth, BachGate gate = BachGate::Both);

struct SegScore {
  double bach = 0.0;
  std::array<double, 4> dice_per_class{};
  double dice_abnormal = 0.0;
};

SegScore evaluate_segmentation(const LabelMask &pred, const LabelMask &truth);

} // namespace histoens
