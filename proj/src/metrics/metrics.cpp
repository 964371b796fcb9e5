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

#include "histoens/metrics.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstdint>

namespace histoens {

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require(predicted.size() == truth.size(), "accuracy: length mismatch");
  require(!truth.empty(), "accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i)
    hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

template <typename Pred> double dice_of(const LabelMask &pred, const LabelMask &truth, Pred in_set) {
  require(pred.same_shape(truth), "dice: mask shapes differ");
  std::uint64_t p = 0, t = 0, both = 0;
  const auto a = pred.labels(), b = truth.labels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ip = in_set(a[i]), it = in_set(b[i]);
    p += ip;
    t += it;
    both += ip && it;
  }
  if (p + t == 0)
    return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + t);
}

} // namespace

double dice(const LabelMask &pred, const LabelMask &truth, int cls) {
  require(cls >= 0 && cls < LabelMask::kNumClasses, "dice: class id out of range");
  return dice_of(pred, truth, [cls](std::uint8_t v) { return v == cls; });
}

double dice_abnormal(const LabelMask &pred, const LabelMask &truth) {
  return dice_of(pred, truth, [](std::uint8_t v) { return v > 0; });
}

double bach_score(const LabelMask &pred, const LabelMask &truth, BachGate gate) {
  require(pred.same_shape(truth), "bach_score: mask shapes differ");
  std::int64_t num = 0, den = 0;
  const auto p = pred.labels(), g = truth.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const int gi = g[i], pi = p[i];
    num += std::abs(pi - gi);
    const bool on = gate == BachGate::Both ? (gi > 0 && pi > 0) : (gi > 0 || pi > 0);
    if (on)
      den += std::max(gi, 3 - gi);
  }
  if (den == 0)
    throw UndefinedScoreError("bach_score: no pixel passes the denominator gate");
  return 1.0 - static_cast<double>(num) / static_cast<double>(den);
}

SegScore evaluate_segmentation(const LabelMask &pred, const LabelMask &truth) {
  SegScore s;
  s.bach = bach_score(pred, truth);
  for (int c = 0; c < 4; ++c)
    s.dice_per_class[static_cast<std::size_t>(c)] = dice(pred, truth, c);
  s.dice_abnormal = dice_abnormal(pred, truth);
  return s;
}

} // namespace histoens
