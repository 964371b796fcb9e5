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

#include <gtest/gtest.h>

#include <cstdlib>

#include "histoens/ensemble.hpp"
#include "histoens/metrics.hpp"
#include "histoens/rng.hpp"

using namespace histoens;

namespace {

LabelMask random_labels(int h, int w, Rng &rng) {
  LabelMask m(h, w);
  for (auto &v : m.labels())
    v = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  return m;
}

} // namespace

TEST(Bach, HandCase) {
  const LabelMask gt(1, 3, std::vector<std::uint8_t>{0, 3, 1}), pred(1, 3, std::vector<std::uint8_t>{0, 1, 1});
  EXPECT_DOUBLE_EQ(bach_score(pred, gt), 0.6);
}

TEST(Bach, NaiveLoopOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelMask p = random_labels(64, 64, rng), g = random_labels(64, 64, rng);
    long num = 0, den = 0, den_either = 0;
    for (int r = 0; r < 64; ++r)
      for (int c = 0; c < 64; ++c) {
        const int pi = p.at(r, c), gi = g.at(r, c);
        num += std::abs(pi - gi);
        const int w = std::max(gi, 3 - gi);
        if (gi > 0 && pi > 0)
          den += w;
        if (gi > 0 || pi > 0)
          den_either += w;
      }
    EXPECT_EQ(bach_score(p, g), 1.0 - static_cast<double>(num) / static_cast<double>(den));
    EXPECT_EQ(bach_score(p, g, BachGate::Either),
              1.0 - static_cast<double>(num) / static_cast<double>(den_either));
  }
}

TEST(Bach, Asymmetric) {
  const LabelMask a(1, 3, std::vector<std::uint8_t>{0, 3, 1}), b(1, 3, std::vector<std::uint8_t>{2, 1, 1});
  EXPECT_NE(bach_score(a, b), bach_score(b, a));
}

TEST(Bach, UndefinedWithoutAbnormalOverlap) {
  const LabelMask zeros(4, 4), abnormal(4, 4, 3);
  EXPECT_THROW(bach_score(zeros, zeros), UndefinedScoreError);
  EXPECT_THROW(bach_score(abnormal, zeros), UndefinedScoreError);
  EXPECT_NO_THROW(bach_score(abnormal, zeros, BachGate::Either));
  EXPECT_EQ(bach_score(abnormal, abnormal), 1.0);
}

TEST(Dice, NaiveLoopOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const LabelMask p = random_labels(64, 64, rng), g = random_labels(64, 64, rng);
    for (int k = 0; k < 4; ++k) {
      long inter = 0, sp = 0, sg = 0;
      for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
          const bool a = p.at(r, c) == k, b = g.at(r, c) == k;
          inter += a && b;
          sp += a;
          sg += b;
        }
      EXPECT_NEAR(dice(p, g, k), 2.0 * inter / static_cast<double>(sp + sg), 1e-9);
    }
    long inter = 0, sp = 0, sg = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool a = p.labels()[i] > 0, b = g.labels()[i] > 0;
      inter += a && b;
      sp += a;
      sg += b;
    }
    EXPECT_NEAR(dice_abnormal(p, g), 2.0 * inter / static_cast<double>(sp + sg), 1e-9);
  }
}

TEST(Dice, EmptyEmptyIsOne) {
  const LabelMask z(3, 3);
  EXPECT_EQ(dice(z, z, 2), 1.0);
  EXPECT_EQ(dice_abnormal(z, z), 1.0);
  EXPECT_EQ(dice(z, LabelMask(3, 3, 2), 2), 0.0);
}

TEST(Accuracy, NaiveOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(50), b(50);
    int same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<int>(rng.uniform_int(0, 3));
      b[i] = static_cast<int>(rng.uniform_int(0, 3));
      same += a[i] == b[i];
    }
    EXPECT_NEAR(accuracy(a, b), same / 50.0, 1e-12);
  }
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), ValidationError);
}

TEST(Evaluate, PerfectPrediction) {
  Rng rng(4);
  const LabelMask g = random_labels(16, 16, rng);
  const SegScore s = evaluate_segmentation(g, g);
  EXPECT_EQ(s.bach, 1.0);
  for (double d : s.dice_per_class)
    EXPECT_EQ(d, 1.0);
  EXPECT_EQ(s.dice_abnormal, 1.0);
}

TEST(Directional, ShiftedBeatsNormalBaselineWhenMaskMissesTissue) {
  // Imbalanced slide: a third Invasive, a little Benign, the rest Normal.
  // A binary detector that finds half of the abnormal tissue scores higher
  // after shifting (0 -> Benign, 1 -> Invasive) than when everything outside
  // its mask is called Normal: under the "both abnormal" gate the missed
  // tissue only counts once the prediction is abnormal there too.
  Rng rng(5);
  const int H = 64, W = 64;
  LabelMask gt(H, W), detected(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const double u = rng.uniform01();
      const std::uint8_t g = u < 0.33 ? 3 : (u < 0.38 ? 1 : 0);
      gt.set(r, c, g);
      detected.set(r, c, g > 0 && rng.uniform01() < 0.5 ? 1 : 0);
    }
  LabelMask baseline(H, W);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c)
      baseline.set(r, c, detected.at(r, c) ? 3 : 0);
  EXPECT_GT(bach_score(shifted_blend(detected), gt), bach_score(baseline, gt));
}
