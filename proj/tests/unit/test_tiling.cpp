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

#include "histoens/tiling.hpp"

using namespace histoens;

TEST(Grid, FullSizeSlide) {
  const PatchGrid g = grid_patches(1536, 2048, PatchSpec{500, 500, 100});
  EXPECT_EQ(g.rows, 11);
  EXPECT_EQ(g.cols, 16);
  EXPECT_EQ(g.origins.size(), 176u);
  EXPECT_EQ(g.origins.front(), (PatchOrigin{0, 0}));
  EXPECT_EQ(g.origins[1], (PatchOrigin{0, 100}));
  EXPECT_EQ(g.origins.back(), (PatchOrigin{1000, 1500}));
}

TEST(Grid, MatchesBruteForceCount) {
  for (int h = 1; h <= 40; h += 3)
    for (int w = 1; w <= 40; w += 5)
      for (int p = 1; p <= 12; p += 4)
        for (int s = 1; s <= 7; s += 3) {
          if (p > h || p > w)
            continue;
          int expect = 0;
          for (int r = 0; r + p <= h; r += s)
            for (int c = 0; c + p <= w; c += s)
              ++expect;
          EXPECT_EQ(static_cast<int>(grid_patches(h, w, PatchSpec{p, p, s}).origins.size()), expect);
        }
}

TEST(Grid, PatchLargerThanImageThrows) {
  EXPECT_THROW(grid_patches(10, 10, PatchSpec{11, 5, 1}), ValidationError);
  EXPECT_THROW(grid_patches(10, 10, PatchSpec{5, 5, 0}), ValidationError);
}

TEST(Downsample, BlockMeanWithTruncatedEdges) {
  ImageF img(3, 3, 1, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const ImageF d = downsample(img, 2);
  ASSERT_EQ(d.height(), 2);
  ASSERT_EQ(d.width(), 2);
  EXPECT_FLOAT_EQ(d.at(0, 0), 3.0f); // (1+2+4+5)/4
  EXPECT_FLOAT_EQ(d.at(0, 1), 4.5f); // (3+6)/2
  EXPECT_FLOAT_EQ(d.at(1, 0), 7.5f); // (7+8)/2
  EXPECT_FLOAT_EQ(d.at(1, 1), 9.0f);
  EXPECT_EQ(downsampled_size(1536, 2048, 40), (std::pair<int, int>{39, 52}));
}

TEST(Downsample, LabelVoteTiesFavourAbnormal) {
  LabelMask m(2, 4, std::vector<std::uint8_t>{0, 0, 1, 2, 3, 3, 2, 1});
  const LabelMask d = downsample_labels(m, 2);
  EXPECT_EQ(d.at(0, 0), 3); // two 0s, two 3s
  EXPECT_EQ(d.at(0, 1), 2); // 1,2,2,1
}

TEST(Upsample, NearestRoundTrip) {
  LabelMask m(2, 3, std::vector<std::uint8_t>{0, 1, 2, 3, 2, 1});
  const LabelMask up = upsample_labels(m, 8, 12);
  EXPECT_EQ(downsample_labels(up, 4), m);
  ProbMap p(1, 2, 2, std::vector<float>{0.0f, 0.5f, 1.0f, 0.25f});
  const ProbMap pu = upsample_probmap(p, 5, 5);
  EXPECT_FLOAT_EQ(pu.at(0, 4, 4), 0.25f);
  EXPECT_FLOAT_EQ(pu.at(0, 0, 0), 0.0f);
}

TEST(MeanSubtract, ScopesDiffer) {
  ImageF img(2, 4, 1, std::vector<float>{0, 0, 10, 10, 0, 0, 10, 10});
  const auto means = channel_means(img);
  EXPECT_DOUBLE_EQ(means[0], 5.0);
  const ImageF whole = preprocess_patch(img, {0, 0}, PatchSpec{2, 2, 1}, MeanScope::WholeImage, means);
  const ImageF local = preprocess_patch(img, {0, 0}, PatchSpec{2, 2, 1}, MeanScope::PerPatch, means);
  EXPECT_FLOAT_EQ(whole.at(0, 0), -5.0f);
  EXPECT_FLOAT_EQ(local.at(0, 0), 0.0f);
  const ImageF ms = mean_subtract(img);
  double s = 0;
  for (float v : ms.samples())
    s += v;
  EXPECT_NEAR(s, 0.0, 1e-9);
}

TEST(RandomPatch, UniformOverValidOrigins) {
  Rng rng(1);
  const PatchSpec spec{3, 3, 1};
  std::vector<int> hits(4 * 5, 0);
  for (int i = 0; i < 20000; ++i) {
    const PatchOrigin o = random_origin(6, 7, spec, rng);
    ASSERT_GE(o.row, 0);
    ASSERT_LE(o.row, 3);
    ASSERT_GE(o.col, 0);
    ASSERT_LE(o.col, 4);
    ++hits[static_cast<std::size_t>(o.row * 5 + o.col)];
  }
  for (int h : hits)
    EXPECT_NEAR(h, 1000, 150);
}

TEST(Crop, ExactAndBoundsChecked) {
  Image8 img(4, 4, 1);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      img.at(r, c) = static_cast<std::uint8_t>(r * 4 + c);
  const Image8 p = crop(img, {1, 2}, 2, 2);
  EXPECT_EQ(p.at(0, 0), 6);
  EXPECT_EQ(p.at(1, 1), 11);
  EXPECT_THROW(crop(img, {3, 3}, 2, 2), ValidationError);
}
