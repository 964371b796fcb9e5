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

#include "histoens/ensemble.hpp"

using namespace histoens;

TEST(Compose, TruthTable) {
  for (int b = 0; b <= 1; ++b)
    for (int m = 0; m <= 3; ++m) {
      const LabelMask out = compose_multiclass(LabelMask(1, 1, static_cast<std::uint8_t>(b)),
                                               LabelMask(1, 1, static_cast<std::uint8_t>(m)));
      EXPECT_EQ(out.at(0, 0), 3 * b + m * (1 - b)) << b << "," << m;
    }
  EXPECT_THROW(compose_multiclass(LabelMask(1, 1, 2), LabelMask(1, 1, 0)), ValidationError);
  EXPECT_THROW(compose_multiclass(LabelMask(1, 2), LabelMask(2, 1)), ValidationError);
}

TEST(Shifted, TruthTableAndRange) {
  const LabelMask out = shifted_blend(LabelMask(1, 2, std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(out.at(0, 0), 1);
  EXPECT_EQ(out.at(0, 1), 3);
  EXPECT_THROW(shifted_blend(LabelMask(1, 1, 3)), ValidationError);
}

TEST(Blend, WeightedAverage) {
  const ProbMap a(1, 1, 2, std::vector<float>{0.0f, 1.0f}), b(1, 1, 2, std::vector<float>{1.0f, 0.5f});
  const ProbMap h = blend_binary(a, b);
  EXPECT_FLOAT_EQ(h.at(0, 0, 0), 0.5f);
  EXPECT_FLOAT_EQ(h.at(0, 0, 1), 0.75f);
  const ProbMap w = blend_binary(a, b, 0.25);
  EXPECT_FLOAT_EQ(w.at(0, 0, 0), 0.75f);
  EXPECT_EQ(blend_binary(a, b, 1.0), a);
  EXPECT_THROW(blend_binary(a, b, 1.5), ValidationError);
  EXPECT_THROW(blend_binary(a, ProbMap(1, 2, 1, 0.0f)), ValidationError);
}

TEST(Average, ElementwiseMean) {
  const PredMatrix a(2, 2, std::vector<float>{0, 1, 0.5f, 0.5f}), b(2, 2, std::vector<float>{1, 0, 0.25f, 0.75f});
  const PredMatrix m = average_predictions({a, b});
  EXPECT_FLOAT_EQ(m.at(0, 0), 0.5f);
  EXPECT_FLOAT_EQ(m.at(1, 1), 0.625f);
  EXPECT_THROW(average_predictions({}), ValidationError);
  EXPECT_THROW(average_predictions({a, PredMatrix(2, 3)}), ValidationError);
}

TEST(Stitch, MeanOfCoveringPatches) {
  PatchGrid grid;
  grid.spec = PatchSpec{2, 2, 1};
  grid.origins = {{0, 0}, {0, 1}};
  const PredMatrix scores(2, 1, std::vector<float>{0.2f, 0.6f});
  const ProbMap m = stitch(scores, grid, 3, 3);
  EXPECT_FLOAT_EQ(m.at(0, 0, 0), 0.2f);
  EXPECT_FLOAT_EQ(m.at(0, 0, 1), 0.4f);
  EXPECT_FLOAT_EQ(m.at(0, 1, 2), 0.6f);
  EXPECT_FLOAT_EQ(m.at(0, 2, 0), 0.0f);
  EXPECT_THROW(stitch(PredMatrix(2, 2), grid, 3, 3), ValidationError);
}
