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

#include <vector>

#include "histoens/image.hpp"
#include "histoens/tiling.hpp"

namespace histoens {

/// Pixelwise w * a + (1 - w) * b of two single-channel maps.
ProbMap blend_binary(const ProbMap &a, const ProbMap &b, double w = 0.5);

/// 3 where `binary` is 1, the multiclass label elsewhere.
LabelMask compose_multiclass(const LabelMask &binary, const LabelMask &multiclass);

/// Maps the binary negative class to Benign (1) and the positive class to
/// Invasive (3).
LabelMask shifted_blend(const LabelMask &binary);

/// Elementwise mean of equally shaped matrices.
PredMatrix average_predictions(const std::vector<PredMatrix> &matrices);

/// Paints each grid patch's scalar score over its footprint. Every pixel
/// gets the mean score of the patches covering it; uncovered pixels get 0.
ProbMap stitch(const PredMatrix &scores, const PatchGrid &grid, int height, int width);

} // namespace histoens
