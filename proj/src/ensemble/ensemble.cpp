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

#include "histoens/ensemble.hpp"

#include <algorithm>
#include <cmath>

namespace histoens {

ProbMap blend_binary(const ProbMap &a, const ProbMap &b, double w) {
  require(a.classes() == 1 && b.classes() == 1, "blend_binary expects single-channel maps");
  require(a.same_shape(b), "blend_binary: map shapes differ");
  require(w >= 0.0 && w <= 1.0, "blend weight must lie in [0, 1]");
  std::vector<float> out(a.plane_size());
  const auto va = a.values(), vb = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = w * va[i] + (1.0 - w) * vb[i];
    out[i] = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
  }
  return ProbMap(1, a.height(), a.width(), std::move(out));
}

LabelMask compose_multiclass(const LabelMask &binary, const LabelMask &multiclass) {
  require(binary.same_shape(multiclass), "compose_multiclass: mask shapes differ");
  require(binary.is_binary(), "compose_multiclass: first mask must be binary");
  std::vector<std::uint8_t> out(binary.size());
  const auto b = binary.labels(), m = multiclass.labels();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(3 * b[i] + m[i] * (1 - b[i]));
  return LabelMask(binary.height(), binary.width(), std::move(out));
}

LabelMask shifted_blend(const LabelMask &binary) {
  require(binary.is_binary(), "shifted_blend expects a binary mask");
  std::vector<std::uint8_t> out(binary.size());
  const auto b = binary.labels();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(1 + 2 * b[i]);
  return LabelMask(binary.height(), binary.width(), std::move(out));
}

PredMatrix average_predictions(const std::vector<PredMatrix> &matrices) {
  require(!matrices.empty(), "average_predictions: no matrices");
  const int rows = matrices[0].rows(), cols = matrices[0].cols();
  std::vector<double> sum(static_cast<std::size_t>(rows) * cols, 0.0);
  for (const PredMatrix &m : matrices) {
    require(m.rows() == rows && m.cols() == cols, "average_predictions: matrix shapes differ");
    const auto v = m.values();
    for (std::size_t i = 0; i < sum.size(); ++i)
      sum[i] += v[i];
  }
  std::vector<float> out(sum.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(static_cast<float>(sum[i] / static_cast<double>(matrices.size())), 0.0f, 1.0f);
  return PredMatrix(rows, cols, std::move(out));
}

ProbMap stitch(const PredMatrix &scores, const PatchGrid &grid, int height, int width) {
  require(height > 0 && width > 0, "stitch: output size must be positive");
  require(scores.cols() == 1, "stitch expects one score per patch");
  require(static_cast<std::size_t>(scores.rows()) == grid.origins.size(),
          "stitch: score rows must match the grid's patch count");
  const std::size_t n = static_cast<std::size_t>(height) * width;
  std::vector<double> sum(n, 0.0);
  std::vector<int> count(n, 0);
  for (std::size_t p = 0; p < grid.origins.size(); ++p) {
    const PatchOrigin o = grid.origins[p];
    require(o.row >= 0 && o.col >= 0 && o.row + grid.spec.patch_h <= height && o.col + grid.spec.patch_w <= width,
            "stitch: patch falls outside the output");
    const double s = scores.at(static_cast<int>(p), 0);
    for (int r = o.row; r < o.row + grid.spec.patch_h; ++r)
      for (int c = o.col; c < o.col + grid.spec.patch_w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * width + c;
        sum[i] += s;
        ++count[i];
      }
  }
  std::vector<float> out(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0)
      out[i] = std::clamp(static_cast<float>(sum[i] / count[i]), 0.0f, 1.0f);
  return ProbMap(1, height, width, std::move(out));
}

} // namespace histoens
