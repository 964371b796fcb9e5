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

namespace histoens {

struct PostprocessConfig {
  int blur_kernel = 11;
  double blur_sigma = 11.0 / 6.0;
  double threshold = 0.5;
  int closing_size = 11;
  double area_exponent = 2.0;

  void validate() const;
};

/// A 4-connected foreground region. `pixels` holds row-major indices in
/// raster order.
struct Component {
  int label = 0; ///< 1-based, in order of first appearance in raster scan
  std::vector<std::size_t> pixels;
  std::size_t area() const noexcept { return pixels.size(); }
};

/// Separable k x k Gaussian blur of a single-channel map; the kernel is
/// renormalized over the part that falls inside the image.
ProbMap gaussian_blur(const ProbMap &map, int kernel, double sigma);

/// 1 where value >= t.
LabelMask threshold(const ProbMap &map, double t);

/// Dilation then erosion of a binary mask with a size x size square.
LabelMask closing(const LabelMask &mask, int size);

/// 4-connected components of the nonzero pixels.
std::vector<Component> components(const LabelMask &mask);

/// Power-mean area threshold T = (mean(area^a))^(1/a) over all components.
double area_threshold(const std::vector<Component> &comps, double a);

/// Keeps components whose area is not less than area_threshold(). Empty in,
/// empty out.
std::vector<Component> area_filter(const std::vector<Component> &comps, double a);

/// Blur, threshold, closing, then the area filter; discarded components
/// are zeroed.
LabelMask postprocess_chain(const ProbMap &map, const PostprocessConfig &config = {});

} // namespace histoens
