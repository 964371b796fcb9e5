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
#include <utility>
#include <vector>

#include "histoens/image.hpp"
#include "histoens/rng.hpp"

namespace histoens {

struct PatchSpec {
  int patch_h = 500;
  int patch_w = 500;
  int stride = 100;
};

struct PatchOrigin {
  int row = 0;
  int col = 0;
  bool operator==(const PatchOrigin &) const = default;
};

/// Top-left corners of a strided grid, row-major.
struct PatchGrid {
  PatchSpec spec;
  int rows = 0; ///< grid positions along the image height
  int cols = 0; ///< grid positions along the image width
  std::vector<PatchOrigin> origins;
};

enum class MeanScope { WholeImage, PerPatch };

/// Per-channel sample means (double precision).
std::vector<double> channel_means(const ImageF &img);

/// Subtracts each channel's mean over the whole input. Output is float.
template <typename T> ImageF mean_subtract(const BasicImage<T> &img);
/// Subtracts externally computed per-channel means.
ImageF subtract_means(const ImageF &img, const std::vector<double> &means);

/// Block-mean downsampling; edge blocks are truncated and averaged over the
/// pixels they actually contain. Output is ceil(H/f) x ceil(W/f).
template <typename T> ImageF downsample(const BasicImage<T> &img, int factor);
/// Output size of downsample() without touching pixels: {ceil(H/f), ceil(W/f)}.
std::pair<int, int> downsampled_size(int height, int width, int factor);
/// Per-block majority vote; ties go to the larger class id (abnormal wins).
LabelMask downsample_labels(const LabelMask &mask, int factor);
/// Nearest-neighbour expansion to an explicit target size.
LabelMask upsample_labels(const LabelMask &mask, int height, int width);
ProbMap upsample_probmap(const ProbMap &map, int height, int width);

/// Exact crop. Throws when the patch does not fit.
template <typename T>
BasicImage<T> crop(const BasicImage<T> &img, PatchOrigin origin, int patch_h, int patch_w);
LabelMask crop(const LabelMask &mask, PatchOrigin origin, int patch_h, int patch_w);

/// Uniformly distributed origin over every valid top-left position.
PatchOrigin random_origin(int height, int width, const PatchSpec &spec, Rng &rng);

template <typename T> struct RandomPatch {
  BasicImage<T> patch;
  PatchOrigin origin;
};
template <typename T>
RandomPatch<T> random_patch(const BasicImage<T> &img, const PatchSpec &spec, Rng &rng);

/// Strided grid without padding: trailing margins narrower than the stride
/// are not covered.
PatchGrid grid_patches(int height, int width, const PatchSpec &spec);
template <typename T> PatchGrid grid_patches(const BasicImage<T> &img, const PatchSpec &spec) {
  return grid_patches(img.height(), img.width(), spec);
}

/// Crops one patch and applies mean subtraction in the requested scope.
/// `whole_means` must hold the image's channel means when scope is
/// WholeImage (see channel_means).
ImageF preprocess_patch(const ImageF &img, PatchOrigin origin, const PatchSpec &spec, MeanScope scope,
                        const std::vector<double> &whole_means);

} // namespace histoens
