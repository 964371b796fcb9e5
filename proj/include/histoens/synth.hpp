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

#include "histoens/image.hpp"
#include "histoens/rng.hpp"

namespace histoens {

/// Parameters of a synthetic H&E-like slide.
struct SynthSpec {
  int height = 1024;
  int width = 1024;
  /// Target pixel fractions of Normal, Benign, InSitu, Invasive.
  std::array<double, 4> priors = {0.75, 0.01, 0.01, 0.23};
  /// Blobs per abnormal class, inclusive range.
  int min_blobs = 1;
  int max_blobs = 3;
  /// Standard deviation of per-pixel noise, in 8-bit intensity units.
  double noise_level = 8.0;

  /// Throws ValidationError when the spec cannot be rendered.
  void validate() const;
};

struct SynthSlide {
  Image8 image;
  LabelMask mask;
};

/// Renders an RGB slide of smooth per-class textures plus noise, and its
/// ground truth. Each abnormal region is a single 4-connected, hole-free
/// blob; blobs never touch each other. Pure function of (spec, rng state).
SynthSlide synth_slide(const SynthSpec &spec, Rng &rng);

/// Mean RGB color used for each class before texture and noise.
std::array<std::array<double, 3>, 4> class_colors();

} // namespace histoens
