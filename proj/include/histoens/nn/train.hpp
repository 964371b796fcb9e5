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

#include <span>
#include <vector>

#include "histoens/image.hpp"
#include "histoens/nn/model.hpp"
#include "histoens/nn/optim.hpp"
#include "histoens/rng.hpp"
#include "histoens/tiling.hpp"

namespace histoens::nn {

/// Fixed multiplier applied after mean subtraction so 8-bit intensities land
/// near unit scale.
inline constexpr float kInputScale = 1.0f / 64.0f;

/// (N,C,H,W) tensor from same-shaped interleaved float images, multiplied
/// by `scale`.
Tensor images_to_tensor(std::span<const ImageF> images, float scale = kInputScale);

enum class SegLoss { Binary, WeightedBoundary, Multiclass };

struct SegTrainConfig {
  int epochs = 150;
  int steps_per_epoch = 10;
  int batch = 40;
  /// Square training crop; 0 trains on whole images (all images must then
  /// share one size).
  int patch = 300;
  SegLoss loss = SegLoss::Binary;
  /// Ramp width of the weighted-boundary loss, pixels.
  double boundary_ramp = 8.0;
  MeanScope scope = MeanScope::PerPatch;
  AdamConfig adam;
};

struct TrainHistory {
  /// Mean training loss of each epoch.
  std::vector<double> epoch_loss;
};

/// Trains a segmentation network. Binary losses use the target "class > 0";
/// the multiclass loss uses raw class ids. Deterministic given `rng`.
TrainHistory train_segmentation(const Model &model, std::span<const Image8> images,
                                std::span<const LabelMask> masks, const SegTrainConfig &config, Rng &rng);

/// Whole-image inference. One output channel yields a sigmoid map; several
/// yield a per-pixel softmax.
ProbMap predict_segmentation(const Model &model, const Image8 &image);

/// Runs a segmentation net on every grid patch and averages overlapping
/// outputs; pixels no patch covers get probability 0.
ProbMap predict_segmentation_tiled(const Model &model, const Image8 &image, const PatchSpec &spec,
                                   MeanScope scope = MeanScope::PerPatch);

struct ClsTrainConfig {
  int epochs = 120;
  int steps_per_epoch = 300;
  int batch = 10;
  int patch = 500;
  MeanScope scope = MeanScope::PerPatch;
  /// -1 trains a multiclass softmax head; k >= 0 trains class k vs all with a
  /// single sigmoid output.
  int one_vs_all = -1;
  AdamConfig adam;
};

/// Trains a patch classifier on uniformly sampled patches; each patch takes
/// its image's label.
TrainHistory train_classifier(const Model &model, std::span<const Image8> images, std::span<const int> labels,
                              const ClsTrainConfig &config, Rng &rng);

/// Class probabilities for every grid patch: softmax rows for multi-output
/// nets, a single sigmoid column for one-output nets.
PredMatrix predict_patches(const Model &model, const Image8 &image, const PatchGrid &grid,
                           MeanScope scope = MeanScope::PerPatch);

} // namespace histoens::nn
