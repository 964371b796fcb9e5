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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "histoens/metrics.hpp"
#include "histoens/postprocess.hpp"

namespace histoens::demo {

struct DemoConfig {
  std::uint64_t seed = 7;
  int size = 512;          ///< synthetic slides are size x size
  int train_slides = 3;
  int downsample = 4;      ///< factor for the whole-slide networks
  int depth = 2;
  int base_channels = 8;
  int skip_convs = 1;
  int patch = 64;          ///< training crop of the patch network
  int patch_batch = 4;
  int tile = 128;          ///< inference tile of the patch network
  int tile_stride = 64;
  int epochs = 30;
  int steps_per_epoch = 10;
  double boundary_ramp = 4.0;
  double blend_weight = 0.5;
  PostprocessConfig post;
};

struct DemoRow {
  std::string method;
  SegScore score;
  /// Score with the "ground truth or prediction abnormal" gate, for
  /// comparison only.
  double bach_either = 0.0;
};

struct DemoReport {
  std::vector<DemoRow> rows;
  const DemoRow &row(const std::string &method) const;
  /// method,bach,dice_b,dice_is,dice_iv,dice_abnormal
  std::string csv() const;
};

inline constexpr const char *kEnsembleRow = "T-Net ensemble";
inline constexpr const char *kShiftedRow = "T-Net shifted blending";

/// Trains the three segmentation networks on synthetic slides and scores
/// every stage on a held-out slide. Progress goes to `log` when non-null.
DemoReport run_demo(const DemoConfig &config, std::ostream *log = nullptr);

} // namespace histoens::demo
