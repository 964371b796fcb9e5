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

#include "histoens/nn/tensor.hpp"

namespace histoens::nn {

struct AdamConfig {
  double lr0 = 0.01;
  /// The learning rate halves every `halving_period` epochs.
  int halving_period = 20;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// lr0 * 2^(-floor(epoch / halving_period)).
double lr_at(const AdamConfig &config, int epoch);

/// Adam with bias correction over a fixed parameter list.
class Adam {
public:
  Adam(std::vector<Var> params, AdamConfig config = {});

  /// Applies one update using the parameters' accumulated gradients and the
  /// learning rate of `epoch`. Throws ValidationError on a non-finite
  /// gradient before touching any parameter.
  void step(int epoch);

  double lr_at(int epoch) const { return nn::lr_at(config_, epoch); }
  long steps_taken() const noexcept { return t_; }
  const AdamConfig &config() const noexcept { return config_; }

private:
  std::vector<Var> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

} // namespace histoens::nn
