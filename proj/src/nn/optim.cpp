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

#include "histoens/nn/optim.hpp"

#include <cmath>

#include "histoens/error.hpp"

namespace histoens::nn {

double lr_at(const AdamConfig &config, int epoch) {
  require(epoch >= 0, "lr_at: epoch must be >= 0");
  require(config.halving_period >= 1, "lr_at: halving period must be >= 1");
  return std::ldexp(config.lr0, -(epoch / config.halving_period));
}

Adam::Adam(std::vector<Var> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const Var &p : params_) {
    m_.emplace_back(p.value().size(), 0.0);
    v_.emplace_back(p.value().size(), 0.0);
  }
}

void Adam::step(int epoch) {
  for (const Var &p : params_) {
    if (p.grad().size() != 0 && !p.grad().all_finite()) {
      throw ValidationError("adam: non-finite gradient");
    }
  }
  ++t_;
  const double lr = lr_at(epoch);
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var p = params_[i];
    const Tensor &g = p.grad();
    if (g.size() == 0)
      continue; // never received a gradient
    auto w = p.value().data();
    auto &m = m_[i];
    auto &v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * gj;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] = static_cast<float>(w[j] - lr * mhat / (std::sqrt(vhat) + config_.epsilon));
    }
  }
}

} // namespace histoens::nn
