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

#include "histoens/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "histoens/error.hpp"

namespace histoens::nn {

Var softmax_ce(const Var &logits, std::span<const int> labels) {
  const Tensor &z = logits.value();
  require(z.rank() == 2 || z.rank() == 4, "softmax_ce: logits must be (N,K) or (N,K,H,W)");
  const int N = z.dim(0), K = z.dim(1);
  const std::size_t plane = z.rank() == 4 ? static_cast<std::size_t>(z.dim(2)) * z.dim(3) : 1;
  const std::size_t count = static_cast<std::size_t>(N) * plane;
  require(labels.size() == count, "softmax_ce: label count does not match logits");
  for (int l : labels) {
    if (l < 0 || l >= K) {
      throw ValidationError("softmax_ce: label " + std::to_string(l) + " out of range 0.." +
                            std::to_string(K - 1));
    }
  }

  // Per-position softmax kept for the backward pass.
  std::vector<double> prob(z.size());
  std::vector<std::uint8_t> active(count);
  double loss = 0.0;
  for (int n = 0; n < N; ++n)
    for (std::size_t p = 0; p < plane; ++p) {
      auto idx = [&](int k) { return (static_cast<std::size_t>(n) * K + k) * plane + p; };
      double mx = z[idx(0)];
      for (int k = 1; k < K; ++k)
        mx = std::max(mx, static_cast<double>(z[idx(k)]));
      double sum = 0.0;
      for (int k = 0; k < K; ++k)
        sum += std::exp(z[idx(k)] - mx);
      for (int k = 0; k < K; ++k)
        prob[idx(k)] = std::exp(z[idx(k)] - mx) / sum;
      const std::size_t pos = static_cast<std::size_t>(n) * plane + p;
      const double py = prob[idx(labels[pos])];
      const double clamped = std::clamp(py, kProbEpsilon, 1.0 - kProbEpsilon);
      active[pos] = (py == clamped);
      loss -= std::log(clamped);
    }
  loss /= static_cast<double>(count);

  std::vector<int> lab(labels.begin(), labels.end());
  return make_result(Tensor({1}, static_cast<float>(loss)), {logits},
                     [prob = std::move(prob), active = std::move(active), lab = std::move(lab), N, K,
                      plane, count](Node &self) {
                       Node &p = *self.parents[0];
                       if (!p.requires_grad)
                         return;
                       Tensor &dz = p.grad_buffer();
                       const double g = self.grad[0] / static_cast<double>(count);
                       for (int n = 0; n < N; ++n)
                         for (std::size_t q = 0; q < plane; ++q) {
                           const std::size_t pos = static_cast<std::size_t>(n) * plane + q;
                           if (!active[pos])
                             continue;
                           for (int k = 0; k < K; ++k) {
                             const std::size_t i = (static_cast<std::size_t>(n) * K + k) * plane + q;
                             dz[i] += static_cast<float>(g * (prob[i] - (k == lab[pos] ? 1.0 : 0.0)));
                           }
                         }
                     });
}

Var binary_logloss(const Var &prob, const Tensor &target) {
  const Tensor &pv = prob.value();
  require(target.size() == pv.size(), "binary_logloss: target size " + target.shape_string() +
                                          " does not match prediction " + pv.shape_string());
  require(pv.size() > 0, "binary_logloss: empty input");
  double loss = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double t = target[i];
    require(t >= 0.0 && t <= 1.0, "binary_logloss: target outside [0,1]");
    const double p = std::clamp(static_cast<double>(pv[i]), kProbEpsilon, 1.0 - kProbEpsilon);
    loss -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  const double n = static_cast<double>(pv.size());
  loss /= n;
  return make_result(Tensor({1}, static_cast<float>(loss)), {prob}, [target, n](Node &self) {
    Node &pn = *self.parents[0];
    if (!pn.requires_grad)
      return;
    Tensor &dp = pn.grad_buffer();
    const double g = self.grad[0] / n;
    for (std::size_t i = 0; i < dp.size(); ++i) {
      const double raw = pn.value[i];
      if (raw < kProbEpsilon || raw > 1.0 - kProbEpsilon)
        continue; // clamped: locally constant
      const double t = target[i];
      dp[i] += static_cast<float>(g * (-t / raw + (1.0 - t) / (1.0 - raw)));
    }
  });
}

Var weighted_boundary_logloss(const Var &prob, const Tensor &target_mask, const Tensor &weights) {
  require(target_mask.size() == prob.value().size() && weights.size() == prob.value().size(),
          "weighted_boundary_logloss: shape mismatch");
  Tensor soft(prob.shape());
  for (std::size_t i = 0; i < soft.size(); ++i) {
    require(target_mask[i] == 0.0f || target_mask[i] == 1.0f,
            "weighted_boundary_logloss: mask must be binary");
    soft[i] = weights[i] * target_mask[i];
  }
  return binary_logloss(prob, soft);
}

namespace {

// Exact 1-D squared distance transform of a sampled function by the lower
// envelope of parabolas rooted at each sample.
void distance_1d(const double *f, int n, double *d, int *v, double *z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf)
      continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // Only reachable at k == 0: q dominates the whole envelope.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d, d + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q)
      ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

} // namespace

std::vector<double> squared_distance_transform(std::span<const std::uint8_t> feature, int height,
                                               int width) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = static_cast<std::size_t>(height) * width;
  require(feature.size() == n, "distance transform: size mismatch");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i)
    grid[i] = feature[i] ? 0.0 : kInf;

  const int len = std::max(height, width);
  std::vector<double> f(static_cast<std::size_t>(len)), d(static_cast<std::size_t>(len));
  std::vector<int> v(static_cast<std::size_t>(len));
  std::vector<double> z(static_cast<std::size_t>(len) + 1);
  // Columns, then rows.
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < height; ++r)
      f[r] = grid[static_cast<std::size_t>(r) * width + c];
    distance_1d(f.data(), height, d.data(), v.data(), z.data());
    for (int r = 0; r < height; ++r)
      grid[static_cast<std::size_t>(r) * width + c] = d[r];
  }
  for (int r = 0; r < height; ++r) {
    std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * width), width,
                f.begin());
    distance_1d(f.data(), width, d.data(), v.data(), z.data());
    std::copy_n(d.begin(), width, grid.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r) * width));
  }
  return grid;
}

std::vector<float> boundary_weights(const LabelMask &mask, double ramp) {
  require(ramp >= 1.0, "boundary_weights: ramp must be >= 1 pixel");
  const int H = mask.height(), W = mask.width();
  std::vector<std::uint8_t> boundary(static_cast<std::size_t>(H) * W, 0);
  bool any = false;
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const auto v = mask.at(r, c);
      const bool edge = (r > 0 && mask.at(r - 1, c) != v) || (r + 1 < H && mask.at(r + 1, c) != v) ||
                        (c > 0 && mask.at(r, c - 1) != v) || (c + 1 < W && mask.at(r, c + 1) != v);
      boundary[static_cast<std::size_t>(r) * W + c] = edge ? 1 : 0;
      any = any || edge;
    }
  std::vector<float> w(boundary.size(), 1.0f);
  if (!any)
    return w;
  const auto d2 = squared_distance_transform(boundary, H, W);
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<float>(std::min(1.0, std::sqrt(d2[i]) / ramp));
  return w;
}

} // namespace histoens::nn
