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

#include "histoens/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace histoens::kernels::serial {

void conv2d_forward(const ConvShape &s, std::span<const float> x, std::span<const float> weights,
                    std::span<const float> bias, std::span<float> y) {
  assert(x.size() == s.input_size() && y.size() == s.output_size());
  assert(weights.size() == s.weight_size() && bias.size() == static_cast<std::size_t>(s.out_channels));
  const int pad = s.kernel / 2;
  const int H = s.height, W = s.width, K = s.kernel;
  for (int n = 0; n < s.batch; ++n)
    for (int oc = 0; oc < s.out_channels; ++oc)
      for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
          double acc = bias[oc];
          for (int ic = 0; ic < s.in_channels; ++ic)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                const int rr = r + ky - pad, cc = c + kx - pad;
                if (rr < 0 || rr >= H || cc < 0 || cc >= W)
                  continue;
                acc += static_cast<double>(weights[((oc * s.in_channels + ic) * K + ky) * K + kx]) *
                       x[((static_cast<std::size_t>(n) * s.in_channels + ic) * H + rr) * W + cc];
              }
          y[((static_cast<std::size_t>(n) * s.out_channels + oc) * H + r) * W + c] = static_cast<float>(acc);
        }
}

void conv2d_backward_input(const ConvShape &s, std::span<const float> dy,
                           std::span<const float> weights, std::span<float> dx) {
  const int pad = s.kernel / 2;
  const int H = s.height, W = s.width, K = s.kernel;
  for (int n = 0; n < s.batch; ++n)
    for (int ic = 0; ic < s.in_channels; ++ic)
      for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
          double acc = 0.0;
          for (int oc = 0; oc < s.out_channels; ++oc)
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) {
                // y[r'] reads x[r' + ky - pad]; solve for r'.
                const int rr = r - ky + pad, cc = c - kx + pad;
                if (rr < 0 || rr >= H || cc < 0 || cc >= W)
                  continue;
                acc += static_cast<double>(weights[((oc * s.in_channels + ic) * K + ky) * K + kx]) *
                       dy[((static_cast<std::size_t>(n) * s.out_channels + oc) * H + rr) * W + cc];
              }
          dx[((static_cast<std::size_t>(n) * s.in_channels + ic) * H + r) * W + c] = static_cast<float>(acc);
        }
}

void conv2d_backward_params(const ConvShape &s, std::span<const float> x, std::span<const float> dy,
                            std::span<float> dweights, std::span<float> dbias) {
  const int pad = s.kernel / 2;
  const int H = s.height, W = s.width, K = s.kernel;
  for (int oc = 0; oc < s.out_channels; ++oc) {
    double db = 0.0;
    for (int n = 0; n < s.batch; ++n)
      for (int i = 0; i < H * W; ++i)
        db += dy[(static_cast<std::size_t>(n) * s.out_channels + oc) * H * W + i];
    dbias[oc] += static_cast<float>(db);
    for (int ic = 0; ic < s.in_channels; ++ic)
      for (int ky = 0; ky < K; ++ky)
        for (int kx = 0; kx < K; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < s.batch; ++n)
            for (int r = 0; r < H; ++r)
              for (int c = 0; c < W; ++c) {
                const int rr = r + ky - pad, cc = c + kx - pad;
                if (rr < 0 || rr >= H || cc < 0 || cc >= W)
                  continue;
                acc += static_cast<double>(
                           dy[((static_cast<std::size_t>(n) * s.out_channels + oc) * H + r) * W + c]) *
                       x[((static_cast<std::size_t>(n) * s.in_channels + ic) * H + rr) * W + cc];
              }
          dweights[((oc * s.in_channels + ic) * K + ky) * K + kx] += static_cast<float>(acc);
        }
  }
}

void separable_filter_renorm(std::span<const float> in, int height, int width,
                             std::span<const double> taps, std::span<float> out) {
  // Direct 2-D evaluation of the outer-product kernel over the clipped window.
  const int rad = static_cast<int>(taps.size()) / 2;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double acc = 0.0, norm = 0.0;
      for (int dy = -rad; dy <= rad; ++dy)
        for (int dx = -rad; dx <= rad; ++dx) {
          const int rr = r + dy, cc = c + dx;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width)
            continue;
          const double wgt = taps[dy + rad] * taps[dx + rad];
          acc += wgt * in[static_cast<std::size_t>(rr) * width + cc];
          norm += wgt;
        }
      out[static_cast<std::size_t>(r) * width + c] = static_cast<float>(acc / norm);
    }
}

namespace {

template <typename Pick>
void morph_square(std::span<const std::uint8_t> in, int height, int width, int size,
                  std::span<std::uint8_t> out, Pick pick) {
  const int rad = size / 2;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      std::uint8_t v = in[static_cast<std::size_t>(r) * width + c];
      for (int rr = std::max(0, r - rad); rr <= std::min(height - 1, r + rad); ++rr)
        for (int cc = std::max(0, c - rad); cc <= std::min(width - 1, c + rad); ++cc)
          v = pick(v, in[static_cast<std::size_t>(rr) * width + cc]);
      out[static_cast<std::size_t>(r) * width + c] = v;
    }
}

} // namespace

void dilate_square(std::span<const std::uint8_t> in, int height, int width, int size,
                   std::span<std::uint8_t> out) {
  morph_square(in, height, width, size, out, [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); });
}

void erode_square(std::span<const std::uint8_t> in, int height, int width, int size,
                  std::span<std::uint8_t> out) {
  morph_square(in, height, width, size, out, [](std::uint8_t a, std::uint8_t b) { return std::min(a, b); });
}

} // namespace histoens::kernels::serial

namespace histoens::kernels {

std::vector<double> gaussian_taps(int size, double sigma) {
  const int rad = size / 2;
  std::vector<double> taps(static_cast<std::size_t>(2 * rad + 1));
  double sum = 0.0;
  for (int i = -rad; i <= rad; ++i) {
    taps[static_cast<std::size_t>(i + rad)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += taps[static_cast<std::size_t>(i + rad)];
  }
  for (double &t : taps)
    t /= sum;
  return taps;
}

} // namespace histoens::kernels
